"""Logits -> pitch contour via the local expected value around the argmax
bin. No smoothing and no dynamic-programming pass: each frame is decoded
independently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import PitchContour
from .grid import PitchGrid
from .losses import softmax_rows


@dataclass(frozen=True)
class DecoderConfig:
    half_width: int = 9
    voicing_threshold: float = 0.90

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError("half_width must be >= 1")
        if not 0.0 <= self.voicing_threshold <= 1.0:
            raise ValueError("voicing_threshold must be in [0, 1]")


def decode_probs(probs: np.ndarray, grid: PitchGrid, cfg: DecoderConfig):
    """Vectorized per-frame decode of a (T, B) probability matrix.

    Returns (f_hat, confidence, voiced). The window always spans exactly
    2*half_width + 1 bins: near the grid edges it is shifted inward rather
    than truncated, so confidence stays comparable across all frames.
    Probabilities are renormalized inside the window for the frequency
    estimate, while confidence is the raw mass inside the window. Argmax
    ties break toward the lower bin.
    """
    probs = np.asarray(probs, dtype=np.float64)
    t, b = probs.shape
    if t == 0:
        z = np.zeros(0)
        return z, z, np.zeros(0, dtype=bool)
    best = probs.argmax(axis=1)  # ties -> lowest index
    width = 2 * cfg.half_width + 1
    lo = np.clip(best - cfg.half_width, 0, max(b - width, 0))
    hi = np.minimum(lo + width - 1, b - 1)
    cols = np.arange(b)[None, :]
    in_window = (cols >= lo[:, None]) & (cols <= hi[:, None])
    windowed = np.where(in_window, probs, 0.0)
    mass = windowed.sum(axis=1)
    f_hat = (windowed @ grid.centers) / mass
    conf = np.minimum(mass, 1.0)  # guard against float sums a hair over 1
    voiced = conf >= cfg.voicing_threshold
    return f_hat, conf, voiced


def decode_frame(probs_row: np.ndarray, grid: PitchGrid, cfg: DecoderConfig):
    f, c, v = decode_probs(np.asarray(probs_row)[None, :], grid, cfg)
    return float(f[0]), float(c[0]), bool(v[0])


def decode_contour(logits: np.ndarray, grid: PitchGrid, cfg: DecoderConfig,
                   hop_seconds: float) -> PitchContour:
    probs = softmax_rows(logits) if len(logits) else np.zeros((0, grid.n_bins))
    f_hat, conf, voiced = decode_probs(probs, grid, cfg)
    return PitchContour(hop_seconds=hop_seconds, f0_hz=f_hat,
                        confidence=conf, voiced=voiced)
