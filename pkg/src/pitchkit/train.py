"""Training loop: random voiced-centered half-second segments, waveform
augmentation, spectral front-end, joint loss, Adam updates. Fully
deterministic under a fixed master seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model as net
from .augment import AugmentConfig, augment
from .audio_io import AudioBuffer, PitchContour
from .dsp import StftConfig, band_select, log_compress, rfft_radix2, hann_window
from .errors import ArgumentError, DivergenceError, SkipExample
from .grid import PitchGrid
from .losses import loss_total

SEGMENT_SECONDS = 0.5


@dataclass
class TrainConfig:
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 10
    lam: float = 1.0
    gain_db_range: tuple = (-6.0, 6.0)
    snr_db_range: tuple = (10.0, 30.0)
    noise_signals: list = field(default_factory=list)
    dtype: type = np.float32


class Adam:
    """Per-tensor adaptive optimizer state."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        for name, p in params.items():
            g = grads[name].astype(p.dtype)
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            self.m[name] = c.beta1 * self.m[name] + (1 - c.beta1) * g
            self.v[name] = c.beta2 * self.v[name] + (1 - c.beta2) * g * g
            p -= (c.lr * (self.m[name] / bc1)
                  / (np.sqrt(self.v[name] / bc2) + c.adam_eps)).astype(p.dtype)


def batch_spectrogram(segments: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """(B, L) waveforms -> (B, T, K) log-magnitude spectrograms."""
    b, length = segments.shape
    n, h = cfg.window_len, cfg.hop
    t = (length - n) // h + 1
    starts = np.arange(t) * h
    frames = segments[:, starts[:, None] + np.arange(n)[None, :]]
    frames = (frames * hann_window(n)).reshape(b * t, n)
    mag = np.abs(rfft_radix2(frames)).reshape(b, t, n // 2 + 1)
    out = np.empty((b, t, cfg.n_bands))
    for i in range(b):
        out[i] = log_compress(band_select(mag[i], cfg), cfg.epsilon)
    return out


def extract_segment(buf: AudioBuffer, truth: PitchContour, rng,
                    stft_cfg: StftConfig):
    """Random hop-aligned 0.5 s window centered on a voiced frame.

    Returns (segment samples, target f0 per segment frame, voiced mask).
    """
    h, n = stft_cfg.hop, stft_cfg.window_len
    seg_len = int(SEGMENT_SECONDS * stft_cfg.sample_rate_hz)
    if len(buf.samples) < seg_len:
        raise SkipExample("file shorter than one training segment")
    seg_frames = (seg_len - n) // h + 1
    voiced_idx = np.flatnonzero(truth.voiced)
    if len(voiced_idx) == 0:
        raise SkipExample("no voiced frames")
    center = int(rng.choice(voiced_idx))
    max_start_frame = (len(buf.samples) - seg_len) // h
    start_frame = int(np.clip(center - seg_frames // 2, 0, max_start_frame))
    s0 = start_frame * h
    seg = buf.samples[s0:s0 + seg_len]
    idx = start_frame + np.arange(seg_frames)
    idx = np.minimum(idx, len(truth) - 1)
    return seg, truth.f0_hz[idx], truth.voiced[idx].copy()


def train_loop(corpus, cfg: TrainConfig, stft_cfg: StftConfig | None = None,
               grid: PitchGrid | None = None, params: net.ModelParams = None,
               log_callback=None):
    """Train on (AudioBuffer, PitchContour) pairs.

    Returns (params, history) where history is a list of per-epoch dicts
    with keys epoch/loss/ce/cents.
    """
    corpus = list(corpus)
    if not corpus:
        raise ArgumentError("empty corpus")
    stft_cfg = stft_cfg or StftConfig()
    grid = grid or PitchGrid()
    rng = np.random.default_rng(cfg.seed)
    if params is None:
        params = net.init_params(int(rng.integers(2 ** 31)), dtype=cfg.dtype)
    aug_cfg = AugmentConfig(gain_db_range=cfg.gain_db_range,
                            snr_db_range=cfg.snr_db_range,
                            noise_signals=cfg.noise_signals)
    opt = Adam(cfg)
    trainable = params.trainable()
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(corpus))
        losses, ces, cents_l = [], [], []
        for lo in range(0, len(order), cfg.batch_size):
            batch = order[lo:lo + cfg.batch_size]
            segs, f0s, masks = [], [], []
            for j in batch:
                buf, truth = corpus[j]
                try:
                    seg, f0, mask = extract_segment(buf, truth, rng, stft_cfg)
                    seg = augment(seg, aug_cfg, rng)
                except SkipExample:
                    continue
                segs.append(seg)
                f0s.append(f0)
                masks.append(mask)
            if not segs:
                continue
            spec = batch_spectrogram(np.stack(segs), stft_cfg)
            f0 = np.stack(f0s)
            mask = np.stack(masks)
            # frames with no defined pitch get a dummy target outside the loss
            f0_safe = np.where(mask & np.isfinite(f0), f0, grid.f_min)
            targets = grid.freq_to_bin(f0_safe.reshape(-1))
            logits, cache = net.forward_batch(params, spec, train=True)
            flat = logits.reshape(-1, grid.n_bins)
            total, d_flat, ce, cents = loss_total(
                flat, targets, f0_safe.reshape(-1), grid,
                mask.reshape(-1), lam=cfg.lam)
            if not np.isfinite(total):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            grads, _ = net.backward_batch(params, cache,
                                          d_flat.reshape(logits.shape))
            opt.step(trainable, grads)
            losses.append(total)
            ces.append(ce)
            cents_l.append(cents)
        entry = {"epoch": epoch, "loss": float(np.mean(losses)),
                 "ce": float(np.mean(ces)), "cents": float(np.mean(cents_l))}
        history.append(entry)
        if log_callback is not None:
            log_callback(entry)
    return params, history
