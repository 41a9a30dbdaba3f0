"""Parametric harmonic synthesizer with exact ground-truth pitch.

Signals are sums of harmonics of a phase-continuous fundamental, so the
per-frame F0 labels are exact by construction rather than estimated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer, CANONICAL_SR, F_MAX_HZ, F_MIN_HZ, PitchContour
from .dsp import StftConfig
from .errors import ArgumentError


@dataclass
class SynthSpec:
    """Trajectory kinds: 'constant', 'glide' (log-linear f0->f1), 'vibrato'."""

    kind: str = "constant"
    f0_hz: float = 220.0
    f1_hz: float = 220.0            # glide endpoint
    vibrato_rate_hz: float = 5.0
    vibrato_depth_cents: float = 50.0
    n_harmonics: int = 5
    rolloff: float = 1.0            # amplitude of harmonic h is h**-rolloff
    duration_s: float = 1.0
    sample_rate_hz: int = CANONICAL_SR
    phase0: float = 0.0


def f0_trajectory(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    """Instantaneous fundamental at times t (seconds)."""
    if spec.kind == "constant":
        f0 = np.full_like(t, spec.f0_hz)
    elif spec.kind == "glide":
        # log-domain glide: constant cents/second
        frac = t / max(t[-1], 1e-12) if len(t) else t
        f0 = spec.f0_hz * (spec.f1_hz / spec.f0_hz) ** frac
    elif spec.kind == "vibrato":
        ratio = 2.0 ** (spec.vibrato_depth_cents / 1200.0
                        * np.sin(2.0 * np.pi * spec.vibrato_rate_hz * t))
        f0 = spec.f0_hz * ratio
    else:
        raise ArgumentError(f"unknown trajectory kind {spec.kind!r}")
    return f0


def synth_example(spec: SynthSpec, cfg: StftConfig | None = None):
    """Render the signal and its exact hop-grid contour.

    Returns (AudioBuffer, PitchContour). Contour frame m carries the
    instantaneous F0 at the center of analysis frame m (samples
    [m*hop, m*hop + window)), timestamped at m*hop/fs.
    """
    cfg = cfg or StftConfig()
    sr = spec.sample_rate_hz
    n = int(round(spec.duration_s * sr))
    t = np.arange(n) / sr
    f0 = f0_trajectory(spec, t)
    if np.any(f0 < F_MIN_HZ) or np.any(f0 > F_MAX_HZ):
        raise ArgumentError("trajectory leaves the supported pitch range")
    if spec.n_harmonics < 1:
        raise ArgumentError("need at least one harmonic")

    phase = spec.phase0 + np.cumsum(f0) / sr  # cycles, phase-continuous
    sig = np.zeros(n)
    for h in range(1, spec.n_harmonics + 1):
        sig += h ** (-spec.rolloff) * np.sin(2.0 * np.pi * h * phase)
    peak = np.max(np.abs(sig))
    if peak > 0:
        sig *= 0.9 / peak
    buf = AudioBuffer(sig, sr)

    n_frames = max((n - cfg.window_len) // cfg.hop + 1, 0)
    centers = np.arange(n_frames) * cfg.hop + cfg.window_len // 2
    centers = np.minimum(centers, n - 1)
    truth = PitchContour(
        hop_seconds=cfg.hop_seconds,
        f0_hz=f0[centers],
        confidence=np.ones(n_frames),
        voiced=np.ones(n_frames, dtype=bool),
    )
    return buf, truth


def random_spec(rng: np.random.Generator, duration_s: float = 1.0,
                f_low: float = 100.0, f_high: float = 1000.0) -> SynthSpec:
    """Random constant/glide/vibrato example inside [f_low, f_high]."""
    kind = rng.choice(["constant", "glide", "vibrato"])
    # sample pitch log-uniformly
    logf = rng.uniform(np.log(f_low), np.log(f_high))
    f0 = float(np.exp(logf))
    spec = SynthSpec(
        kind=str(kind),
        f0_hz=f0,
        n_harmonics=int(rng.integers(3, 11)),
        rolloff=float(rng.uniform(0.5, 1.5)),
        duration_s=duration_s,
        phase0=float(rng.uniform(0.0, 1.0)),
    )
    if kind == "glide":
        # bounded glide of at most +-5 semitones, kept inside the range
        ratio = 2.0 ** rng.uniform(-5 / 12, 5 / 12)
        spec.f1_hz = float(np.clip(f0 * ratio, f_low, f_high))
    elif kind == "vibrato":
        spec.vibrato_rate_hz = float(rng.uniform(4.0, 7.0))
        spec.vibrato_depth_cents = float(rng.uniform(20.0, 80.0))
    return spec
