"""Training-time waveform augmentation: random gain, noise mixing at a
sampled SNR, and clipping to the legal amplitude range.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SkipExample


@dataclass
class AugmentConfig:
    gain_db_range: tuple = (-6.0, 6.0)
    snr_db_range: tuple = (10.0, 30.0)
    noise_signals: list = field(default_factory=list)  # arrays at the target rate

    def __post_init__(self):
        if self.gain_db_range[0] > self.gain_db_range[1]:
            raise ValueError("gain range is reversed")
        if self.snr_db_range[0] > self.snr_db_range[1]:
            raise ValueError("snr range is reversed")


def noise_gamma(p_sig: float, p_noise: float, snr_db: float) -> float:
    """Scale factor that puts the noise exactly snr_db below the signal."""
    return float(np.sqrt(p_sig / (p_noise * 10.0 ** (snr_db / 10.0))))


def mix_at_snr(signal: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    """signal + gamma*noise with the measured power ratio exactly snr_db."""
    p_sig = float(np.mean(signal ** 2))
    p_noise = float(np.mean(noise ** 2))
    if p_sig == 0.0:
        raise SkipExample("silent signal")
    if p_noise == 0.0:
        return signal.copy()
    return signal + noise_gamma(p_sig, p_noise, snr_db) * noise


def augment(samples: np.ndarray, cfg: AugmentConfig,
            rng: np.random.Generator) -> np.ndarray:
    """Gain-scale, mix environmental/Gaussian noise at a random SNR, clamp.

    With no configured noise sources the environmental branch is dropped
    (mixing coefficient forced to the Gaussian end).
    """
    samples = np.asarray(samples, dtype=np.float64)
    gain_db = rng.uniform(*cfg.gain_db_range)
    scaled = samples * 10.0 ** (gain_db / 20.0)
    p_sig = float(np.mean(scaled ** 2))
    if p_sig == 0.0:
        raise SkipExample("silent segment")

    alpha = rng.uniform(0.0, 1.0) if cfg.noise_signals else 0.0
    n_gauss = rng.standard_normal(len(samples))
    n_bg = np.sqrt(1.0 - alpha) * n_gauss
    if alpha > 0.0:
        src = cfg.noise_signals[rng.integers(len(cfg.noise_signals))]
        if len(src) < len(samples):
            reps = int(np.ceil(len(samples) / len(src)))
            src = np.tile(src, reps)
        start = rng.integers(0, len(src) - len(samples) + 1)
        n_bg = n_bg + np.sqrt(alpha) * src[start:start + len(samples)]

    snr_db = rng.uniform(*cfg.snr_db_range)
    mixed = mix_at_snr(scaled, n_bg, snr_db)
    return np.clip(mixed, -1.0, 1.0)
