"""Spectral front-end: Hann STFT, pitch-band selection, log compression.

The FFT is a hand-rolled iterative radix-2 transform using the real-input
packing trick (N real samples -> N/2 complex FFT -> untwiddle), vectorized
over frames. A naive O(N^2) DFT lives in the test suite as the oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import ArgumentError, DomainError, InputTooShort, ShapeError


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 1024
    hop: int = 256
    sample_rate_hz: int = 16000
    f_min: float = 46.875
    f_max: float = 2093.75
    epsilon: float = 1e-8

    def __post_init__(self):
        n = self.window_len
        if n < 2 or n & (n - 1):
            raise ArgumentError("window_len must be a power of two >= 2")
        if self.hop <= 0 or n % self.hop:
            raise ArgumentError("hop must divide window_len")
        if not (0 < self.f_min < self.f_max < self.sample_rate_hz / 2):
            raise ArgumentError("need 0 < f_min < f_max < Nyquist")

    @property
    def k_min(self) -> int:
        return int(round(self.f_min * self.window_len / self.sample_rate_hz))

    @property
    def k_max(self) -> int:
        return int(round(self.f_max * self.window_len / self.sample_rate_hz))

    @property
    def n_bands(self) -> int:
        return self.k_max - self.k_min + 1

    @property
    def hop_seconds(self) -> float:
        return self.hop / self.sample_rate_hz

    @property
    def bin_hz(self) -> float:
        return self.sample_rate_hz / self.window_len


@dataclass
class Spectrogram:
    """Band-limited log-magnitude spectrogram, frames along axis 0."""

    values: np.ndarray       # (T, K)
    frame_times: np.ndarray  # (T,), seconds
    config: StftConfig


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window: w[i] = 0.5*(1 - cos(2*pi*i/n))."""
    if n < 2:
        raise ArgumentError("window length must be >= 2")
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def _bit_reverse_indices(n: int) -> np.ndarray:
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    bits = n.bit_length() - 1
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def rfft_radix2(frames: np.ndarray) -> np.ndarray:
    """Real-input FFT of each row; returns bins 0..N/2 (complex).

    Rows are packed into N/2 complex points, transformed with an iterative
    radix-2 butterfly, then untwiddled back to the real spectrum.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n = frames.shape[-1]
    if n < 2 or n & (n - 1):
        raise ArgumentError("FFT length must be a power of two")
    m = n // 2
    z = frames[..., 0::2] + 1j * frames[..., 1::2]  # (R, m)

    a = z[..., _bit_reverse_indices(m)]
    size = 2
    while size <= m:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        a = a.reshape(a.shape[:-1] + (m // size, size))
        even = a[..., :half].copy()
        odd = a[..., half:] * tw
        a[..., :half] = even + odd
        a[..., half:] = even - odd
        a = a.reshape(a.shape[:-2] + (m,))
        size *= 2

    # Untwiddle: split the packed transform into the even/odd real spectra.
    zk = np.concatenate([a, a[..., :1]], axis=-1)          # Z[0..m]
    zrev = np.conj(zk[..., ::-1])                          # conj(Z[m-k])
    tw = np.exp(-2j * np.pi * np.arange(m + 1) / n)
    return 0.5 * (zk + zrev) - 0.5j * tw * (zk - zrev)


def stft_magnitude(buf: AudioBuffer, cfg: StftConfig) -> np.ndarray:
    """Magnitude STFT, shape (T, N/2+1); frames left-aligned, no padding."""
    if buf.sample_rate_hz != cfg.sample_rate_hz:
        raise ArgumentError(
            f"buffer rate {buf.sample_rate_hz} != config rate {cfg.sample_rate_hz}")
    n, h = cfg.window_len, cfg.hop
    x = buf.samples
    if len(x) < n:
        raise InputTooShort(f"need at least {n} samples, got {len(x)}")
    t = (len(x) - n) // h + 1
    starts = np.arange(t) * h
    frames = x[starts[:, None] + np.arange(n)[None, :]] * hann_window(n)
    return np.abs(rfft_radix2(frames))


def band_select(full: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Keep columns k_min..k_max inclusive of the half spectrum."""
    expected = cfg.window_len // 2 + 1
    if full.ndim != 2 or full.shape[1] != expected:
        raise ShapeError(f"expected (T, {expected}), got {full.shape}")
    return full[:, cfg.k_min:cfg.k_max + 1]


def log_compress(mag: np.ndarray, epsilon: float = 1e-8) -> np.ndarray:
    """Elementwise log(mag + epsilon)."""
    mag = np.asarray(mag)
    if np.any(mag < 0):
        raise DomainError("magnitudes must be nonnegative")
    return np.log(mag + epsilon)


def spectrogram(buf: AudioBuffer, cfg: StftConfig | None = None) -> Spectrogram:
    """Full front-end: STFT magnitude -> band selection -> log compression."""
    cfg = cfg or StftConfig()
    mag = stft_magnitude(buf, cfg)
    values = log_compress(band_select(mag, cfg), cfg.epsilon)
    times = np.arange(values.shape[0]) * cfg.hop_seconds
    return Spectrogram(values=values, frame_times=times, config=cfg)
