"""WAV and pitch-contour file IO.

Readers are strict: anything that cannot be represented losslessly as mono
samples in [-1, +1] is rejected instead of silently converted.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, FormatError, UnsupportedError

F_MIN_HZ = 46.875
F_MAX_HZ = 2093.75
CANONICAL_SR = 16000
HOP_SECONDS = 0.016


@dataclass
class AudioBuffer:
    """Mono audio signal with its sample rate."""

    samples: np.ndarray  # float, amplitudes in [-1, +1]
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ArgumentError("AudioBuffer requires a 1-D sample array")
        if not np.all(np.isfinite(self.samples)):
            raise ArgumentError("samples must be finite")
        if self.sample_rate_hz <= 0:
            raise ArgumentError("sample_rate_hz must be positive")

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass
class PitchContour:
    """Per-frame pitch track: f0 (NaN where absent), confidence, voicing flag."""

    hop_seconds: float
    f0_hz: np.ndarray        # float, NaN = no estimate
    confidence: np.ndarray   # float in [0, 1]
    voiced: np.ndarray       # bool
    times: np.ndarray = field(default=None)

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        self.confidence = np.asarray(self.confidence, dtype=np.float64)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        if not (len(self.f0_hz) == len(self.confidence) == len(self.voiced)):
            raise ArgumentError("contour fields must have equal length")
        if self.hop_seconds <= 0:
            raise ArgumentError("hop_seconds must be positive")
        if self.times is None:
            self.times = np.arange(len(self.f0_hz)) * self.hop_seconds
        else:
            self.times = np.asarray(self.times, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.f0_hz)


def read_wav(path) -> AudioBuffer:
    """Read a mono RIFF/WAVE file (PCM16 LE or IEEE float32).

    PCM16 values are normalized by 32768 so -32768 maps to exactly -1.0.
    Multichannel files are rejected: downmixing changes pitch-relevant
    energy and hides caller mistakes.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise FormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise FormatError(f"{path}: truncated data chunk")
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise FormatError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels != 1:
        raise UnsupportedError(f"{path}: {channels} channels; only mono is supported")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedError(
            f"{path}: format={audio_format} bits={bits}; need PCM16 or float32")
    if not np.all(np.isfinite(samples)):
        raise FormatError(f"{path}: non-finite sample values")
    return AudioBuffer(samples=samples, sample_rate_hz=int(sample_rate))


def write_wav(buf: AudioBuffer, path, dtype: str = "pcm16") -> None:
    """Write a mono WAV file; dtype is 'pcm16' or 'float32'."""
    if dtype == "pcm16":
        fmt_code, bits = 1, 16
        clipped = np.clip(buf.samples, -1.0, 1.0)
        payload = np.round(clipped * 32767.0).astype("<i2").tobytes()
    elif dtype == "float32":
        fmt_code, bits = 3, 32
        payload = buf.samples.astype("<f4").tobytes()
    else:
        raise ArgumentError(f"unknown wav dtype {dtype!r}")
    sr = buf.sample_rate_hz
    block_align = bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, fmt_code, 1, sr,
                                    sr * block_align, block_align, bits)
    header += b"data" + struct.pack("<I", len(payload))
    with open(path, "wb") as fh:
        fh.write(header + payload)


def resample_linear(buf: AudioBuffer, target_hz: int) -> AudioBuffer:
    """Linearly resample to target_hz; identity when rates already match."""
    if target_hz <= 0:
        raise ArgumentError("target_hz must be positive")
    if len(buf.samples) == 0:
        raise ArgumentError("cannot resample an empty buffer")
    if target_hz == buf.sample_rate_hz:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate_hz)
    n_out = int(round(len(buf.samples) * target_hz / buf.sample_rate_hz))
    t_out = np.arange(n_out) / target_hz
    t_in = np.arange(len(buf.samples)) / buf.sample_rate_hz
    out = np.interp(t_out, t_in, buf.samples)
    return AudioBuffer(out, target_hz)


_CSV_HEADER = ["time_sec", "f0_hz", "confidence", "voiced"]


def write_contour_csv(contour: PitchContour, path) -> None:
    """Write `time_sec,f0_hz,confidence,voiced` rows; empty f0 where absent."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for i in range(len(contour)):
            f0 = contour.f0_hz[i]
            writer.writerow([
                f"{contour.times[i]:.6f}",
                "" if np.isnan(f0) else f"{f0:.6f}",
                f"{contour.confidence[i]:.6f}",
                int(contour.voiced[i]),
            ])


def read_contour_csv(path) -> PitchContour:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header != _CSV_HEADER:
            raise FormatError(f"{path}: expected header {_CSV_HEADER}, got {header}")
        times, f0s, confs, voiced = [], [], [], []
        for row in reader:
            if len(row) != 4:
                raise FormatError(f"{path}: malformed row {row}")
            times.append(float(row[0]))
            f0s.append(float("nan") if row[1] == "" else float(row[1]))
            confs.append(float(row[2]))
            voiced.append(bool(int(row[3])))
    if len(times) >= 2:
        hop = times[1] - times[0]
    else:
        hop = HOP_SECONDS
    return PitchContour(hop_seconds=hop, f0_hz=np.array(f0s),
                        confidence=np.array(confs),
                        voiced=np.array(voiced, dtype=bool),
                        times=np.array(times))
