"""Compact spectral CNN for per-frame pitch scoring.

Five 5x5 conv layers (channels 1->8->16->32->64->1), each with batch norm
and ReLU, followed by a per-frame dense projection from the 132 band bins
onto 200 pitch bins. Forward and backward passes are written by hand on
numpy; convolutions run as im2col + BLAS matmul.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .dsp import Spectrogram
from .errors import FormatError, ShapeError, StateError

CHANNEL_PLAN = [1, 8, 16, 32, 64, 1]
KERNEL = 5
PAD = KERNEL // 2
N_BANDS = 132
N_PITCH_BINS = 200
BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass
class ModelParams:
    conv_w: list          # [ (c_out, c_in, 5, 5) ]
    conv_b: list          # [ (c_out,) ]
    bn_gamma: list        # [ (c,) ]
    bn_beta: list
    bn_mean: list         # running statistics, not trainable
    bn_var: list
    proj_w: np.ndarray    # (200, 132)
    proj_b: np.ndarray    # (200,)

    @property
    def dtype(self):
        return self.proj_w.dtype

    def trainable(self) -> dict:
        """Name -> array for every trainable tensor (running stats excluded)."""
        out = {}
        for i in range(len(self.conv_w)):
            out[f"conv{i}.weight"] = self.conv_w[i]
            out[f"conv{i}.bias"] = self.conv_b[i]
            out[f"bn{i}.gamma"] = self.bn_gamma[i]
            out[f"bn{i}.beta"] = self.bn_beta[i]
        out["proj.weight"] = self.proj_w
        out["proj.bias"] = self.proj_b
        return out

    def all_tensors(self) -> dict:
        out = self.trainable()
        for i in range(len(self.conv_w)):
            out[f"bn{i}.running_mean"] = self.bn_mean[i]
            out[f"bn{i}.running_var"] = self.bn_var[i]
        return out


def init_params(seed: int, dtype=np.float32) -> ModelParams:
    """Uniform +-sqrt(6/fan_in) kernels, zero biases, identity batch norm."""
    rng = np.random.default_rng(seed)
    conv_w, conv_b, gamma, beta, mean, var = [], [], [], [], [], []
    for c_in, c_out in zip(CHANNEL_PLAN[:-1], CHANNEL_PLAN[1:]):
        bound = np.sqrt(6.0 / (c_in * KERNEL * KERNEL))
        conv_w.append(rng.uniform(-bound, bound,
                                  (c_out, c_in, KERNEL, KERNEL)).astype(dtype))
        conv_b.append(np.zeros(c_out, dtype=dtype))
        gamma.append(np.ones(c_out, dtype=dtype))
        beta.append(np.zeros(c_out, dtype=dtype))
        mean.append(np.zeros(c_out, dtype=dtype))
        var.append(np.ones(c_out, dtype=dtype))
    bound = np.sqrt(6.0 / N_BANDS)
    proj_w = rng.uniform(-bound, bound, (N_PITCH_BINS, N_BANDS)).astype(dtype)
    proj_b = np.zeros(N_PITCH_BINS, dtype=dtype)
    return ModelParams(conv_w, conv_b, gamma, beta, mean, var, proj_w, proj_b)


def count_params(p: ModelParams, breakdown: bool = False):
    counts = {name: arr.size for name, arr in p.trainable().items()}
    total = sum(counts.values())
    return (total, counts) if breakdown else total


# ---------------------------------------------------------------------------
# layer primitives
# ---------------------------------------------------------------------------

def _pad_spatial(x: np.ndarray) -> np.ndarray:
    b, t, f, c = x.shape
    out = np.zeros((b, t + 2 * PAD, f + 2 * PAD, c), dtype=x.dtype)
    out[:, PAD:PAD + t, PAD:PAD + f, :] = x
    return out


def _conv_forward(x, w, bias):
    """Same-padded 5x5 conv as 25 shifted batched matmuls.

    Avoids materializing an im2col patch matrix; each tap is one BLAS
    call over the shifted zero-padded input. Accumulation order is fixed,
    so results are bit-reproducible.
    """
    b, t, f, _ = x.shape
    xp = _pad_spatial(x)
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))  # (5, 5, c_in, c_out)
    out = np.broadcast_to(bias, (b, t, f, w.shape[0])).copy()
    for i in range(KERNEL):
        for j in range(KERNEL):
            out += xp[:, i:i + t, j:j + f, :] @ wt[i, j]
    return out


def _conv_backward(x, w, d_out):
    """Returns (dx, dw, db) for the same-padded conv.

    dx is itself a same-padded conv of d_out with the spatially flipped,
    channel-transposed kernel; dw is one small GEMM per tap.
    """
    b, t, f, c_in = x.shape
    c_out = w.shape[0]
    xp = _pad_spatial(x)
    d_flat = d_out.reshape(-1, c_out)
    dw = np.empty_like(w)
    for i in range(KERNEL):
        for j in range(KERNEL):
            patch = xp[:, i:i + t, j:j + f, :].reshape(-1, c_in)
            dw[:, :, i, j] = d_flat.T @ patch
    db = d_flat.sum(axis=0)

    dp = _pad_spatial(d_out)
    w_flip = np.ascontiguousarray(
        w[:, :, ::-1, ::-1].transpose(2, 3, 0, 1))  # (5, 5, c_out, c_in)
    dx = np.zeros_like(x)
    for i in range(KERNEL):
        for j in range(KERNEL):
            dx += dp[:, i:i + t, j:j + f, :] @ w_flip[i, j]
    return dx, dw, db


def _bn_forward(x, gamma, beta, run_mean, run_var, train, update_running):
    if train:
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
        if update_running:
            run_mean *= 1.0 - BN_MOMENTUM
            run_mean += BN_MOMENTUM * mean
            run_var *= 1.0 - BN_MOMENTUM
            run_var += BN_MOMENTUM * var
    else:
        mean, var = run_mean, run_var
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    x_hat = (x - mean) * inv_std
    return gamma * x_hat + beta, (x_hat, inv_std)


def _bn_backward(d_out, x_hat, inv_std, gamma):
    n = x_hat.shape[0] * x_hat.shape[1] * x_hat.shape[2]
    d_gamma = (d_out * x_hat).sum(axis=(0, 1, 2))
    d_beta = d_out.sum(axis=(0, 1, 2))
    d_xhat = d_out * gamma
    dx = (inv_std / n) * (n * d_xhat
                          - d_xhat.sum(axis=(0, 1, 2))
                          - x_hat * (d_xhat * x_hat).sum(axis=(0, 1, 2)))
    return dx, d_gamma, d_beta


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------

def forward_batch(p: ModelParams, x: np.ndarray, train: bool = False,
                  update_running: bool = True):
    """Run the network on a (B, T, 132) batch of spectrogram segments.

    Returns (logits (B, T, 200), cache). Eval mode uses running batch-norm
    statistics and never mutates params.
    """
    x = np.asarray(x, dtype=p.dtype)
    if x.ndim != 3 or x.shape[2] != N_BANDS:
        raise ShapeError(f"expected (B, T, {N_BANDS}), got {x.shape}")
    h = x[..., None]  # (B, T, F, 1)
    cache = {"train": train, "layers": []}
    for i in range(len(p.conv_w)):
        layer_in = h
        z = _conv_forward(h, p.conv_w[i], p.conv_b[i])
        y, (x_hat, inv_std) = _bn_forward(
            z, p.bn_gamma[i], p.bn_beta[i], p.bn_mean[i], p.bn_var[i],
            train, update_running)
        h = np.maximum(y, 0.0)
        cache["layers"].append((layer_in, x_hat, inv_std, y > 0.0))
    feat = h[..., 0]  # (B, T, F)
    logits = feat @ p.proj_w.T + p.proj_b
    cache["feat"] = feat
    return logits, cache


def backward_batch(p: ModelParams, cache: dict, d_logits: np.ndarray):
    """Gradients of the scalar loss whose logit-gradient is d_logits.

    Returns (grads dict keyed like ModelParams.trainable(), d_input) where
    d_input is the gradient w.r.t. the (B, T, 132) spectrogram batch.
    """
    if not cache.get("train"):
        raise StateError("backward requires a cache from a train-mode forward")
    if len(cache["layers"]) != len(p.conv_w):
        raise StateError("cache does not match this parameter set")
    d_logits = np.asarray(d_logits, dtype=p.dtype)
    feat = cache["feat"]
    grads = {}
    d_flat = d_logits.reshape(-1, N_PITCH_BINS)
    grads["proj.weight"] = d_flat.T @ feat.reshape(-1, N_BANDS)
    grads["proj.bias"] = d_flat.sum(axis=0)
    d_h = (d_logits @ p.proj_w)[..., None]  # (B, T, F, 1)
    for i in reversed(range(len(p.conv_w))):
        layer_in, x_hat, inv_std, relu_mask = cache["layers"][i]
        d_y = d_h * relu_mask
        d_z, d_gamma, d_beta = _bn_backward(d_y, x_hat, inv_std, p.bn_gamma[i])
        d_h, dw, db = _conv_backward(layer_in, p.conv_w[i], d_z)
        grads[f"conv{i}.weight"] = dw
        grads[f"conv{i}.bias"] = db
        grads[f"bn{i}.gamma"] = d_gamma
        grads[f"bn{i}.beta"] = d_beta
    return grads, d_h[..., 0]


def forward(p: ModelParams, spec: Spectrogram | np.ndarray, mode: str = "eval"):
    """Single-spectrogram entry point: (T, 132) -> (logits (T, 200), cache)."""
    values = spec.values if isinstance(spec, Spectrogram) else np.asarray(spec)
    if values.ndim != 2 or values.shape[1] != N_BANDS:
        raise ShapeError(f"expected (T, {N_BANDS}), got {values.shape}")
    logits, cache = forward_batch(p, values[None], train=(mode == "train"))
    return logits[0], cache


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_MAGIC = b"SWF0"
_VERSION = 1


def save_params(p: ModelParams, path) -> None:
    """Binary weights file: magic, version, then named float32 tensors."""
    tensors = p.all_tensors()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(tensors)))
        for name, arr in tensors.items():
            enc = name.encode("utf-8")
            fh.write(struct.pack("<H", len(enc)))
            fh.write(enc)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f4").tobytes())


def load_params(path, dtype=np.float32) -> ModelParams:
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"{path}: truncated weights file")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(4) != _MAGIC:
        raise FormatError(f"{path}: bad magic")
    version, count = struct.unpack("<II", take(8))
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        n_vals = int(np.prod(shape)) if rank else 1
        vals = np.frombuffer(take(4 * n_vals), dtype="<f4").reshape(shape)
        tensors[name] = vals.astype(dtype)
    if pos != len(data):
        raise FormatError(f"{path}: trailing bytes after last tensor")

    n_layers = len(CHANNEL_PLAN) - 1
    try:
        p = ModelParams(
            conv_w=[tensors[f"conv{i}.weight"] for i in range(n_layers)],
            conv_b=[tensors[f"conv{i}.bias"] for i in range(n_layers)],
            bn_gamma=[tensors[f"bn{i}.gamma"] for i in range(n_layers)],
            bn_beta=[tensors[f"bn{i}.beta"] for i in range(n_layers)],
            bn_mean=[tensors[f"bn{i}.running_mean"] for i in range(n_layers)],
            bn_var=[tensors[f"bn{i}.running_var"] for i in range(n_layers)],
            proj_w=tensors["proj.weight"],
            proj_b=tensors["proj.bias"],
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing tensor {exc}") from None
    for (c_in, c_out), w in zip(zip(CHANNEL_PLAN[:-1], CHANNEL_PLAN[1:]), p.conv_w):
        if w.shape != (c_out, c_in, KERNEL, KERNEL):
            raise ShapeError(f"{path}: conv kernel shape {w.shape} does not "
                             f"match architecture")
    if p.proj_w.shape != (N_PITCH_BINS, N_BANDS):
        raise ShapeError(f"{path}: projection shape {p.proj_w.shape}")
    return p
