"""Dense numerical primitives: softmax, normalization, conv, BLSTM, attention.

Everything is plain float64 numpy. Sequence operators accept either a
single sequence (steps, features) or a batch (batch, steps, features)
and return the same rank they were given.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ParameterError, ShapeError


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shape-checked matrix product of two 2-D arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} vs {b.shape}")
    return a @ b


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax along the last axis, max-shifted for stability."""
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def layer_norm(
    x: np.ndarray, gain: np.ndarray, shift: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Normalize the last axis to zero mean / unit (biased) variance,
    then apply a per-feature affine gain and shift."""
    x = np.asarray(x, dtype=np.float64)
    gain = np.asarray(gain, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    d = x.shape[-1]
    if gain.shape != (d,) or shift.shape != (d,):
        raise ShapeError(
            f"gain/shift must both have shape ({d},), got {gain.shape} and {shift.shape}"
        )
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * gain + shift


def fc(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map x @ weights.T + bias over the last axis.

    weights has shape (out_features, in_features); x may carry any
    number of leading axes.
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if weights.ndim != 2:
        raise ShapeError(f"weights must be 2-D, got shape {weights.shape}")
    out_d, in_d = weights.shape
    if x.shape[-1] != in_d:
        raise ShapeError(f"input features {x.shape[-1]} do not match weights {weights.shape}")
    if bias.shape != (out_d,):
        raise ShapeError(f"bias must have shape ({out_d},), got {bias.shape}")
    return x @ weights.T + bias


def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-padded 2-D cross-correlation over (channels, height, width).

    kernels has shape (out_channels, in_channels, kh, kw) with odd kh
    and kw; the spatial extent of the output matches the input.
    """
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"input must be (channels, height, width), got shape {x.shape}")
    if kernels.ndim != 4:
        raise ShapeError(f"kernels must be 4-D, got shape {kernels.shape}")
    c_out, c_in, kh, kw = kernels.shape
    if x.shape[0] != c_in:
        raise ShapeError(f"input has {x.shape[0]} channels, kernels expect {c_in}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ParameterError(f"kernel extents must be odd for same padding, got {kh}x{kw}")
    if bias.shape != (c_out,):
        raise ShapeError(f"bias must have shape ({c_out},), got {bias.shape}")
    _, h, w = x.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((c_out, h, w))
    for i in range(kh):
        for j in range(kw):
            patch = padded[:, i : i + h, j : j + w]
            out += np.tensordot(kernels[:, :, i, j], patch, axes=1)
    return out + bias[:, None, None]


@dataclass
class LstmParams:
    """One direction of an LSTM.

    Gate blocks are stacked along the first axis in the order
    input, forget, cell, output. wx is (4*hidden, in_features),
    wh is (4*hidden, hidden), bias is (4*hidden,).
    """

    wx: np.ndarray
    wh: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.wx = np.asarray(self.wx, dtype=np.float64)
        self.wh = np.asarray(self.wh, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.wx.ndim != 2 or self.wh.ndim != 2:
            raise ShapeError(
                f"wx and wh must be 2-D, got {self.wx.shape} and {self.wh.shape}"
            )
        hidden = self.wh.shape[1]
        if self.wx.shape[0] != 4 * hidden or self.wh.shape[0] != 4 * hidden:
            raise ShapeError(
                f"gate axis must be 4*hidden={4 * hidden}, got wx {self.wx.shape} "
                f"and wh {self.wh.shape}"
            )
        if self.bias.shape != (4 * hidden,):
            raise ShapeError(f"bias must have shape ({4 * hidden},), got {self.bias.shape}")

    @property
    def hidden(self) -> int:
        return self.wh.shape[1]

    @property
    def in_features(self) -> int:
        return self.wx.shape[1]


def _lstm_pass(x: np.ndarray, p: LstmParams) -> np.ndarray:
    """Run one direction over (batch, steps, in_features) from zero state."""
    batch, steps, _ = x.shape
    hidden = p.hidden
    pre = x @ p.wx.T + p.bias
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    out = np.empty((batch, steps, hidden))
    for t in range(steps):
        g = pre[:, t] + h @ p.wh.T
        gate_in = expit(g[:, :hidden])
        gate_forget = expit(g[:, hidden : 2 * hidden])
        cell = np.tanh(g[:, 2 * hidden : 3 * hidden])
        gate_out = expit(g[:, 3 * hidden :])
        c = gate_forget * c + gate_in * cell
        h = gate_out * np.tanh(c)
        out[:, t] = h
    return out


def blstm_forward(seq: np.ndarray, fwd: LstmParams, bwd: LstmParams) -> np.ndarray:
    """Bidirectional LSTM from zero initial states.

    Returns the forward outputs concatenated with the time-reversed
    backward outputs along the feature axis: (..., steps, 2*hidden).
    """
    x = np.asarray(seq, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"sequence must be 2-D or 3-D, got shape {seq.shape}")
    if fwd.in_features != x.shape[-1] or bwd.in_features != x.shape[-1]:
        raise ShapeError(
            f"sequence features {x.shape[-1]} do not match wx shapes "
            f"{fwd.wx.shape} and {bwd.wx.shape}"
        )
    if fwd.hidden != bwd.hidden:
        raise ShapeError(
            f"direction hidden sizes differ: {fwd.hidden} vs {bwd.hidden}"
        )
    out_f = _lstm_pass(x, fwd)
    out_b = _lstm_pass(x[:, ::-1], bwd)[:, ::-1]
    out = np.concatenate([out_f, out_b], axis=-1)
    return out[0] if single else out


@dataclass
class MhaParams:
    """Projection weights for multi-head attention over a model dim d.

    Each weight is (d, d) applied as x @ w.T + b; wo/bo recombine the
    concatenated head outputs.
    """

    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray

    def __post_init__(self):
        for name in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        d = self.wq.shape[0]
        for name in ("wq", "wk", "wv", "wo"):
            if getattr(self, name).shape != (d, d):
                raise ShapeError(f"{name} must have shape ({d}, {d}), got "
                                 f"{getattr(self, name).shape}")
        for name in ("bq", "bk", "bv", "bo"):
            if getattr(self, name).shape != (d,):
                raise ShapeError(f"{name} must have shape ({d},), got "
                                 f"{getattr(self, name).shape}")

    @property
    def model_dim(self) -> int:
        return self.wq.shape[0]


def mha_forward(seq: np.ndarray, params: MhaParams, num_heads: int) -> np.ndarray:
    """Multi-head scaled dot-product self-attention.

    seq is (..., steps, d) with d divisible by num_heads; each head
    attends with scale 1/sqrt(d/num_heads) and the concatenated head
    outputs pass through the output projection.
    """
    x = np.asarray(seq, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"sequence must be 2-D or 3-D, got shape {seq.shape}")
    d = params.model_dim
    if x.shape[-1] != d:
        raise ShapeError(f"sequence features {x.shape[-1]} do not match projections ({d})")
    if num_heads <= 0 or d % num_heads:
        raise ParameterError(f"model dim {d} is not divisible by {num_heads} heads")
    batch, steps, _ = x.shape
    d_head = d // num_heads

    def heads(z):
        return z.reshape(batch, steps, num_heads, d_head).transpose(0, 2, 1, 3)

    q = heads(x @ params.wq.T + params.bq)
    k = heads(x @ params.wk.T + params.bk)
    v = heads(x @ params.wv.T + params.bv)
    att = softmax_rows(q @ k.transpose(0, 1, 3, 2) / np.sqrt(d_head))
    mixed = (att @ v).transpose(0, 2, 1, 3).reshape(batch, steps, d)
    out = mixed @ params.wo.T + params.bo
    return out[0] if single else out
