"""Analytic gradients for the differentiable pieces, checked against
central finite differences on small random instances."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import GradientUndefinedError, ParameterError, ShapeError
from .interaction import similarity, weight
from .metrics import si_sdr_loss_grad

# Central differences with eps in this range stay above float64 roundoff
# while keeping the O(eps^2) truncation term negligible.
EPS_MIN = 1e-6
EPS_MAX = 1e-3

# Smallest spectral magnitude the compression gradient accepts; the
# derivative has a |z|**(alpha-3) factor that blows up near zero.
MIN_DRC_MAGNITUDE = 1e-6


@dataclass
class GradReport:
    """Outcome of one finite-difference comparison."""

    component: str
    max_rel_error: float
    eps: float
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate
    at a time."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat = x.ravel()
    g = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = f(x)
        flat[i] = orig - eps
        down = f(x)
        flat[i] = orig
        g[i] = (up - down) / (2.0 * eps)
    return grad


def rel_error(analytic: np.ndarray, fd: np.ndarray) -> float:
    """max over coordinates of |analytic - fd| / max(|fd|, 1e-12)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    fd = np.asarray(fd, dtype=np.float64)
    if analytic.shape != fd.shape:
        raise ShapeError(f"gradient shapes differ: {analytic.shape} vs {fd.shape}")
    denom = np.maximum(np.abs(fd), 1e-12)
    return float(np.max(np.abs(analytic - fd) / denom))


def interaction_backward(
    mixture_part: np.ndarray, enrollment_part: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of sum(upstream * consistent(Y, E)) w.r.t. Y and E.

    With S = Y E^T, A = rowsoftmax(S), out = A E: the enrollment picks
    up both the direct combination term A^T G and the similarity term
    routed through the softmax Jacobian; the mixture only the latter.
    """
    y = np.asarray(mixture_part, dtype=np.float64)
    e = np.asarray(enrollment_part, dtype=np.float64)
    g = np.asarray(upstream, dtype=np.float64)
    a = weight(similarity(y, e))
    if g.shape != (y.shape[0], e.shape[1]):
        raise ShapeError(
            f"upstream must be {(y.shape[0], e.shape[1])}, got {g.shape}"
        )
    d_a = g @ e.T
    # Row-wise softmax Jacobian: dS = A * (dA - sum(dA * A, rows))
    d_s = a * (d_a - np.sum(d_a * a, axis=1, keepdims=True))
    d_y = d_s @ e
    d_e = a.T @ g + d_s.T @ y
    return d_y, d_e


def drc_backward(
    real: np.ndarray,
    imag: np.ndarray,
    alpha: float,
    upstream_real: np.ndarray,
    upstream_imag: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of sum(G_R * drc_R + G_I * drc_I) w.r.t. the input planes.

    For z = x + iy with m = |z|, the compressed planes are m**(a-1) * x
    and m**(a-1) * y; the 2x2 Jacobian at each entry is
        [[m**(a-1) + x^2 (a-1) m**(a-3),  x y (a-1) m**(a-3)],
         [x y (a-1) m**(a-3),             m**(a-1) + y^2 (a-1) m**(a-3)]].
    All magnitudes must stay above MIN_DRC_MAGNITUDE.
    """
    x = np.asarray(real, dtype=np.float64)
    y = np.asarray(imag, dtype=np.float64)
    gr = np.asarray(upstream_real, dtype=np.float64)
    gi = np.asarray(upstream_imag, dtype=np.float64)
    if not (x.shape == y.shape == gr.shape == gi.shape):
        raise ShapeError("real, imag, and upstream planes must share one shape")
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"compression exponent must lie in (0, 1], got {alpha}")
    m = np.hypot(x, y)
    if np.any(m < MIN_DRC_MAGNITUDE):
        raise GradientUndefinedError(
            f"spectral magnitude below {MIN_DRC_MAGNITUDE}; compression gradient "
            "is unreliable near the origin"
        )
    base = m ** (alpha - 1.0)
    bend = (alpha - 1.0) * m ** (alpha - 3.0)
    d_real = gr * (base + x * x * bend) + gi * (x * y * bend)
    d_imag = gr * (x * y * bend) + gi * (base + y * y * bend)
    return d_real, d_imag


def _check_interaction(rng: np.random.Generator, eps: float, seed: int) -> GradReport:
    t_y, t_e, bins = rng.integers(2, 9, size=3)
    y = rng.standard_normal((t_y, bins))
    e = rng.standard_normal((t_e, bins))
    g = rng.standard_normal((t_y, bins))

    def loss_y(y_val):
        return float(np.sum(g * (weight(similarity(y_val, e)) @ e)))

    def loss_e(e_val):
        return float(np.sum(g * (weight(similarity(y, e_val)) @ e_val)))

    d_y, d_e = interaction_backward(y, e, g)
    err = max(
        rel_error(d_y, fd_gradient(loss_y, y.copy(), eps)),
        rel_error(d_e, fd_gradient(loss_e, e.copy(), eps)),
    )
    return GradReport("interaction", err, eps, seed)


def _check_drc(rng: np.random.Generator, eps: float, seed: int) -> GradReport:
    t, bins = rng.integers(2, 9, size=2)
    mag = rng.uniform(0.5, 1.5, size=(t, bins))
    phase = rng.uniform(-np.pi, np.pi, size=(t, bins))
    x = mag * np.cos(phase)
    y = mag * np.sin(phase)
    gr = rng.standard_normal((t, bins))
    gi = rng.standard_normal((t, bins))
    alpha = float(rng.uniform(0.3, 1.0))

    def compressed(re, im):
        m = np.hypot(re, im)
        scale = m ** (alpha - 1.0)
        return float(np.sum(gr * re * scale + gi * im * scale))

    d_real, d_imag = drc_backward(x, y, alpha, gr, gi)
    err = max(
        rel_error(d_real, fd_gradient(lambda v: compressed(v, y), x.copy(), eps)),
        rel_error(d_imag, fd_gradient(lambda v: compressed(x, v), y.copy(), eps)),
    )
    return GradReport("drc", err, eps, seed)


def _check_si_sdr(rng: np.random.Generator, eps: float, seed: int) -> GradReport:
    n = 64
    est = rng.standard_normal(n)
    ref = rng.standard_normal(n)
    _, grad = si_sdr_loss_grad(est, ref)
    fd = fd_gradient(lambda v: si_sdr_loss_grad(v, ref)[0], est.copy(), eps)
    return GradReport("si_sdr_loss", rel_error(grad, fd), eps, seed)


def run_gradcheck(seed: int = 0, eps: float = 1e-4) -> list[GradReport]:
    """Compare every analytic gradient against central differences.

    One random instance per component, all sized small enough that the
    whole run takes well under a minute. Instances that would sit near
    a non-differentiable point are redrawn (the drc generator keeps all
    magnitudes at 0.5 or above, far from the MIN_DRC_MAGNITUDE guard).
    """
    if not (EPS_MIN <= eps <= EPS_MAX):
        raise ParameterError(
            f"eps must lie in [{EPS_MIN}, {EPS_MAX}], got {eps}"
        )
    rng = np.random.default_rng(seed)
    return [
        _check_interaction(rng, eps, seed),
        _check_drc(rng, eps, seed),
        _check_si_sdr(rng, eps, seed),
    ]
