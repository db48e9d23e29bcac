"""Scale-invariant SDR evaluation and its analytic loss gradient."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dsp import Waveform
from .errors import GradientUndefinedError, ParameterError, ShapeError

# Energy ratios beyond 1e30 (300 dB) are reported as the cap.
CAP_DB = 300.0
_RATIO_CAP = 10.0 ** (CAP_DB / 10.0)


def _vector(x, name: str) -> np.ndarray:
    if isinstance(x, Waveform):
        x = x.samples
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {v.shape}")
    return v


def _pair(est, ref) -> tuple[np.ndarray, np.ndarray]:
    e = _vector(est, "estimate")
    r = _vector(ref, "reference")
    if len(e) != len(r):
        raise ShapeError(f"length mismatch: estimate {len(e)} vs reference {len(r)}")
    return e, r


def _ratio_db(signal_energy: float, error_energy: float) -> tuple[float, bool]:
    """10*log10 of an energy ratio, capped to +-CAP_DB with a flag."""
    if signal_energy == 0.0:
        return -CAP_DB, True
    if error_energy == 0.0:
        return CAP_DB, True
    ratio = signal_energy / error_energy
    if ratio >= _RATIO_CAP:
        return CAP_DB, True
    if ratio <= 1.0 / _RATIO_CAP:
        return -CAP_DB, True
    return 10.0 * math.log10(ratio), False


def _si_sdr_parts(est, ref) -> tuple[np.ndarray, np.ndarray, float, float, float]:
    """Mean-removed estimate, projection residual, and the energies."""
    e, r = _pair(est, ref)
    e = e - e.mean()
    r = r - r.mean()
    ref_energy = float(r @ r)
    if ref_energy == 0.0:
        raise ParameterError("reference is constant; scale-invariant SDR is undefined")
    scale = float(e @ r) / ref_energy
    target = scale * r
    residual = e - target
    return e, residual, scale, float(target @ target), float(residual @ residual)


def si_sdr_detail(est, ref) -> tuple[float, bool]:
    """Scale-invariant SDR in dB and whether the +-300 dB cap engaged.

    Both signals are mean-removed; the estimate is compared against its
    own projection onto the reference, so a rescaled estimate scores the
    same as the original.
    """
    _, _, _, target_energy, residual_energy = _si_sdr_parts(est, ref)
    return _ratio_db(target_energy, residual_energy)


def si_sdr(est, ref) -> float:
    """Scale-invariant SDR in dB, capped to +-300."""
    return si_sdr_detail(est, ref)[0]


def sdr_simple_detail(est, ref) -> tuple[float, bool]:
    """Plain SDR: reference energy over error energy, no mean removal."""
    e, r = _pair(est, ref)
    ref_energy = float(r @ r)
    if ref_energy == 0.0:
        raise ParameterError("reference is silent; SDR is undefined")
    diff = r - e
    return _ratio_db(ref_energy, float(diff @ diff))


def sdr_simple(est, ref) -> float:
    """Plain SDR in dB, capped to +-300."""
    return sdr_simple_detail(est, ref)[0]


@dataclass
class EvalReport:
    """Per-utterance metric bundle with mixture-relative improvements."""

    si_sdr_db: float
    si_sdri_db: float
    sdr_db: float
    sdri_db: float
    capped: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def improvements(est, mix, ref) -> EvalReport:
    """SI-SDR and SDR of the estimate plus improvements over the mixture.

    The improvement terms subtract the mixture-vs-reference score, so a
    do-nothing system scores zero improvement. capped is set if any of
    the four underlying ratios hit the +-300 dB cap.
    """
    est_si, c1 = si_sdr_detail(est, ref)
    mix_si, c2 = si_sdr_detail(mix, ref)
    est_sdr, c3 = sdr_simple_detail(est, ref)
    mix_sdr, c4 = sdr_simple_detail(mix, ref)
    return EvalReport(
        si_sdr_db=est_si,
        si_sdri_db=est_si - mix_si,
        sdr_db=est_sdr,
        sdri_db=est_sdr - mix_sdr,
        capped=c1 or c2 or c3 or c4,
    )


def si_sdr_loss_grad(est, ref) -> tuple[float, np.ndarray]:
    """Negative SI-SDR in dB and its gradient with respect to est.

    The gradient chains through the mean removal, so it sums to zero,
    and it is orthogonal to the mean-removed estimate because SI-SDR is
    invariant to rescaling. Raises GradientUndefinedError at the poles:
    an estimate orthogonal to the reference (no target component) or an
    exact scaled copy of it (zero residual).
    """
    e, residual, scale, target_energy, residual_energy = _si_sdr_parts(est, ref)
    if target_energy == 0.0:
        raise GradientUndefinedError(
            "estimate has no component along the reference; gradient undefined"
        )
    if residual_energy == 0.0:
        raise GradientUndefinedError(
            "estimate equals a scaled reference; gradient undefined"
        )
    loss = -10.0 * math.log10(target_energy / residual_energy)
    r = _vector(ref, "reference")
    r = r - r.mean()
    k = 20.0 / math.log(10.0)
    grad = -k * (scale * r / target_energy - residual / residual_energy)
    grad -= grad.mean()
    return loss, grad
