"""Frame-similarity weighting between mixture and enrollment spectra.

Each mixture frame scores every enrollment frame by inner product, the
scores pass through a row softmax, and the weights recombine enrollment
frames into a representation aligned with the mixture's time axis. Real
and imaginary planes are weighted independently, each from its own
similarity matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import ComplexSpectrogram
from .errors import DomainError, ShapeError
from .netops import matmul, softmax_rows


def similarity(mixture_part: np.ndarray, enrollment_part: np.ndarray) -> np.ndarray:
    """Inner-product scores between all frame pairs.

    mixture_part is (T_Y, F) and enrollment_part is (T_E, F); the result
    is (T_Y, T_E) with entry [i, j] = <mixture frame i, enrollment frame j>.
    """
    y = np.asarray(mixture_part, dtype=np.float64)
    e = np.asarray(enrollment_part, dtype=np.float64)
    if y.ndim != 2 or e.ndim != 2:
        raise ShapeError(f"frame matrices must be 2-D, got {y.shape} and {e.shape}")
    if y.shape[1] != e.shape[1]:
        raise ShapeError(
            f"bin counts differ: mixture has {y.shape[1]}, enrollment has {e.shape[1]}"
        )
    return matmul(y, e.T)


def weight(scores: np.ndarray) -> np.ndarray:
    """Row softmax of a similarity matrix; every row sums to one."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2:
        raise ShapeError(f"scores must be 2-D, got shape {s.shape}")
    return softmax_rows(s)


def consistent(mixture_part: np.ndarray, enrollment_part: np.ndarray) -> np.ndarray:
    """Recombine enrollment frames by softmax similarity weights.

    Returns a (T_Y, F) matrix whose row i is a convex combination of
    enrollment frames, weighted by how strongly they resemble mixture
    frame i.
    """
    e = np.asarray(enrollment_part, dtype=np.float64)
    return weight(similarity(mixture_part, enrollment_part)) @ e


@dataclass
class ConsistentRepresentation:
    """Enrollment content re-timed onto the mixture frame axis."""

    real_part: np.ndarray
    imag_part: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.real_part, dtype=np.float64)
        i = np.asarray(self.imag_part, dtype=np.float64)
        if r.ndim != 2 or r.shape != i.shape:
            raise ShapeError(
                f"real/imag parts must be matching 2-D matrices, got {r.shape} and {i.shape}"
            )
        self.real_part = r
        self.imag_part = i


def interaction_block(
    mixture: ComplexSpectrogram, enrollment: ComplexSpectrogram
) -> ConsistentRepresentation:
    """Weight the enrollment's real and imaginary planes independently.

    Both spectrograms must be magnitude-compressed with the same alpha
    and share a bin count; the output follows the mixture's frame axis.
    """
    if mixture.compressed_with_alpha is None or enrollment.compressed_with_alpha is None:
        raise DomainError("interaction operates on magnitude-compressed spectrograms")
    if mixture.compressed_with_alpha != enrollment.compressed_with_alpha:
        raise DomainError(
            f"compression exponents differ: {mixture.compressed_with_alpha} "
            f"vs {enrollment.compressed_with_alpha}"
        )
    if mixture.bins != enrollment.bins:
        raise ShapeError(
            f"bin counts differ: mixture has {mixture.bins}, enrollment has {enrollment.bins}"
        )
    return ConsistentRepresentation(
        consistent(mixture.real, enrollment.real),
        consistent(mixture.imag, enrollment.imag),
    )
