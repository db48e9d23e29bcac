"""Windowed STFT analysis/synthesis and dynamic range compression.

All transforms run in float64. The analysis window is a symmetric Hann
variant whose coefficients are strictly positive, which keeps weighted
overlap-add synthesis exact: the squared-window envelope never falls to
zero inside the signal, so the round trip istft(stft(x)) reproduces x
to machine precision for any hop that covers the signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, ShapeError

DEFAULT_SAMPLE_RATE = 8000

# Smallest squared-window envelope value the synthesis divide will honor.
# The strictly positive window keeps the true envelope above this floor.
ENVELOPE_FLOOR = 1e-8


def hann_window(length: int) -> np.ndarray:
    """Symmetric Hann window with nonzero endpoints.

    w[n] = 0.5 - 0.5*cos(2*pi*(n+1)/(length+1)) for n = 0..length-1.
    All samples are strictly positive, so no analysis sample is ever
    multiplied by zero and overlap-add synthesis can divide by the
    window-squared envelope everywhere.
    """
    if length <= 0:
        raise ParameterError(f"window length must be positive, got {length}")
    n = np.arange(1, length + 1, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / (length + 1))


@dataclass(frozen=True)
class FramingConfig:
    """Frame layout for analysis and synthesis.

    The default 256/128 layout gives 50% overlap and 129 frequency bins,
    i.e. 32 ms windows with 16 ms hops at the 8 kHz default rate.
    """

    window_len: int = 256
    hop: int = 128
    window: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.window_len <= 0:
            raise ParameterError(f"window_len must be positive, got {self.window_len}")
        if self.hop <= 0:
            raise ParameterError(f"hop must be positive, got {self.hop}")
        if self.hop > self.window_len:
            raise ParameterError(
                f"hop {self.hop} larger than window_len {self.window_len} leaves gaps"
            )
        if self.window is None:
            object.__setattr__(self, "window", hann_window(self.window_len))
        else:
            w = np.asarray(self.window, dtype=np.float64)
            if w.ndim != 1 or len(w) != self.window_len:
                raise ShapeError(
                    f"window must be a vector of length {self.window_len}, got shape {w.shape}"
                )
            object.__setattr__(self, "window", w)

    @property
    def bins(self) -> int:
        """Number of one-sided FFT bins, window_len//2 + 1."""
        return self.window_len // 2 + 1

    def num_frames(self, num_samples: int) -> int:
        """Frame count after zero-padding the tail to a whole frame."""
        if num_samples < self.window_len:
            raise ShapeError(
                f"signal of {num_samples} samples is shorter than one "
                f"{self.window_len}-sample window"
            )
        padded = num_samples + (-(num_samples - self.window_len)) % self.hop
        return (padded - self.window_len) // self.hop + 1


@dataclass
class Waveform:
    """A mono float64 signal with its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1:
            raise ShapeError(f"waveform must be 1-D, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ParameterError("waveform contains non-finite samples")
        if self.sample_rate_hz <= 0:
            raise ParameterError(f"sample rate must be positive, got {self.sample_rate_hz}")
        self.samples = s

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass
class ComplexSpectrogram:
    """Real/imaginary spectrogram planes of shape (frames, bins).

    original_len remembers the pre-padding sample count so synthesis can
    truncate its output. compressed_with_alpha tags data that is sitting
    in the magnitude-compressed domain; istft refuses such input.
    """

    real: np.ndarray
    imag: np.ndarray
    framing: FramingConfig
    original_len: int
    compressed_with_alpha: float | None = None
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        r = np.asarray(self.real, dtype=np.float64)
        i = np.asarray(self.imag, dtype=np.float64)
        if r.ndim != 2 or i.ndim != 2:
            raise ShapeError(f"spectrogram planes must be 2-D, got {r.shape} and {i.shape}")
        if r.shape != i.shape:
            raise ShapeError(f"real/imag shapes differ: {r.shape} vs {i.shape}")
        if r.shape[1] != self.framing.bins:
            raise ShapeError(
                f"expected {self.framing.bins} bins for window_len "
                f"{self.framing.window_len}, got {r.shape[1]}"
            )
        max_len = self.framing.hop * (r.shape[0] - 1) + self.framing.window_len
        if not (0 < self.original_len <= max_len):
            raise ShapeError(
                f"original_len {self.original_len} inconsistent with "
                f"{r.shape[0]} frames (at most {max_len} samples)"
            )
        self.real = r
        self.imag = i

    @property
    def frames(self) -> int:
        return self.real.shape[0]

    @property
    def bins(self) -> int:
        return self.real.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.real, self.imag)

    def as_complex(self) -> np.ndarray:
        return self.real + 1j * self.imag


def stft(x: Waveform, framing: FramingConfig | None = None) -> ComplexSpectrogram:
    """Windowed one-sided FFT analysis.

    The tail is zero-padded to a whole number of frames; the original
    sample count is kept on the result for exact-length synthesis.
    """
    cfg = framing if framing is not None else FramingConfig()
    s = x.samples
    n = len(s)
    if n < cfg.window_len:
        raise ShapeError(
            f"signal of {n} samples is shorter than one {cfg.window_len}-sample window"
        )
    pad = (-(n - cfg.window_len)) % cfg.hop
    if pad:
        s = np.concatenate([s, np.zeros(pad)])
    frames = cfg.num_frames(n)
    idx = cfg.hop * np.arange(frames)[:, None] + np.arange(cfg.window_len)[None, :]
    spec = np.fft.rfft(s[idx] * cfg.window, axis=1)
    return ComplexSpectrogram(
        spec.real, spec.imag, cfg, n, sample_rate_hz=x.sample_rate_hz
    )


def istft(x: ComplexSpectrogram) -> Waveform:
    """Weighted overlap-add synthesis, truncated to the original length.

    Each frame is inverse-transformed, re-windowed, and accumulated; the
    sum is divided by the squared-window envelope (floored at
    ENVELOPE_FLOOR) and cut back to original_len samples.
    """
    if x.compressed_with_alpha is not None:
        raise DomainError(
            "spectrogram is magnitude-compressed "
            f"(alpha={x.compressed_with_alpha}); apply idrc before istft"
        )
    cfg = x.framing
    frames = np.fft.irfft(x.as_complex(), n=cfg.window_len, axis=1) * cfg.window
    total = cfg.hop * (x.frames - 1) + cfg.window_len
    out = np.zeros(total)
    env = np.zeros(total)
    w2 = cfg.window * cfg.window
    for t in range(x.frames):
        lo = t * cfg.hop
        out[lo : lo + cfg.window_len] += frames[t]
        env[lo : lo + cfg.window_len] += w2
    out /= np.maximum(env, ENVELOPE_FLOOR)
    return Waveform(out[: x.original_len], x.sample_rate_hz)


def _power_scale(mag: np.ndarray, exponent: float) -> np.ndarray:
    """mag**exponent with the zero-magnitude entries pinned to zero."""
    scale = np.zeros_like(mag)
    nz = mag > 0.0
    scale[nz] = mag[nz] ** exponent
    return scale


def drc(x: ComplexSpectrogram, alpha: float) -> ComplexSpectrogram:
    """Dynamic range compression: z -> |z|**alpha * z/|z|.

    Magnitudes are raised to alpha in (0, 1] while phase is untouched;
    zero entries stay zero. The result is tagged with alpha so that
    downstream synthesis cannot consume it by mistake.
    """
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"compression exponent must lie in (0, 1], got {alpha}")
    if x.compressed_with_alpha is not None:
        raise DomainError(
            f"spectrogram is already compressed with alpha={x.compressed_with_alpha}"
        )
    scale = _power_scale(x.magnitude(), alpha - 1.0)
    return ComplexSpectrogram(
        x.real * scale,
        x.imag * scale,
        x.framing,
        x.original_len,
        compressed_with_alpha=alpha,
        sample_rate_hz=x.sample_rate_hz,
    )


def idrc(x: ComplexSpectrogram, alpha: float | None = None) -> ComplexSpectrogram:
    """Invert drc: z -> |z|**(1/alpha) * z/|z|, clearing the compression tag.

    alpha defaults to the tag on the input; passing a conflicting value
    is an error.
    """
    if x.compressed_with_alpha is None:
        raise DomainError("spectrogram is not magnitude-compressed")
    if alpha is None:
        alpha = x.compressed_with_alpha
    elif alpha != x.compressed_with_alpha:
        raise ParameterError(
            f"alpha {alpha} does not match the compression tag {x.compressed_with_alpha}"
        )
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"compression exponent must lie in (0, 1], got {alpha}")
    scale = _power_scale(x.magnitude(), 1.0 / alpha - 1.0)
    return ComplexSpectrogram(
        x.real * scale,
        x.imag * scale,
        x.framing,
        x.original_len,
        compressed_with_alpha=None,
        sample_rate_hz=x.sample_rate_hz,
    )
