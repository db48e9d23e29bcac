"""Deterministic target-speaker extraction toolkit.

Signal path: STFT analysis, magnitude compression, enrollment-mixture
interaction, a dual-path masking network, and overlap-add synthesis,
plus SI-SDR evaluation, mixture synthesis, model serialization, and
finite-difference gradient verification.
"""

from .dsp import (
    ComplexSpectrogram,
    FramingConfig,
    Waveform,
    drc,
    hann_window,
    idrc,
    istft,
    stft,
)
from .errors import (
    CienetError,
    DomainError,
    FormatError,
    GradientUndefinedError,
    ParameterError,
    ShapeError,
)
from .gradcheck import GradReport, run_gradcheck
from .interaction import ConsistentRepresentation, consistent, interaction_block
from .metrics import EvalReport, improvements, sdr_simple, si_sdr, si_sdr_loss_grad
from .mixer import MixtureSpec, make_manifest, mix, mix_waveforms
from .model_io import ModelParams, init_params, load, param_count, save
from .network import HyperParams, extract, param_spec

__version__ = "0.1.0"

__all__ = [
    "ComplexSpectrogram",
    "ConsistentRepresentation",
    "CienetError",
    "DomainError",
    "EvalReport",
    "FormatError",
    "FramingConfig",
    "GradReport",
    "GradientUndefinedError",
    "HyperParams",
    "MixtureSpec",
    "ModelParams",
    "ParameterError",
    "ShapeError",
    "Waveform",
    "consistent",
    "drc",
    "extract",
    "hann_window",
    "improvements",
    "idrc",
    "init_params",
    "interaction_block",
    "istft",
    "load",
    "make_manifest",
    "mix",
    "mix_waveforms",
    "param_count",
    "param_spec",
    "run_gradcheck",
    "save",
    "sdr_simple",
    "si_sdr",
    "si_sdr_loss_grad",
    "stft",
]
