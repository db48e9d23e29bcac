"""Target-speaker extraction network: encoder, dual-path extractor, decoder.

The forward pass is a pure function of a flat name->array tensor map,
so parameters can come from an initializer or a model file without the
network caring. Tensor names follow a dotted scheme, e.g.
``extractor.block03.time.blstm.fwd.wx``; ``param_spec`` is the single
source of truth for the names, shapes, and init families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .dsp import ComplexSpectrogram, FramingConfig, Waveform, drc, idrc, istft, stft
from .errors import ParameterError, ShapeError
from .interaction import interaction_block
from .netops import (
    LstmParams,
    MhaParams,
    blstm_forward,
    conv2d,
    fc,
    layer_norm,
    mha_forward,
    relu,
)

BLOCK_KINDS = ("mdprnn", "mdptnet")


@dataclass(frozen=True)
class HyperParams:
    """Architecture knobs; the defaults give the 2.6M-parameter model."""

    encoder_channels: int = 256
    block_channels: int = 64
    num_blocks: int = 6
    hidden: int = 128
    heads: int = 4
    alpha: float = 0.5
    block_kind: str = "mdprnn"
    framing: FramingConfig = field(default_factory=FramingConfig)

    def __post_init__(self):
        for name in ("encoder_channels", "block_channels", "hidden", "heads"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.num_blocks, int) or self.num_blocks < 0:
            raise ParameterError(
                f"num_blocks must be a non-negative integer, got {self.num_blocks!r}"
            )
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.block_kind not in BLOCK_KINDS:
            raise ParameterError(
                f"block_kind must be one of {BLOCK_KINDS}, got {self.block_kind!r}"
            )
        if self.block_channels % self.heads:
            raise ParameterError(
                f"block_channels {self.block_channels} not divisible by "
                f"{self.heads} heads"
            )

    def to_dict(self) -> dict:
        return {
            "encoder_channels": self.encoder_channels,
            "block_channels": self.block_channels,
            "num_blocks": self.num_blocks,
            "hidden": self.hidden,
            "heads": self.heads,
            "alpha": self.alpha,
            "block_kind": self.block_kind,
            "window_len": self.framing.window_len,
            "hop": self.framing.hop,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "HyperParams":
        try:
            return cls(
                encoder_channels=int(d["encoder_channels"]),
                block_channels=int(d["block_channels"]),
                num_blocks=int(d["num_blocks"]),
                hidden=int(d["hidden"]),
                heads=int(d["heads"]),
                alpha=float(d["alpha"]),
                block_kind=str(d["block_kind"]),
                framing=FramingConfig(int(d["window_len"]), int(d["hop"])),
            )
        except KeyError as exc:
            raise ParameterError(f"hyperparameter dict is missing {exc}") from exc


@dataclass(frozen=True)
class ParamSpec:
    """Name, shape, and initializer family of one tensor."""

    name: str
    shape: tuple[int, ...]
    init: str  # "glorot_uniform" | "zeros" | "ones"

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def _norm_specs(prefix: str, dim: int) -> list[ParamSpec]:
    return [
        ParamSpec(prefix + "gain", (dim,), "ones"),
        ParamSpec(prefix + "shift", (dim,), "zeros"),
    ]


def _recurrent_axis_specs(prefix: str, hp: HyperParams) -> list[ParamSpec]:
    w, h = hp.block_channels, hp.hidden
    specs = []
    for direction in ("fwd", "bwd"):
        p = f"{prefix}blstm.{direction}."
        specs += [
            ParamSpec(p + "wx", (4 * h, w), "glorot_uniform"),
            ParamSpec(p + "wh", (4 * h, h), "glorot_uniform"),
            ParamSpec(p + "bias", (4 * h,), "zeros"),
        ]
    specs += [
        ParamSpec(prefix + "proj.weight", (w, 2 * h), "glorot_uniform"),
        ParamSpec(prefix + "proj.bias", (w,), "zeros"),
    ]
    specs += _norm_specs(prefix + "norm.", w)
    return specs


def _attention_axis_specs(prefix: str, hp: HyperParams) -> list[ParamSpec]:
    w = hp.block_channels
    specs = []
    for name in ("wq", "wk", "wv", "wo"):
        specs.append(ParamSpec(f"{prefix}att.{name}", (w, w), "glorot_uniform"))
    for name in ("bq", "bk", "bv", "bo"):
        specs.append(ParamSpec(f"{prefix}att.{name}", (w,), "zeros"))
    specs += _norm_specs(prefix + "norm1.", w)
    specs += [
        ParamSpec(prefix + "ff.expand.weight", (4 * w, w), "glorot_uniform"),
        ParamSpec(prefix + "ff.expand.bias", (4 * w,), "zeros"),
        ParamSpec(prefix + "ff.reduce.weight", (w, 4 * w), "glorot_uniform"),
        ParamSpec(prefix + "ff.reduce.bias", (w,), "zeros"),
    ]
    specs += _norm_specs(prefix + "norm2.", w)
    return specs


def param_spec(hp: HyperParams) -> list[ParamSpec]:
    """Every tensor of the model, in definition order."""
    ch, w = hp.encoder_channels, hp.block_channels
    specs = [
        ParamSpec("encoder.conv.weight", (ch, 4, 3, 3), "glorot_uniform"),
        ParamSpec("encoder.conv.bias", (ch,), "zeros"),
    ]
    specs += _norm_specs("extractor.input_norm.", ch)
    specs += [
        ParamSpec("extractor.input_proj.weight", (w, ch, 1, 1), "glorot_uniform"),
        ParamSpec("extractor.input_proj.bias", (w,), "zeros"),
    ]
    axis_specs = (
        _recurrent_axis_specs if hp.block_kind == "mdprnn" else _attention_axis_specs
    )
    for i in range(hp.num_blocks):
        for axis in ("freq", "time"):
            specs += axis_specs(f"extractor.block{i:02d}.{axis}.", hp)
    specs += [
        ParamSpec("extractor.output_proj.weight", (ch, w, 1, 1), "glorot_uniform"),
        ParamSpec("extractor.output_proj.bias", (ch,), "zeros"),
        ParamSpec("decoder.conv.weight", (2, ch, 3, 3), "glorot_uniform"),
        ParamSpec("decoder.conv.bias", (2,), "zeros"),
    ]
    return specs


def _tensor(tensors: Mapping[str, np.ndarray], name: str) -> np.ndarray:
    try:
        return tensors[name]
    except KeyError:
        raise ParameterError(f"model tensors are missing {name!r}") from None


def channel_norm(
    x: np.ndarray, gain: np.ndarray, shift: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Layer norm over the channel axis of a (channels, T, F) tensor."""
    moved = np.moveaxis(np.asarray(x, dtype=np.float64), 0, -1)
    return np.moveaxis(layer_norm(moved, gain, shift, eps), -1, 0)


def encode_spectra(
    mixture: ComplexSpectrogram,
    enrollment: ComplexSpectrogram,
    tensors: Mapping[str, np.ndarray],
    hp: HyperParams,
) -> np.ndarray:
    """Stack mixture planes with the interaction output and lift to features.

    Both inputs are compressed spectrograms; the four planes (mixture
    real/imag, weighted-enrollment real/imag) pass through a 3x3 conv
    and a ReLU, giving (encoder_channels, T, F).
    """
    rep = interaction_block(mixture, enrollment)
    stacked = np.stack([mixture.real, mixture.imag, rep.real_part, rep.imag_part])
    return relu(
        conv2d(stacked, _tensor(tensors, "encoder.conv.weight"),
               _tensor(tensors, "encoder.conv.bias"))
    )


def encode(
    mixture: Waveform,
    enrollment: Waveform,
    tensors: Mapping[str, np.ndarray],
    hp: HyperParams,
) -> np.ndarray:
    """STFT + compression + interaction + conv lift, from raw waveforms."""
    if mixture.sample_rate_hz != enrollment.sample_rate_hz:
        raise ParameterError(
            f"sample rates differ: mixture {mixture.sample_rate_hz} Hz "
            f"vs enrollment {enrollment.sample_rate_hz} Hz"
        )
    yc = drc(stft(mixture, hp.framing), hp.alpha)
    ec = drc(stft(enrollment, hp.framing), hp.alpha)
    return encode_spectra(yc, ec, tensors, hp)


def _recurrent_axis(x, tensors, prefix):
    """BLSTM -> linear -> residual -> layer norm over (batch, steps, W)."""
    fwd = LstmParams(
        _tensor(tensors, prefix + "blstm.fwd.wx"),
        _tensor(tensors, prefix + "blstm.fwd.wh"),
        _tensor(tensors, prefix + "blstm.fwd.bias"),
    )
    bwd = LstmParams(
        _tensor(tensors, prefix + "blstm.bwd.wx"),
        _tensor(tensors, prefix + "blstm.bwd.wh"),
        _tensor(tensors, prefix + "blstm.bwd.bias"),
    )
    h = blstm_forward(x, fwd, bwd)
    h = fc(h, _tensor(tensors, prefix + "proj.weight"), _tensor(tensors, prefix + "proj.bias"))
    return layer_norm(
        x + h, _tensor(tensors, prefix + "norm.gain"), _tensor(tensors, prefix + "norm.shift")
    )


def _attention_axis(x, tensors, prefix, heads):
    """Self-attention and feed-forward sublayers, each residual + norm."""
    att = MhaParams(
        _tensor(tensors, prefix + "att.wq"), _tensor(tensors, prefix + "att.bq"),
        _tensor(tensors, prefix + "att.wk"), _tensor(tensors, prefix + "att.bk"),
        _tensor(tensors, prefix + "att.wv"), _tensor(tensors, prefix + "att.bv"),
        _tensor(tensors, prefix + "att.wo"), _tensor(tensors, prefix + "att.bo"),
    )
    h = layer_norm(
        x + mha_forward(x, att, heads),
        _tensor(tensors, prefix + "norm1.gain"),
        _tensor(tensors, prefix + "norm1.shift"),
    )
    ff = fc(
        relu(fc(h, _tensor(tensors, prefix + "ff.expand.weight"),
                _tensor(tensors, prefix + "ff.expand.bias"))),
        _tensor(tensors, prefix + "ff.reduce.weight"),
        _tensor(tensors, prefix + "ff.reduce.bias"),
    )
    return layer_norm(
        h + ff,
        _tensor(tensors, prefix + "norm2.gain"),
        _tensor(tensors, prefix + "norm2.shift"),
    )


def _dual_path(u: np.ndarray, axis_fn, prefix: str) -> np.ndarray:
    """Apply an axis module along bins, then along frames, of (W, T, F)."""
    x = axis_fn(u.transpose(1, 2, 0), prefix + "freq.")   # (T, F, W)
    u = x.transpose(2, 0, 1)                              # (W, T, F)
    x = axis_fn(u.transpose(2, 1, 0), prefix + "time.")   # (F, T, W)
    return x.transpose(2, 1, 0)                           # (W, T, F)


def basic_block_mdprnn(
    u: np.ndarray, tensors: Mapping[str, np.ndarray], prefix: str
) -> np.ndarray:
    """Recurrent dual-path block: BLSTM axis modules, frequency then time.

    The frequency pass treats each frame's bins as a sequence; the time
    pass treats each bin's frames as a sequence, with separate weights.
    """
    return _dual_path(u, lambda x, p: _recurrent_axis(x, tensors, p), prefix)


def basic_block_mdptnet(
    u: np.ndarray, tensors: Mapping[str, np.ndarray], prefix: str, heads: int
) -> np.ndarray:
    """Attention dual-path block: transformer axis modules, frequency then time."""
    return _dual_path(
        u, lambda x, p: _attention_axis(x, tensors, p, heads), prefix
    )


def dual_path_block(
    u: np.ndarray, tensors: Mapping[str, np.ndarray], prefix: str, hp: HyperParams
) -> np.ndarray:
    """Dispatch one dual-path block according to the configured kind."""
    if hp.block_kind == "mdprnn":
        return basic_block_mdprnn(u, tensors, prefix)
    return basic_block_mdptnet(u, tensors, prefix, hp.heads)


def extract_mask(
    features: np.ndarray, tensors: Mapping[str, np.ndarray], hp: HyperParams
) -> np.ndarray:
    """Nonnegative mask over the feature tensor, same (channels, T, F) shape.

    Channel norm and a 1x1 conv squeeze the features into the block
    width, the dual-path blocks refine them, and a 1x1 conv plus ReLU
    expands back to a mask.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != hp.encoder_channels:
        raise ShapeError(
            f"features must be ({hp.encoder_channels}, T, F), got shape {x.shape}"
        )
    x = channel_norm(
        x,
        _tensor(tensors, "extractor.input_norm.gain"),
        _tensor(tensors, "extractor.input_norm.shift"),
    )
    u = conv2d(
        x,
        _tensor(tensors, "extractor.input_proj.weight"),
        _tensor(tensors, "extractor.input_proj.bias"),
    )
    for i in range(hp.num_blocks):
        u = dual_path_block(u, tensors, f"extractor.block{i:02d}.", hp)
    return relu(
        conv2d(
            u,
            _tensor(tensors, "extractor.output_proj.weight"),
            _tensor(tensors, "extractor.output_proj.bias"),
        )
    )


def decode(
    masked: np.ndarray,
    tensors: Mapping[str, np.ndarray],
    hp: HyperParams,
    original_len: int,
    sample_rate_hz: int = 8000,
) -> Waveform:
    """Project masked features to two spectrogram planes and synthesize.

    The 3x3 conv output is interpreted as a compressed complex
    spectrogram; expansion and overlap-add synthesis produce a waveform
    of original_len samples.
    """
    planes = conv2d(
        np.asarray(masked, dtype=np.float64),
        _tensor(tensors, "decoder.conv.weight"),
        _tensor(tensors, "decoder.conv.bias"),
    )
    spec = ComplexSpectrogram(
        planes[0],
        planes[1],
        hp.framing,
        original_len,
        compressed_with_alpha=hp.alpha,
        sample_rate_hz=sample_rate_hz,
    )
    return istft(idrc(spec))


def extract(
    mixture: Waveform,
    enrollment: Waveform,
    tensors: Mapping[str, np.ndarray],
    hp: HyperParams,
) -> Waveform:
    """Full chain: encode, mask, apply, decode.

    Deterministic: the same inputs and tensors always give the same
    output samples.
    """
    features = encode(mixture, enrollment, tensors, hp)
    mask = extract_mask(features, tensors, hp)
    return decode(
        mask * features,
        tensors,
        hp,
        original_len=len(mixture),
        sample_rate_hz=mixture.sample_rate_hz,
    )
