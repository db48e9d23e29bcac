"""Model parameter container, deterministic init, and .cien file I/O.

File layout, all little-endian:

    bytes 0..3    magic b"CIEN"
    bytes 4..7    format version, uint32 (currently 1)
    bytes 8..15   header length in bytes, uint64
    header        UTF-8 JSON: {"hyper": {...}, "tensors": [{"name", "shape"}...]}
    payload       float32 tensor data, concatenated in header order

The header lists tensors in lexicographic name order, so two saves of
the same parameters are byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError
from .network import HyperParams, param_spec

MAGIC = b"CIEN"
FORMAT_VERSION = 1


@dataclass
class ModelParams:
    """Hyperparameters plus the flat name->float64-array tensor map."""

    hyper: HyperParams
    tensors: dict[str, np.ndarray]


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).

    Matrices (out, in) use the axis sizes as fans; conv kernels
    (out, in, kh, kw) multiply the fans by the receptive field.
    """
    if len(shape) == 2:
        fan_out, fan_in = shape
    elif len(shape) == 4:
        receptive = shape[2] * shape[3]
        fan_out, fan_in = shape[0] * receptive, shape[1] * receptive
    else:
        raise ParameterError(f"no fan rule for shape {shape}")
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(hp: HyperParams, seed: int = 0) -> ModelParams:
    """Draw every tensor from a single seeded generator, in param_spec order."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for spec in param_spec(hp):
        if spec.init == "glorot_uniform":
            tensors[spec.name] = glorot_uniform(rng, spec.shape)
        elif spec.init == "ones":
            tensors[spec.name] = np.ones(spec.shape)
        elif spec.init == "zeros":
            tensors[spec.name] = np.zeros(spec.shape)
        else:
            raise ParameterError(f"unknown init family {spec.init!r}")
    return ModelParams(hp, tensors)


def param_count(params: ModelParams) -> int:
    return sum(int(t.size) for t in params.tensors.values())


def save(params: ModelParams, path: str) -> None:
    """Write a .cien file; tensor order is lexicographic by name."""
    names = sorted(params.tensors)
    header = {
        "hyper": params.hyper.to_dict(),
        "tensors": [
            {"name": n, "shape": list(params.tensors[n].shape)} for n in names
        ],
    }
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for n in names:
            f.write(np.ascontiguousarray(params.tensors[n], dtype="<f4").tobytes())


def load(path: str) -> ModelParams:
    """Read a .cien file, validating structure before trusting any field."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 16:
        raise FormatError(f"file is {len(data)} bytes, shorter than the 16-byte preamble")
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r} at byte 0, expected {MAGIC!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version} at byte 4")
    (header_len,) = struct.unpack_from("<Q", data, 8)
    if 16 + header_len > len(data):
        raise FormatError(
            f"header length {header_len} at byte 8 overruns the {len(data)}-byte file"
        )
    try:
        header = json.loads(data[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header at byte 16 is not valid JSON: {exc}") from exc
    if not isinstance(header, dict) or "hyper" not in header or "tensors" not in header:
        raise FormatError("header must carry 'hyper' and 'tensors' entries")
    try:
        hyper = HyperParams.from_dict(header["hyper"])
    except ParameterError as exc:
        raise FormatError(f"bad hyperparameters in header: {exc}") from exc

    entries = header["tensors"]
    if not isinstance(entries, list):
        raise FormatError("header 'tensors' must be a list")
    offset = 16 + header_len
    tensors: dict[str, np.ndarray] = {}
    prev_name = ""
    for entry in entries:
        if not isinstance(entry, dict) or "name" not in entry or "shape" not in entry:
            raise FormatError(f"malformed tensor entry {entry!r}")
        name = entry["name"]
        if not isinstance(name, str) or not name:
            raise FormatError(f"tensor name must be a non-empty string, got {name!r}")
        if name <= prev_name:
            raise FormatError(f"tensor names out of lexicographic order at {name!r}")
        prev_name = name
        shape = tuple(int(s) for s in entry["shape"])
        if any(s <= 0 for s in shape):
            raise FormatError(f"tensor {name!r} has non-positive shape {shape}")
        nbytes = 4 * int(np.prod(shape))
        if offset + nbytes > len(data):
            raise FormatError(
                f"payload for tensor {name!r} at byte {offset} overruns the file"
            )
        raw = np.frombuffer(data, dtype="<f4", count=int(np.prod(shape)), offset=offset)
        tensors[name] = raw.astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(data):
        raise FormatError(
            f"{len(data) - offset} trailing bytes after the last tensor at byte {offset}"
        )

    expected = {s.name: s.shape for s in param_spec(hyper)}
    if set(tensors) != set(expected):
        missing = sorted(set(expected) - set(tensors))
        extra = sorted(set(tensors) - set(expected))
        raise FormatError(
            f"tensor set does not match the architecture: missing {missing[:3]}, "
            f"unexpected {extra[:3]}"
        )
    for name, arr in tensors.items():
        if arr.shape != expected[name]:
            raise FormatError(
                f"tensor {name!r} has shape {arr.shape}, architecture expects {expected[name]}"
            )
    return ModelParams(hyper, tensors)
