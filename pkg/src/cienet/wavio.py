"""Mono 16-bit PCM WAV reading and writing via the stdlib wave module."""

from __future__ import annotations

import wave

import numpy as np

from .dsp import Waveform
from .errors import ParameterError

INT16_SCALE = 32768.0


def read_wav(path: str) -> Waveform:
    """Load a mono 16-bit PCM file as float64 samples in [-1, 1)."""
    with wave.open(path, "rb") as f:
        channels = f.getnchannels()
        width = f.getsampwidth()
        rate = f.getframerate()
        frames = f.readframes(f.getnframes())
    if channels != 1:
        raise ParameterError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise ParameterError(f"{path}: expected 16-bit samples, got {8 * width}-bit")
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / INT16_SCALE
    return Waveform(samples, rate)


def write_wav(path: str, waveform: Waveform) -> None:
    """Write float64 samples as mono 16-bit PCM, clipping to the int16 range."""
    clipped = np.clip(waveform.samples, -1.0, (INT16_SCALE - 1.0) / INT16_SCALE)
    ints = np.rint(clipped * INT16_SCALE).astype("<i2")
    with wave.open(path, "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(waveform.sample_rate_hz)
        f.writeframes(ints.tobytes())
