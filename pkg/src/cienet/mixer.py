"""Deterministic two-speaker mixture synthesis at a prescribed SIR.

A mixture is target + scaled interferer (+ optionally scaled noise),
truncated to the shortest source so the returned ground-truth target is
sample-aligned with the mixture. The target itself is never rescaled.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dsp import Waveform
from .errors import ParameterError
from .wavio import read_wav


@dataclass
class MixtureSpec:
    """Recipe for one mixture; serializes to a single JSON line.

    sir_db scales the interferer relative to the target; snr_db, when
    set, adds noise relative to the speech mixture. If snr_db is set
    without a noise_path, white Gaussian noise is generated from seed.
    """

    target_path: str
    interferer_path: str
    enrollment_path: str
    noise_path: str | None = None
    sir_db: float = 0.0
    snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.enrollment_path == self.target_path:
            raise ParameterError(
                "enrollment must be a different recording of the target speaker, "
                f"got the target file itself: {self.target_path}"
            )

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, line: str) -> "MixtureSpec":
        d = json.loads(line)
        if not isinstance(d, dict):
            raise ParameterError(f"manifest row must be a JSON object, got {line!r}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ParameterError(f"bad manifest row {line!r}: {exc}") from exc


def _power(x: np.ndarray, name: str) -> float:
    p = float(np.mean(x * x))
    if p == 0.0:
        raise ParameterError(f"{name} is silent; cannot set a level against it")
    return p


def mix_waveforms(
    target: Waveform,
    interferer: Waveform,
    sir_db: float = 0.0,
    noise: Waveform | None = None,
    snr_db: float | None = None,
) -> tuple[Waveform, Waveform]:
    """Combine sources at the requested levels.

    Returns (mixture, truncated_target). All signals are cut to the
    shortest length first; powers are measured on the truncated
    segments so the realized SIR is exact by construction.
    """
    if target.sample_rate_hz != interferer.sample_rate_hz:
        raise ParameterError(
            f"sample rates differ: target {target.sample_rate_hz} Hz "
            f"vs interferer {interferer.sample_rate_hz} Hz"
        )
    if (noise is None) != (snr_db is None):
        raise ParameterError("noise and snr_db must be given together")
    n = min(len(target), len(interferer))
    if noise is not None:
        if noise.sample_rate_hz != target.sample_rate_hz:
            raise ParameterError(
                f"noise rate {noise.sample_rate_hz} Hz does not match "
                f"{target.sample_rate_hz} Hz"
            )
        n = min(n, len(noise))
    if n == 0:
        raise ParameterError("sources have no overlapping samples")
    t = target.samples[:n]
    i = interferer.samples[:n]
    gain_i = np.sqrt(_power(t, "target") / _power(i, "interferer")) * 10.0 ** (
        -sir_db / 20.0
    )
    speech = t + gain_i * i
    if noise is not None:
        nz = noise.samples[:n]
        gain_n = np.sqrt(_power(speech, "speech mixture") / _power(nz, "noise")) * 10.0 ** (
            -snr_db / 20.0
        )
        speech = speech + gain_n * nz
    rate = target.sample_rate_hz
    return Waveform(speech, rate), Waveform(t.copy(), rate)


def generate_noise(num_samples: int, seed: int, sample_rate_hz: int) -> Waveform:
    """Seeded white Gaussian noise at unit power."""
    rng = np.random.default_rng(seed)
    return Waveform(rng.standard_normal(num_samples), sample_rate_hz)


def resolve_noise(
    noise_path: str | None,
    snr_db: float | None,
    num_samples: int,
    seed: int,
    sample_rate_hz: int,
) -> Waveform | None:
    """Noise source for a mixture: a file, generated white noise, or none."""
    if noise_path is not None:
        if snr_db is None:
            raise ParameterError("noise given without snr_db")
        return read_wav(noise_path)
    if snr_db is not None:
        return generate_noise(num_samples, seed, sample_rate_hz)
    return None


def mix(spec: MixtureSpec) -> tuple[Waveform, Waveform]:
    """Realize a MixtureSpec from files on disk."""
    target = read_wav(spec.target_path)
    interferer = read_wav(spec.interferer_path)
    noise = resolve_noise(
        spec.noise_path,
        spec.snr_db,
        min(len(target), len(interferer)),
        spec.seed,
        target.sample_rate_hz,
    )
    return mix_waveforms(target, interferer, spec.sir_db, noise, spec.snr_db)


def speaker_of(path: str) -> str:
    """Speaker label: the file stem up to the first underscore."""
    return Path(path).stem.split("_")[0]


def make_manifest(
    wav_dir: str,
    count: int,
    seed: int = 0,
    sir_db: float = 0.0,
    snr_db: float | None = None,
) -> list[MixtureSpec]:
    """Draw mixture recipes from a directory of <speaker>_<utt>.wav files.

    Each row pairs a target utterance with an enrollment utterance from
    the same speaker (never the same file) and an interferer utterance
    from a different speaker. The draw is a pure function of the sorted
    file list and the seed.
    """
    if count <= 0:
        raise ParameterError(f"count must be positive, got {count}")
    files = sorted(str(p) for p in Path(wav_dir).glob("*.wav"))
    by_speaker: dict[str, list[str]] = {}
    for f in files:
        by_speaker.setdefault(speaker_of(f), []).append(f)
    eligible = sorted(s for s, utts in by_speaker.items() if len(utts) >= 2)
    if not eligible or len(by_speaker) < 2:
        raise ParameterError(
            f"{wav_dir}: need at least two speakers and a target speaker with "
            "two utterances"
        )
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(count):
        target_speaker = eligible[rng.integers(len(eligible))]
        others = sorted(s for s in by_speaker if s != target_speaker)
        interferer_speaker = others[rng.integers(len(others))]
        target, enrollment = rng.choice(
            by_speaker[target_speaker], size=2, replace=False
        )
        interferer = by_speaker[interferer_speaker][
            rng.integers(len(by_speaker[interferer_speaker]))
        ]
        rows.append(
            MixtureSpec(
                target_path=str(target),
                interferer_path=str(interferer),
                enrollment_path=str(enrollment),
                sir_db=sir_db,
                snr_db=snr_db,
                seed=int(rng.integers(2**31)),
            )
        )
    return rows


def save_manifest(rows: list[MixtureSpec], path: str) -> None:
    """One JSON object per line."""
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(row.to_json() + "\n")


def load_manifest(path: str) -> list[MixtureSpec]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(MixtureSpec.from_json(line))
    return rows
