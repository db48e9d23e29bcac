"""Batch evaluation reports: metrics CSV plus rendered spectrogram figures."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dsp import ComplexSpectrogram, Waveform, stft
from .metrics import improvements
from .mixer import MixtureSpec, mix
from .model_io import ModelParams
from .network import extract
from .wavio import read_wav

CSV_COLUMNS = [
    "index",
    "target_path",
    "interferer_path",
    "enrollment_path",
    "sir_db",
    "si_sdr_db",
    "si_sdri_db",
    "sdr_db",
    "sdri_db",
    "capped",
]


def magnitude_db(spec: ComplexSpectrogram, floor_db: float = -80.0) -> np.ndarray:
    """Magnitude in dB relative to the frame-wise peak, clipped below."""
    mag = spec.magnitude()
    peak = mag.max()
    if peak == 0.0:
        return np.full(mag.shape, floor_db)
    db = 20.0 * np.log10(np.maximum(mag, 1e-12) / peak)
    return np.maximum(db, floor_db)


def save_spectrogram_figure(
    path: str, panels: list[tuple[str, Waveform]], framing=None
) -> None:
    """Render labeled waveform spectrograms stacked in one PNG."""
    fig, axes = plt.subplots(
        len(panels), 1, figsize=(8.0, 2.2 * len(panels)), squeeze=False
    )
    for ax, (title, wav) in zip(axes[:, 0], panels):
        spec = stft(wav, framing) if framing is not None else stft(wav)
        img = magnitude_db(spec)
        hop_s = spec.framing.hop / wav.sample_rate_hz
        nyquist_khz = wav.sample_rate_hz / 2000.0
        ax.imshow(
            img.T,
            origin="lower",
            aspect="auto",
            extent=(0.0, spec.frames * hop_s, 0.0, nyquist_khz),
            cmap="magma",
            vmin=-80.0,
            vmax=0.0,
        )
        ax.set_title(title, fontsize=9)
        ax.set_ylabel("kHz")
    axes[-1, 0].set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_improvement_figure(path: str, si_sdri_db: list[float]) -> None:
    """Bar chart of per-mixture SI-SDR improvement."""
    fig, ax = plt.subplots(figsize=(8.0, 3.0))
    idx = np.arange(len(si_sdri_db))
    ax.bar(idx, si_sdri_db, color="#3465a4")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("mixture")
    ax.set_ylabel("SI-SDR improvement (dB)")
    ax.set_xticks(idx)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def run_report(
    rows: list[MixtureSpec],
    model: ModelParams,
    out_dir: str,
    figures: bool = True,
) -> list[dict]:
    """Extract every manifest row, score it, and write the artifacts.

    Produces metrics.csv with one line per mixture, a spectrogram PNG
    per mixture (mixture / enrollment / estimate / target), and a
    summary bar chart of improvements. Returns the metric rows.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    gains = []
    for i, spec in enumerate(rows):
        mixture, target = mix(spec)
        enrollment = read_wav(spec.enrollment_path)
        estimate = extract(mixture, enrollment, model.tensors, model.hyper)
        report = improvements(estimate, mixture, target)
        records.append(
            {
                "index": i,
                "target_path": spec.target_path,
                "interferer_path": spec.interferer_path,
                "enrollment_path": spec.enrollment_path,
                "sir_db": spec.sir_db,
                "si_sdr_db": report.si_sdr_db,
                "si_sdri_db": report.si_sdri_db,
                "sdr_db": report.sdr_db,
                "sdri_db": report.sdri_db,
                "capped": report.capped,
            }
        )
        gains.append(report.si_sdri_db)
        if figures:
            save_spectrogram_figure(
                str(out / f"mixture_{i:03d}.png"),
                [
                    ("mixture", mixture),
                    ("enrollment", enrollment),
                    ("estimate", estimate),
                    ("target", target),
                ],
                model.hyper.framing,
            )
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(records)
    if figures:
        save_improvement_figure(str(out / "improvement.png"), gains)
    return records
