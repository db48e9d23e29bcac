"""Command-line entry points.

Every subcommand prints single-line JSON records on stdout so output is
easy to pipe; human-readable diagnostics go to stderr. Exit codes: 0 on
success, 2 for file-system problems, 3 for domain errors (bad formats,
bad shapes, bad parameters).

All audio crossing the CLI boundary must be mono 16-bit 8 kHz WAV; the
library itself accepts other rates, the tool does not.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import gradcheck as gradcheck_mod
from . import metrics, mixer, model_io, report
from .dsp import Waveform
from .errors import CienetError
from .network import BLOCK_KINDS, HyperParams, extract
from .wavio import read_wav, write_wav

REQUIRED_RATE_HZ = 8000


def _emit(record: dict) -> None:
    print(json.dumps(record))


def _read_8k(path: str) -> Waveform:
    wav = read_wav(path)
    if wav.sample_rate_hz != REQUIRED_RATE_HZ:
        raise CienetError(
            f"{path}: expected {REQUIRED_RATE_HZ} Hz audio, got {wav.sample_rate_hz} Hz"
        )
    return wav


def cmd_init(args: argparse.Namespace) -> int:
    params = model_io.init_params(HyperParams(block_kind=args.arch), seed=args.seed)
    model_io.save(params, args.out)
    _emit(
        {
            "out": args.out,
            "param_count": model_io.param_count(params),
            "arch": args.arch,
            "seed": args.seed,
        }
    )
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    params = model_io.load(args.model)
    _emit(
        {
            "model": args.model,
            "param_count": model_io.param_count(params),
            "hyper": params.hyper.to_dict(),
        }
    )
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    params = model_io.load(args.model)
    mixture = _read_8k(args.mixture)
    enrollment = _read_8k(args.enroll)
    estimate = extract(mixture, enrollment, params.tensors, params.hyper)
    write_wav(args.out, estimate)
    _emit(
        {
            "out": args.out,
            "samples": len(estimate),
            "duration_s": round(estimate.duration_s, 6),
        }
    )
    return 0


def cmd_mix(args: argparse.Namespace) -> int:
    target = _read_8k(args.target)
    interferer = _read_8k(args.interferer)
    if args.noise is not None:
        _read_8k(args.noise)
    noise = mixer.resolve_noise(
        args.noise,
        args.snr,
        min(len(target), len(interferer)),
        args.seed,
        REQUIRED_RATE_HZ,
    )
    mixture, reference = mixer.mix_waveforms(target, interferer, args.sir, noise, args.snr)
    write_wav(args.out, mixture)
    write_wav(args.out_ref, reference)
    _emit(
        {
            "out": args.out,
            "out_ref": args.out_ref,
            "samples": len(mixture),
            "sir_db": args.sir,
            "snr_db": args.snr,
        }
    )
    return 0


def cmd_manifest(args: argparse.Namespace) -> int:
    rows = mixer.make_manifest(
        args.wav_dir, args.count, seed=args.seed, sir_db=args.sir, snr_db=args.snr
    )
    mixer.save_manifest(rows, args.out)
    _emit({"out": args.out, "rows": len(rows)})
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    est = _read_8k(args.est)
    mix = _read_8k(args.mix)
    ref = _read_8k(args.ref)
    print(metrics.improvements(est, mix, ref).to_json())
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    for rep in gradcheck_mod.run_gradcheck(seed=args.seed, eps=args.eps):
        print(rep.to_json())
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    params = model_io.load(args.model)
    rows = mixer.load_manifest(args.manifest)
    for spec in rows:
        for path in (spec.target_path, spec.interferer_path, spec.enrollment_path):
            _read_8k(path)
        if spec.noise_path is not None:
            _read_8k(spec.noise_path)
    records = report.run_report(rows, params, args.out_dir, figures=args.figures)
    improvements = [r["si_sdri_db"] for r in records]
    _emit(
        {
            "out_dir": args.out_dir,
            "rows": len(records),
            "mean_si_sdri_db": sum(improvements) / len(improvements) if records else None,
            "figures": args.figures,
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cienet",
        description="Target-speaker extraction: models, mixtures, metrics, reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a model file with stock settings")
    p.add_argument("--arch", choices=BLOCK_KINDS, default="mdprnn")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output .cien path")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("inspect", help="print a model file's size and settings")
    p.add_argument("--model", required=True, help=".cien path")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("extract", help="pull the enrolled speaker out of a mixture")
    p.add_argument("--model", required=True)
    p.add_argument("--mixture", required=True, help="mixture WAV (8 kHz mono 16-bit)")
    p.add_argument("--enroll", required=True, help="enrollment WAV")
    p.add_argument("--out", required=True, help="estimate WAV path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("mix", help="combine two sources at a prescribed SIR")
    p.add_argument("--target", required=True)
    p.add_argument("--interferer", required=True)
    p.add_argument("--sir", type=float, default=0.0, help="target-to-interferer ratio, dB")
    p.add_argument("--noise", default=None, help="noise WAV (white noise if omitted with --snr)")
    p.add_argument("--snr", type=float, default=None, help="speech-to-noise ratio, dB")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="mixture WAV path")
    p.add_argument("--out-ref", required=True,
                   help="path for the truncated ground-truth target")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("manifest", help="draw mixture recipes from a WAV directory")
    p.add_argument("--wav-dir", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sir", type=float, default=0.0)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--out", required=True, help="manifest path (one JSON row per line)")
    p.set_defaults(func=cmd_manifest)

    p = sub.add_parser("eval", help="score an estimate against its reference")
    p.add_argument("--est", required=True)
    p.add_argument("--mix", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="verify analytic gradients numerically")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="evaluate a manifest and render figures")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CienetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
