"""Command-line entry point: ``becr {metrics,becr,spectrogram,bench}``.

Exit codes: 0 ok, 1 usage, 2 input/parse error, 3 degenerate data,
4 internal consistency failure. Data goes to stdout (or ``--out``),
diagnostics to stderr. ``BECR_THREADS`` caps BLAS/OpenMP threads.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys

from . import __version__
from .audio import CqtConfig, StftConfig, cqt, load_wav, mel_spectrogram, stft
from .bench import format_table, rows_to_json, run_benchmark
from .dispersion import dispersion_report
from .errors import (
    BecrError,
    ConsistencyError,
    DegenerateSpectrumError,
)
from .io import dump_json, read_embedding_csv, write_matrix_csv
from .loss import DEFAULT_EPSILON, DEFAULT_LAMBDA, BecrConfig, becr_evaluate, gradient_check

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_CONSISTENCY = 4

GRAD_CHECK_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for bad input data
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dims(text: str) -> list[int]:
    try:
        dims = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("dimensions must be positive integers")
    return dims


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="becr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("metrics", help="dispersion report for an embedding CSV")
    p.add_argument("input", help="CSV file, one row per sample")
    p.add_argument("--header", action="store_true", help="skip the first line")
    p.add_argument("--k", type=int, default=4, help="k-means cluster count (default 4)")
    p.add_argument("--m", type=int, default=2, help="top-m eigenvalues for the ratio (default 2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("becr", help="evaluate the regularizer on an embedding CSV")
    p.add_argument("input")
    p.add_argument("--header", action="store_true")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--vanilla-loss", type=float, default=1.0, help="task loss L to mix in")
    p.add_argument(
        "--grad-check",
        action="store_true",
        help=f"compare the analytic gradient to finite differences; exit 4 if error > {GRAD_CHECK_TOL:g} "
        "(costs 2*N*D loss evaluations)",
    )
    p.add_argument("--out")

    p = sub.add_parser("spectrogram", help="STFT, mel or CQT spectrogram of a WAV file as CSV")
    p.add_argument("input")
    p.add_argument("--mode", choices=("stft", "mel", "cqt"), default="stft")
    p.add_argument("--window", choices=("hann", "rectangular"), default="hann")
    p.add_argument("--window-size", type=int, default=1024)
    p.add_argument("--hop", type=int, default=None, help="default window_size / 4")
    p.add_argument("--n-mels", type=int, default=64)
    p.add_argument("--f-lo", type=float, default=0.0)
    p.add_argument("--f-hi", type=float, default=None, help="default Nyquist")
    p.add_argument("--f-min", type=float, default=32.70)
    p.add_argument("--bins-per-octave", type=int, default=12)
    p.add_argument("--n-bins", type=int, default=84)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--meta", help="write a JSON sidecar with axis and hop metadata")

    p = sub.add_parser("bench", help="time eigen vs trace vs Gram routes to the Gini index")
    p.add_argument("--dims", type=_dims, default=[8, 64, 256, 768])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the JSON table here")
    p.add_argument("--json", action="store_true", help="print JSON instead of the text table")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _provenance(args, **extra) -> dict:
    info = {"input": getattr(args, "input", None), "tool_version": __version__}
    info.update(extra)
    return info


def cmd_metrics(args) -> int:
    x = read_embedding_csv(args.input, header=args.header)
    report = dispersion_report(x, k=args.k, m=args.m, seed=args.seed)
    payload = report.to_dict()
    payload["provenance"] = _provenance(args, k=args.k, m=args.m, seed=args.seed)
    _emit(dump_json(payload), args.out)
    return EXIT_OK


def cmd_becr(args) -> int:
    x = read_embedding_csv(args.input, header=args.header)
    config = BecrConfig(epsilon=args.epsilon, lam=args.lam)
    result = becr_evaluate(x, config, args.vanilla_loss)
    payload = {
        "gini": result.gini,
        "penalty": result.penalty,
        "total_loss": result.total_loss,
        "vanilla_loss": result.vanilla_loss,
        "epsilon": config.epsilon,
        "lambda": config.lam,
        "n_samples": x.shape[0],
        "dim": x.shape[1],
        "provenance": _provenance(args),
    }
    code = EXIT_OK
    if args.grad_check:
        err = gradient_check(x, config)
        payload["max_relative_gradient_error"] = err
        payload["grad_check_passed"] = err <= GRAD_CHECK_TOL
        if err > GRAD_CHECK_TOL:
            print(
                f"becr: gradient check failed: max relative error {err:.3e} > {GRAD_CHECK_TOL:g}",
                file=sys.stderr,
            )
            code = EXIT_CONSISTENCY
    _emit(dump_json(payload), args.out)
    return code


def cmd_spectrogram(args) -> int:
    audio = load_wav(args.input)
    if args.mode == "cqt":
        config = CqtConfig(
            f_min=args.f_min,
            bins_per_octave=args.bins_per_octave,
            n_bins=args.n_bins,
            window=args.window,
        )
        spec = cqt(audio, config)
        params = {"f_min": config.f_min, "bins_per_octave": config.bins_per_octave,
                  "n_bins": config.n_bins, "window": config.window}
    else:
        config = StftConfig(window_size=args.window_size, hop=args.hop, window=args.window)
        spec = stft(audio, config)
        params = {"window_size": config.window_size, "hop": config.hop, "window": config.window}
        if args.mode == "mel":
            spec = mel_spectrogram(spec, n_mels=args.n_mels, f_lo=args.f_lo, f_hi=args.f_hi)
            f_hi = audio.sample_rate / 2 if args.f_hi is None else args.f_hi
            params.update(n_mels=args.n_mels, f_lo=args.f_lo, f_hi=f_hi)

    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_matrix_csv(fh, spec.magnitudes, header=spec.bin_frequencies)
    else:
        write_matrix_csv(sys.stdout, spec.magnitudes, header=spec.bin_frequencies)

    if args.meta:
        meta = {
            "mode": args.mode,
            "axis": spec.axis,
            "frequency_unit": "mel" if spec.axis == "mel" else "Hz",
            "bin_frequencies": spec.bin_frequencies.tolist(),
            "frame_hop_seconds": spec.frame_hop_seconds,
            "n_frames": spec.n_frames,
            "n_bins": spec.n_bins,
            "sample_rate": audio.sample_rate,
            "magnitude": "band power" if spec.axis == "mel" else "linear magnitude",
            "params": params,
            "provenance": _provenance(args),
        }
        with open(args.meta, "w") as fh:
            fh.write(dump_json(meta))
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    rows = run_benchmark(args.dims, n=args.n, repeats=args.repeats, seed=args.seed)
    payload = rows_to_json(rows, seed=args.seed)
    if args.json:
        sys.stdout.write(dump_json(payload))
    else:
        print(format_table(rows))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dump_json(payload))
    return EXIT_OK


COMMANDS = {
    "metrics": cmd_metrics,
    "becr": cmd_becr,
    "spectrogram": cmd_spectrogram,
    "bench": cmd_bench,
}


def _thread_limit():
    raw = os.environ.get("BECR_THREADS")
    if not raw:
        return contextlib.nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"BECR_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise UsageError(f"BECR_THREADS must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"becr {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateSpectrumError as exc:
        print(f"becr {args.command}: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConsistencyError as exc:
        print(f"becr {args.command}: consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (BecrError, OSError) as exc:
        print(f"becr {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
