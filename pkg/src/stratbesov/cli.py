"""Experiment runner: ``stratbesov <subcommand> [flags]``.

Exit codes: 0 all thresholds met, 1 threshold failure, 2 unreadable or
malformed config, 3 precondition violation.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, PreconditionError, load_config
from .experiments import SUBCOMMANDS, run_experiment
from .io import write_csv
from .spectral import ConvergenceError, KernelVerificationError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PRECONDITION = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stratbesov", description="Besov and coorbit experiments on stratified groups.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="[section] key = value file; defaults when omitted")
    common.add_argument("--out", metavar="DIR", default="results", help="output directory (default: results)")
    common.add_argument("--seed", metavar="N", type=int, help="override [general] seed")
    common.add_argument("--threads", metavar="N", type=int, default=1, help="worker threads (default 1, deterministic)")
    common.add_argument("--strict", action="store_true", help="treat warnings as failures")
    common.add_argument("--plots", action="store_true", help="also write matplotlib figures next to the CSV")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", required=True)
    for name, fn in SUBCOMMANDS.items():
        doc = (fn.__doc__ or "").strip().splitlines()
        sub.add_parser(name, parents=[common], help=doc[0] if doc else None)
    return p


def _set_threads(n: int) -> None:
    import numba

    from . import _heisconv  # noqa: F401  selects the threading layer before launch
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def run(command: str, config=None, out="results", seed=None, threads=1, strict=False, plots=False) -> int:
    try:
        cfg = load_config(config)
        if seed is not None:
            if seed < 0:
                raise PreconditionError("--seed must be >= 0")
            cfg = cfg.with_seed(seed)
        if threads < 1:
            raise PreconditionError("--threads must be >= 1")
    except ConfigError as exc:
        print(f"{command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"{command}: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    _set_threads(threads)
    try:
        res = run_experiment(command, cfg, threads)
    except (ValueError, ArithmeticError, ConvergenceError, KernelVerificationError) as exc:
        print(f"{command}: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    out = Path(out)
    write_csv(out / f"{command}.csv", res.header, res.rows)
    for stem, (header, rows) in res.attachments.items():
        write_csv(out / f"{stem}.csv", header, rows)
    if plots:
        from .plotting import render
        render(res, out)
    for w in res.warnings:
        print(f"{command}: warning: {w}", file=sys.stderr)
    print(res.summary(strict))
    ok = res.passed and not (strict and res.warnings)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.seed, args.threads, args.strict, args.plots)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
