"""Command-line entry point: ``nsacdg <subcommand> --config FILE [--out PATH]``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4

_SUBCOMMANDS = ("convergence-space", "convergence-time", "energy", "single-run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsacdg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI experiment configuration")
        sp.add_argument("--out", help="output CSV path (overrides [experiment] output)")
        sp.add_argument("--check", action="store_true",
                        help="verify the expected rates or conservation properties; exit 4 on failure")
        sp.add_argument("--max-cells", type=int, default=None,
                        help="raise the cell-count cap of the spatial study")
        sp.add_argument("--threads", type=int, default=1, help="worker processes for independent cases")
    return parser


def _output(cfg: ExperimentConfig, args) -> str:
    return args.out or cfg.output or f"{args.command}.csv"


def _dump_path(out: str) -> str:
    stem = out[:-4] if out.endswith(".csv") else out
    return f"{stem}_fields.csv"


def _report(fails: Sequence[str]) -> int:
    for msg in fails:
        print(f"CHECK FAILED: {msg}", file=sys.stderr)
    if not fails:
        print("check passed")
    return EXIT_CHECK if fails else EXIT_OK


def _convergence_space(cfg, args) -> int:
    rows = ex.run_convergence_space(cfg, max_cells=args.max_cells, threads=args.threads)
    out = _output(cfg, args)
    ex.write_csv(out, ex.SPACE_HEADER, rows)
    print(f"wrote {out}")
    if args.check:
        return _report(ex.check_convergence(rows, cfg.degree + 0.7, cfg.degree + 1.3))
    return EXIT_OK


def _convergence_time(cfg, args) -> int:
    rows = ex.run_convergence_time(cfg, threads=args.threads)
    out = _output(cfg, args)
    ex.write_csv(out, ex.TIME_HEADER, rows)
    print(f"wrote {out}")
    if args.check:
        return _report(ex.check_convergence(rows, 1.8, 2.2))
    return EXIT_OK


def _write_energy(run_, out: str, cfg) -> None:
    ex.write_csv(out, ex.ENERGY_HEADER, run_.rows)
    print(f"wrote {out}")
    if cfg.dump_every:
        ex.write_csv(_dump_path(out), ex.DUMP_HEADER, run_.dump)
        print(f"wrote {_dump_path(out)}")


def _stabilized(cfg) -> bool:
    fp = cfg.flux_params()
    return max(fp.alpha1, fp.alpha2, fp.alpha3) > 0


def _energy(cfg, args) -> int:
    runs = ex.run_energy(cfg, threads=args.threads)
    paths = ex.energy_output_paths(_output(cfg, args), [r.eta for r in runs])
    for run_, path in zip(runs, paths):
        _write_energy(run_, path, cfg)
    if args.check:
        fails = [m for r in runs for m in ex.check_energy(r, _stabilized(cfg))]
        return _report(fails)
    return EXIT_OK


def _single(cfg, args) -> int:
    run_ = ex.run_single(cfg)
    _write_energy(run_, _output(cfg, args), cfg)
    if args.check:
        return _report(ex.check_energy(run_, _stabilized(cfg)))
    return EXIT_OK


_HANDLERS = {
    "convergence-space": _convergence_space,
    "convergence-time": _convergence_time,
    "energy": _energy,
    "single-run": _single,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.max_cells is not None and args.max_cells < 1:
            raise ConfigError("--max-cells must be >= 1")
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config describes a {cfg.kind!r} experiment, not {args.command!r}")
        return _HANDLERS[args.command](cfg, args)
    except ex.CaseFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
