"""Command-line interface.

Subcommands:
    simulate    run a replicated synthetic experiment from a config file
    select      run the selection pipeline on CSV data with a group map
    knockoffs   emit the sampled knockoff matrix for a design (debugging aid)
    hypergeom   tail probability calculator for selection enrichment

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import METHODS, build_experiment_config, parse_config_file
from .errors import (
    DegenerateCovariance,
    DegenerateInput,
    DimensionMismatch,
    EmptyInput,
    InvalidCounts,
    InvalidLevel,
    NonConvergence,
    NotPositiveDefinite,
    NumericalDivergence,
    ParseError,
)
from .metrics import hypergeom_tail
from .network import TrainConfig
from .runner import emit_knockoffs, log, main_summary_lines, run_experiment, run_selection

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_DATA_ERRORS = (
    ParseError,
    DegenerateInput,
    DimensionMismatch,
    InvalidLevel,
    InvalidCounts,
    EmptyInput,
    ValueError,
    OSError,
)
_NUMERICAL_ERRORS = (
    NotPositiveDefinite,
    NonConvergence,
    DegenerateCovariance,
    NumericalDivergence,
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        log(f"error: {message}")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="groupknock", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a replicated synthetic experiment")
    sim.add_argument("--config", help="flat key=value config file")
    sim.add_argument("--q", type=float, help="target group FDR level")
    sim.add_argument("--reps", type=int, help="number of replications")
    sim.add_argument("--seed", type=int, help="base seed for replication streams")
    sim.add_argument("--method", choices=METHODS, help="group statistic")
    sim.add_argument("--ridge", type=float, help="ridge for estimated covariances")
    sim.add_argument("--workers", type=int, help="parallel worker count")
    sim.add_argument("--out", help="result CSV path")

    sel = sub.add_parser("select", help="select groups from CSV data")
    sel.add_argument("--x", required=True, help="feature matrix CSV (header row)")
    sel.add_argument("--y", required=True, help="single-column response CSV")
    sel.add_argument("--groups", required=True, help="feature,group map CSV")
    sel.add_argument("--q", type=float, default=0.2)
    sel.add_argument("--method", choices=METHODS, default="gknock")
    sel.add_argument("--seed", type=int, default=1)
    sel.add_argument("--ridge", type=float, default=1e-3)
    sel.add_argument("--out", help="report CSV path")

    kn = sub.add_parser("knockoffs", help="emit the knockoff matrix for a design")
    kn.add_argument("--x", required=True)
    kn.add_argument("--groups", required=True)
    kn.add_argument("--seed", type=int, default=1)
    kn.add_argument("--ridge", type=float, default=1e-3)
    kn.add_argument("--out", required=True)

    hyp = sub.add_parser("hypergeom", help="tail probability of confirmed draws")
    hyp.add_argument("--confirmed", type=int, required=True)
    hyp.add_argument("--unconfirmed", type=int, required=True)
    hyp.add_argument("--draw", type=int, required=True)
    hyp.add_argument("--threshold", type=int, required=True)
    return parser


def _cmd_simulate(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {}
    for key, attr in (
        ("q", "q"),
        ("replications", "reps"),
        ("seed", "seed"),
        ("method", "method"),
        ("ridge", "ridge"),
        ("workers", "workers"),
        ("out", "out"),
    ):
        value = getattr(args, attr)
        if value is not None:
            overrides[key] = str(value)
    cfg = build_experiment_config(file_values, overrides)
    _, summary = run_experiment(cfg)
    for line in main_summary_lines(summary):
        print(line)
    if cfg.output_path:
        print(f"results written to {cfg.output_path}")
    return EXIT_OK


def _cmd_select(args) -> int:
    sel, group_labels = run_selection(
        args.x,
        args.y,
        args.groups,
        q=args.q,
        method=args.method,
        seed=args.seed,
        ridge=args.ridge,
        train_cfg=TrainConfig(),
        output_path=args.out,
    )
    tau = "inf" if sel.tau == float("inf") else repr(sel.tau)
    print(f"threshold tau={tau}, {sel.n_selected} of {len(group_labels)} groups selected")
    for j in sel.selected:
        print(f"selected: {group_labels[j]} (W={sel.w[j]:.6g})")
    if args.out:
        print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_knockoffs(args) -> int:
    emit_knockoffs(args.x, args.groups, args.seed, args.ridge, args.out)
    print(f"knockoff matrix written to {args.out}")
    return EXIT_OK


def _cmd_hypergeom(args) -> int:
    prob = hypergeom_tail(args.confirmed, args.unconfirmed, args.draw, args.threshold)
    print(f"{prob:.6g}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "select": _cmd_select,
    "knockoffs": _cmd_knockoffs,
    "hypergeom": _cmd_hypergeom,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        log(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    except _DATA_ERRORS as exc:
        log(f"error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
