"""``leafqueue`` command line tool.

Exit codes: 0 success, 1 input or usage error, 2 unconverged fit,
3 numerical failure. Output files go to ``--outdir``, which defaults to
``$LEAFQUEUE_OUTDIR`` or the current directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .equilibrium import NumericalFailure, class_marginals, degree_marginal, equilibrium, l1_distance
from .fitting import FitOptions, fit, lnl_init_from_gbn
from .io import fmt, read_distribution, read_histogram, read_rates_file, write_csv, write_plot
from .model import (
    MODEL_TAGS,
    CapacityConfig,
    FiniteLifeRates,
    GBNRates,
    LNLRates,
    ModelKind,
    RateParams,
    SimpleRates,
    enumerate_states,
)
from .presets import DEFAULT_RATES
from .ssa import EventCapExceeded, SimConfig, simulate, simulate_infinite_life

EXIT_OK, EXIT_INPUT, EXIT_UNCONVERGED, EXIT_NUMERICAL = 0, 1, 2, 3
OUTDIR_ENV = "LEAFQUEUE_OUTDIR"

_RATE_KEYS = sorted(
    {k for cls in (SimpleRates, FiniteLifeRates, GBNRates, LNLRates) for k in cls.keys()}
)
_COMPONENTS = {"simple": ("k",), "finite": ("k",), "gbn": ("k_g", "k_b", "k_n"), "lnl": ("k_l", "k_n")}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _round10(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round10(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round10(v) for v in obj]
    return obj


def _kind(args) -> ModelKind:
    return ModelKind(args.model, CapacityConfig(args.cm, args.cg, args.cn))


def _collect_rates(args, kind: ModelKind, base: RateParams | None = None) -> RateParams:
    """Merge rates: ``base`` < ``--rates-file`` < inline flags."""
    mapping = dict(base.to_mapping()) if base is not None else {}
    inline = {k: getattr(args, k) for k in _RATE_KEYS if getattr(args, k, None) is not None}
    from_file = read_rates_file(args.rates_file) if args.rates_file else {}
    allowed = set(kind.rates_type.keys())
    for source, values in (("rates file", from_file), ("flags", inline)):
        unknown = sorted(set(values) - allowed)
        if unknown:
            raise ValueError(
                f"{source} set {', '.join(unknown)}, which the {kind.tag} model does not use "
                f"(expected {', '.join(kind.rates_type.keys())})"
            )
    mapping.update(from_file)
    mapping.update(inline)
    return kind.rates_type.from_mapping(mapping)


def _outdir(args) -> Path:
    path = Path(args.outdir or os.environ.get(OUTDIR_ENV, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_states(args) -> int:
    kind = _kind(args)
    space = enumerate_states(kind)
    if args.out:
        write_csv(
            args.out,
            ["index", *_COMPONENTS[kind.tag]],
            ([i, *row] for i, row in enumerate(space.states.tolist())),
        )
    print(len(space))
    return EXIT_OK


def cmd_solve(args) -> int:
    kind = _kind(args)
    rates = _collect_rates(args, kind)
    space = enumerate_states(kind)
    q = equilibrium(kind, rates)
    marginal = degree_marginal(q, space)
    out = _outdir(args)
    write_csv(
        out / "equilibrium.csv",
        ["index", *_COMPONENTS[kind.tag], "probability"],
        ([i, *row, p] for i, (row, p) in enumerate(zip(space.states.tolist(), q))),
    )
    write_csv(out / "marginal.csv", ["degree", "probability"], enumerate(marginal))
    print(f"states {len(space)}")
    if len(kind.classes) > 1:
        report = class_marginals(q, space)
        write_csv(
            out / "class_marginals.csv",
            ["degree", *report.classes],
            ([d, *(report.marginals[c][d] for c in report.classes)] for d in range(marginal.size)),
        )
        parts = " ".join(f"{c}={fmt(report.means[c])}" for c in report.classes)
        print(f"means {parts} total={fmt(report.total_mean)}")
    else:
        print(f"mean total={fmt(np.arange(marginal.size) @ marginal)}")
    if args.plot:
        write_plot(args.plot, {kind.tag: marginal}, svg=not args.no_svg)
    return EXIT_OK


def cmd_fit(args) -> int:
    kind = _kind(args)
    histogram = read_histogram(args.histogram, kind.capacity.c_m)
    if args.init_from_gbn:
        if kind.tag != "lnl":
            raise ValueError("--init-from-gbn only applies to the lnl model")
        gbn = GBNRates.from_mapping(read_rates_file(args.init_from_gbn))
        base = lnl_init_from_gbn(gbn)
    else:
        base = DEFAULT_RATES[kind.tag]
    init = _collect_rates(args, kind, base)
    opts = FitOptions(
        max_iter=args.max_iter,
        tol=args.tol,
        restarts=args.restarts,
        simplex_scale=args.simplex_scale,
        jitter=args.jitter,
        seed=args.seed,
    )
    result = fit(kind, histogram, init, opts)
    out = _outdir(args)
    report = {"init": init.to_mapping(), "capacity": vars(kind.capacity), **result.report()}
    (out / "fit_report.json").write_text(
        json.dumps(_round10(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_csv(
        out / "fitted_marginal.csv",
        ["degree", "probability", "empirical"],
        ((d, p, e) for d, (p, e) in enumerate(zip(result.distribution, histogram.probabilities))),
    )
    if args.plot:
        write_plot(
            args.plot,
            {"empirical": histogram.probabilities, kind.tag: result.distribution},
            svg=not args.no_svg,
        )
    rates = " ".join(f"{k}={fmt(v)}" for k, v in result.rates.to_mapping().items())
    print(f"objective {fmt(result.objective)}")
    print(f"rates {rates}")
    print(f"iterations {result.iterations} converged {str(result.converged).lower()}")
    if not result.converged:
        print("warning: fit did not converge", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_simulate(args) -> int:
    kind = _kind(args)
    if args.total_time is None:
        if kind.tag == "simple":
            raise ValueError(
                "theta missing: finite-life simulation needs the finite, gbn or lnl model "
                "(or pass --total-time for an infinite-life run)"
            )
        if args.theta is None and not args.rates_file:
            raise ValueError("theta missing: finite-life simulation needs --theta")
        rates = _collect_rates(args, kind)
        est = simulate(
            kind,
            rates,
            SimConfig(lifetimes=args.lifetimes, seed=args.seed, max_events=args.max_events, check=args.check),
        )
    else:
        rates = _collect_rates(args, kind)
        est = simulate_infinite_life(
            kind, rates, args.total_time, seed=args.seed, max_events=args.max_events, check=args.check
        )
    path = Path(args.out) if args.out else _outdir(args) / "simulated.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(
        path,
        ["degree", "probability", "stderr"],
        ((d, p, s) for d, (p, s) in enumerate(zip(est.distribution, est.stderr))),
    )
    if args.plot:
        write_plot(args.plot, {"simulated": est.distribution}, svg=not args.no_svg)
    print(f"events {est.events} time {fmt(est.total_time)}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = read_distribution(args.a)
    b = read_distribution(args.b)
    if a.shape != b.shape:
        raise ValueError(f"support mismatch: degrees 0..{a.size - 1} vs 0..{b.size - 1}")
    print(fmt(l1_distance(a, b)))
    return EXIT_OK


def _add_model_args(p, rates=True):
    p.add_argument("model", choices=MODEL_TAGS)
    p.add_argument("--cm", type=int, default=30, help="maximum leaf connections")
    p.add_argument("--cg", type=int, default=15, help="good-leaf threshold")
    p.add_argument("--cn", type=int, default=3, help="non-LimeWire reserve")
    if rates:
        p.add_argument("--rates-file", help="key=value rate file; inline flags override it")
        for key in _RATE_KEYS:
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=float, metavar="RATE")


def _add_output_args(p):
    p.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV} or .)")
    p.add_argument("--plot", metavar="STEM", help="also write per-curve series CSVs and an SVG chart")
    p.add_argument("--no-svg", action="store_true", help="with --plot, skip the SVG chart")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leafqueue", description="Ultrapeer leaf-degree queue models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("states", help="count (and optionally list) model states")
    _add_model_args(p, rates=False)
    p.add_argument("--out", help="write the state listing to this CSV")
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("solve", help="equilibrium distribution and marginals")
    _add_model_args(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fit", help="fit rates to a degree histogram by L1 distance")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("histogram", help="CSV with degree,count or degree,probability columns")
    p.add_argument("--init-from-gbn", metavar="FILE", help="start an lnl fit from fitted GBN rates")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--simplex-scale", type=float, default=0.25)
    p.add_argument("--jitter", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the degree distribution")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--lifetimes", type=int, default=100_000)
    p.add_argument("--total-time", type=float, help="single immortal run of this length instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-events", type=int, default=10_000_000)
    p.add_argument("--check", action="store_true", help="assert every visited state is legal")
    p.add_argument("--out", help="output CSV (default OUTDIR/simulated.csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="L1 distance between two degree distributions")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (NumericalFailure, EventCapExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
