"""Command-line front end: single trials, sweeps, PDF tables, PMF, RAET bench.

Every subcommand reads an optional key=value config file, applies flag
overrides, and writes CSV. Module errors exit nonzero with one diagnostic
line on stderr; stack traces are reserved for actual bugs.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace

import numpy as np

from .analytic_pdf import component_variance, tap_range
from .config import SystemConfig, exponential_pdp, load_config, noise_variance_from_ebn0
from .errors import ConfigError, ZpsyncError
from .estimators import Method, ml_exhaustive, ml_golden
from .harness import (
    SweepAxis,
    SweepSpec,
    bench_raet,
    pdp_sensitivity,
    run_sweep,
    write_raet_csv,
    write_sweep_csv,
)
from .likelihood import TableMode, build_pdf_table, score_all, write_likelihood_trace
from .signal_sim import dump_window, simulate_reception

_DESK_TRIALS = 2000
_PAPER_TRIALS = 10_000


def _load_base(args) -> SystemConfig:
    return load_config(args.config) if args.config else SystemConfig()


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_points(axis: SweepAxis, text: str) -> list:
    toks = [tok for tok in text.split(",") if tok.strip()]
    if not toks:
        raise ConfigError("--points must name at least one value")
    if axis in (SweepAxis.NUM_SYMBOLS, SweepAxis.NUM_TAPS):
        return [int(tok) for tok in toks]
    return [float(tok) for tok in toks]


def _parse_methods(text: str) -> list[Method]:
    try:
        return [Method(tok.strip()) for tok in text.split(",") if tok.strip()]
    except ValueError:
        valid = ", ".join(m.value for m in Method)
        raise ConfigError(f"unknown method; choose from: {valid}")


def _trials(args) -> int:
    if args.trials is not None:
        return args.trials
    return _PAPER_TRIALS if args.paper_scale else _DESK_TRIALS


def _cmd_simulate(args) -> int:
    """One seeded trial; optionally dump the raw window and the score trace."""
    cfg = _load_base(args)
    pdp = exponential_pdp(cfg.n_h, args.beta)
    sigma_w2 = noise_variance_from_ebn0(cfg, pdp)
    seed = cfg.trial_seed if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    true_d = args.true_d
    if true_d is None:
        true_d = int(rng.integers(cfg.to_range[0], cfg.to_range[1] + 1))
    window = simulate_reception(cfg, pdp, true_d, rng)

    mode = TableMode(args.table)
    table = build_pdf_table(
        cfg, pdp, sigma_w2, mode, rng=rng, mcs_samples=args.mcs_samples
    )
    if args.search == "golden":
        est = ml_golden(window, table, rng)
    else:
        est = ml_exhaustive(window, table)
    print(
        f"true_d={true_d} d_hat={est.d_hat} error={est.d_hat - true_d} "
        f"method={est.method.value} evaluations={est.evaluations}"
    )
    if args.window_out:
        dump_window(window, args.window_out)
        print(f"window -> {args.window_out}")
    if args.trace_out:
        scores = score_all(window, table, cfg.d_values)
        write_likelihood_trace(scores, args.trace_out)
        print(f"trace -> {args.trace_out}")
    return 0


def _cmd_sweep(args) -> int:
    axis = SweepAxis(args.axis)
    spec = SweepSpec(
        axis=axis,
        points=tuple(_parse_points(axis, args.points)),
        trials_per_point=_trials(args),
        methods=tuple(_parse_methods(args.methods)),
        base=_load_base(args),
        seed=args.seed,
        pdp_beta=args.beta,
    )
    runner = pdp_sensitivity if axis is SweepAxis.PDP_ALPHA else run_sweep
    summary = runner(spec, workers=args.workers)
    write_sweep_csv(summary, args.out)
    failed = [row for row in summary.rows if row.failure is not None]
    for row in failed:
        print(
            f"zpsync: {axis.value}={row.axis_value} {row.method.value} failed: {row.failure}",
            file=sys.stderr,
        )
    print(f"{len(summary.rows)} rows -> {args.out}")
    return 1 if failed else 0


def _cmd_validate_pdf(args) -> int:
    """Tabulate the analytic, Gaussian-approx and MCS densities at one index."""
    cfg = _load_base(args)
    pdp = exponential_pdp(cfg.n_h, args.beta)
    sigma_w2 = noise_variance_from_ebn0(cfg, pdp)
    m = args.m
    if not 0 <= m < cfg.n_s:
        raise ZpsyncError(f"index m={m} outside one symbol period [0, {cfg.n_s})")
    std = math.sqrt(component_variance(tap_range(m, cfg), pdp, cfg.sigma_x2, sigma_w2))
    y = np.linspace(-5.0 * std, 5.0 * std, args.grid)

    seed = cfg.trial_seed if args.seed is None else args.seed
    rng = np.random.default_rng([seed, 1])
    columns = []
    for mode in (TableMode.ANALYTIC, TableMode.GAUSSIAN_APPROX, TableMode.MCS):
        table = build_pdf_table(
            cfg, pdp, sigma_w2, mode, rng=rng, mcs_samples=args.mcs_samples
        )
        evaluator = table.evaluators[table.class_of_index[m]]
        columns.append(np.exp(evaluator(y)))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "analytic_pdf", "gaussian_pdf", "mcs_pdf"])
        for row in zip(y, *columns):
            writer.writerow([repr(float(v)) for v in row])
    print(f"{args.grid} points for m={m} -> {args.out}")
    return 0


def _cmd_pmf(args) -> int:
    """Error PMF of each method at the configured operating point."""
    base = _load_base(args)
    spec = SweepSpec(
        axis=SweepAxis.EBN0,
        points=(base.ebn0_db,),
        trials_per_point=_trials(args),
        methods=tuple(_parse_methods(args.methods)),
        base=base,
        seed=args.seed,
        pdp_beta=args.beta,
    )
    summary = run_sweep(spec, workers=args.workers)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "error", "probability"])
        for row in summary.rows:
            for err, prob in row.error_pmf.items():
                writer.writerow([row.method.value, err, repr(prob)])
    for row in summary.rows:
        print(f"{row.method.value}: lock_in={row.lock_in:.4f} mse={row.mse:.4f}")
    print(f"-> {args.out}")
    return 0


def _cmd_bench(args) -> int:
    base = _load_base(args)
    configs = [replace(base, n_x=n) for n in _parse_ints(args.nx)]
    points = bench_raet(
        configs,
        pdp_beta=args.beta,
        L=args.mcs_samples,
        windows=args.windows,
        repetitions=args.repetitions,
        seed=base.trial_seed if args.seed is None else args.seed,
    )
    for p in points:
        print(
            f"n_x={p.n_x}: raet={p.ratio:.3f} theoretical={p.theoretical_s:.4f}s "
            f"mcs={p.mcs_s:.4f}s agreement={p.agreement:.3f}"
        )
    if args.out:
        write_raet_csv(points, args.out)
        print(f"-> {args.out}")
    return 0


def _add_common(parser, trials=False):
    parser.add_argument("--config", help="key=value config file (defaults otherwise)")
    parser.add_argument("--seed", type=int, default=None, help="experiment seed")
    parser.add_argument("--beta", type=float, default=0.5, help="PDP exponential decay rate")
    if trials:
        parser.add_argument("--trials", type=int, default=None,
                            help=f"trials per point (default {_DESK_TRIALS})")
        parser.add_argument("--paper-scale", action="store_true",
                            help=f"default to {_PAPER_TRIALS} trials per point")
        parser.add_argument("--workers", type=int, default=None,
                            help="parallel trial workers (default: serial)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zpsync",
        description="Blind integer timing-offset synchronization simulator for zero-padded OFDM.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a single seeded trial")
    _add_common(p)
    p.add_argument("--true-d", type=int, default=None,
                   help="timing offset (default: drawn uniformly from the configured range)")
    p.add_argument("--table", choices=[m.value for m in TableMode], default="analytic")
    p.add_argument("--search", choices=["exhaustive", "golden"], default="exhaustive")
    p.add_argument("--mcs-samples", type=int, default=None,
                   help="stored draws for the mcs table (default: config value)")
    p.add_argument("--window-out", help="dump the raw observation window here")
    p.add_argument("--trace-out", help="write the per-hypothesis likelihood trace CSV here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="lock-in/MSE sweep along one scenario axis")
    _add_common(p, trials=True)
    p.add_argument("--axis", required=True, choices=[a.value for a in SweepAxis])
    p.add_argument("--points", required=True, help="comma-separated axis values")
    p.add_argument("--methods", default="ml,mcs,tm",
                   help="comma-separated estimators (default ml,mcs,tm)")
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate-pdf", help="tabulate density values at one symbol index")
    _add_common(p)
    p.add_argument("--m", type=int, required=True, help="index within the symbol period")
    p.add_argument("--grid", type=int, default=401, help="number of tabulation points")
    p.add_argument("--mcs-samples", type=int, default=None)
    p.add_argument("--out", default="pdf_table.csv")
    p.set_defaults(func=_cmd_validate_pdf)

    p = sub.add_parser("pmf", help="estimation-error PMF at the configured operating point")
    _add_common(p, trials=True)
    p.add_argument("--methods", default="ml,mcs,tm")
    p.add_argument("--out", default="pmf.csv")
    p.set_defaults(func=_cmd_pmf)

    p = sub.add_parser("bench", help="RAET wall-time benchmark over n_x")
    _add_common(p)
    p.add_argument("--nx", default="64,128,256", help="comma-separated n_x values")
    p.add_argument("--mcs-samples", type=int, default=10_000)
    p.add_argument("--windows", type=int, default=12)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--out", default=None, help="optional CSV output path")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ZpsyncError, ValueError, OSError) as exc:
        print(f"zpsync: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
