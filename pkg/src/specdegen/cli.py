"""Command-line entry point: ``specdegen <verb> [flags]``.

Verbs
-----
curves       distance curves |H_n - e^{inw}| (CSV and SVG)
gamma-table  two-step prediction errors over a γ ladder
paths        Gaussian path and its band-stop projection
recovery     braided approximant and recovery from a periodic subsequence
selftest     quick internal consistency checks

Exit codes: 0 success, 1 failed self-test, 2 configuration error,
3 numerical overflow without extended precision.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, KernelOverflowError, ResolutionError, SpecDegenError
from .experiments import (
    ExperimentConfig,
    emit_curves,
    emit_paths,
    run_gamma_table,
    run_recovery_demo,
    summarize,
    write_gamma_table,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_OVERFLOW = 0, 1, 2, 3


def _gamma_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad gamma list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty gamma list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=_gamma_list, default=(3.0, 10.0, 20.0), help="comma separated γ ladder")
    common.add_argument("--T", type=int, default=250, help="observation half-length")
    common.add_argument("--delta", type=float, default=0.5, help="chordal gap half-width")
    common.add_argument("--rhat", type=float, default=1.2, help="exponent in alpha = 1 - gamma^-rhat")
    common.add_argument("--n", type=int, default=2, help="prediction horizon")
    common.add_argument("--mnu", type=int, default=4, help="period m*nu of the root set")
    common.add_argument("--grid", type=int, default=2**14, help="frequency grid size (power of two)")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--seeds", type=int, default=11, help="number of consecutive seeds")
    common.add_argument("--precision", choices=("double", "extended"), default="double")
    common.add_argument("--window", choices=("grid", "T", "past"), default="grid", help="observation lattice for gamma-table")
    common.add_argument("--process", choices=("ar1", "white"), default="ar1")
    common.add_argument("--out", default="out", help="output directory")
    parser = argparse.ArgumentParser(prog="specdegen", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_ in [
        ("curves", "distance curves"),
        ("gamma-table", "γ table of relative prediction errors"),
        ("paths", "Gaussian path and projected test signal"),
        ("recovery", "braided approximant and subsequence recovery"),
        ("selftest", "internal consistency checks"),
    ]:
        sub.add_parser(verb, parents=[common], help=help_)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.T < 8:
        raise ConfigurationError("--T must be at least 8")
    if args.seeds < 1:
        raise ConfigurationError("--seeds must be positive")
    if args.n == 0:
        raise ConfigurationError("--n must be nonzero")
    if not 0 < args.delta < 2:
        raise ConfigurationError("--delta must lie in (0, 2)")
    if any(not g > 1 for g in args.gamma):
        raise ConfigurationError("every gamma must exceed 1")
    return ExperimentConfig(
        T=args.T,
        n=args.n,
        m_nu=args.mnu,
        delta=args.delta,
        rhat=args.rhat,
        gammas=tuple(args.gamma),
        grid=args.grid,
        seed=args.seed,
        seeds=args.seeds,
        process=args.process,
        window=args.window,
        precision=args.precision,
        out=args.out,
    )


def _cmd_curves(cfg: ExperimentConfig) -> int:
    summary = emit_curves(cfg)
    for tag, s in summary.items():
        print(f"gamma={tag}: max full {s['max_full']:.4g}, interior {s['max_interior']:.4g}, "
              f"masked {s['max_masked']:.4g}, overflow nodes {s['overflow_nodes']}")
    return EXIT_OK


def _cmd_gamma_table(cfg: ExperimentConfig) -> int:
    records = run_gamma_table(cfg)
    table, summary = write_gamma_table(cfg, records, Path(cfg.out))
    print(f"{'gamma':>6} {'median|E|':>10} {'median E':>10} {'log10|h|':>9}")
    for s in summarize(records):
        print(f"{s['gamma']:>6g} {s['median_abs_E']:>10.4g} {s['median_E']:>10.4g} {s['log10_sup_norm']:>9.2f}")
    print(f"wrote {table} and {summary}")
    return EXIT_OK


def _cmd_paths(cfg: ExperimentConfig) -> int:
    rep = emit_paths(cfg)
    print(f"||g|| = {rep['norm_g']:.4g}, ||x|| = {rep['norm_x']:.4g}, membership value {rep['membership_value']:.4g}")
    return EXIT_OK


def _cmd_recovery(cfg: ExperimentConfig) -> int:
    rep = run_recovery_demo(cfg)
    for rung in rep["density_ladder"]:
        print(f"c_build={rung['c_build']:g}: ||x - x_hat||/||x|| = {rung['relative_distance']:.4g}, certificate {'pass' if rung['passed'] else 'FAIL'}")
    overflow = False
    for row in rep["recovery"]:
        if row["status"] == "ok":
            print(f"gamma={row['gamma']:g}: max error / sup = {row['relative_error']:.3g}, budget {row['max_budget']:.3g}")
        else:
            overflow |= row["status"] == "overflow"
            print(f"gamma={row['gamma']:g}: {row['status']}: {row['message']}")
    print(f"wrote {Path(cfg.out) / 'recovery.json'}")
    if overflow and cfg.precision == "double":
        return EXIT_OVERFLOW
    return EXIT_OK


def run_selftest(grid_size: int = 2**12) -> list[tuple[str, bool, str]]:
    """Fast internal checks; returns ``(name, passed, detail)`` triples."""
    from .classes import disjointness_check, nu_scheme
    from .kernels import KernelSpec, kernel_series, predictor_kernel, sparsity_report
    from .seqops import decimate, subsequence, supersequence
    from .spectral import Sequence, inv_ztrace, make_grid, root_set, ztrace

    rng = np.random.default_rng(0)
    grid = make_grid(grid_size)
    out = []
    x = Sequence(-17, rng.standard_normal(64) + 1j * rng.standard_normal(64))
    err = inv_ztrace(ztrace(x, grid), (x.start, x.stop)).max_abs_diff(x)
    out.append(("ztrace round trip", err <= 1e-10, f"{err:.2e}"))
    ok = all(
        supersequence(subsequence(x, m, s), m, s).on(x.start, x.stop).max_abs_diff(decimate(x, m, s)) == 0.0
        for m in (2, 3, 4)
        for s in (0, 1)
    )
    out.append(("supersequence of subsequence equals decimation", ok, ""))
    dev = max(abs(np.exp(1j * w * n) - np.exp(-1j * b)) for n in (1, 2, 5, 8) for b in (math.pi, 1.0) for w in root_set(n, b))
    out.append(("root set solves e^{inw} = e^{-ib}", dev <= 1e-12, f"{dev:.2e}"))
    ok = all(disjointness_check(m, nu_scheme(m)) for m in (1, 2, 3))
    out.append(("power-of-two phases have disjoint roots", ok, ""))
    spec = KernelSpec(2, 1, 4, 3.0)
    kern = predictor_kernel(spec, make_grid(2**14))
    rep = sparsity_report(kern)
    ser = kernel_series(spec)
    agree = abs(ser.log10_sup_norm - kern.log10_sup_norm)
    out.append(("kernel lattice and first index", rep.first_nonzero_index == 6 and rep.on_lattice_energy_fraction >= 1 - 1e-8, str(rep.first_nonzero_index)))
    out.append(("grid and series kernel norms agree", agree <= 1e-9, f"{agree:.1e}"))
    return out


def _cmd_selftest(cfg: ExperimentConfig) -> int:
    results = run_selftest()
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}".rstrip())
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL


_COMMANDS = {
    "curves": _cmd_curves,
    "gamma-table": _cmd_gamma_table,
    "paths": _cmd_paths,
    "recovery": _cmd_recovery,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _COMMANDS[args.verb](cfg)
    except (ConfigurationError, ResolutionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KernelOverflowError as exc:
        print(f"overflow: {exc} (try --precision extended)", file=sys.stderr)
        return EXIT_OVERFLOW
    except SpecDegenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
