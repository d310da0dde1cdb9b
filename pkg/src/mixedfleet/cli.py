"""Command-line interface.

Subcommands: gen-network, solve, verify, sweep, thresholds.  Exit codes:
0 success, 1 invalid input, 2 solver non-optimal, 3 verification or property
violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import kkt, programs, sweep
from .market import MarketParams, UniformWtp, equilibrium_residuals
from .network import read_network, star_to_complete, validate, write_network
from .programs import ProgramKind, build_program, recover_original
from .solver import SolverError, kkt_residuals

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_VIOLATION = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract reserves 2 for
    solver failures, so remap usage errors to exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INVALID)


def parse_range(text: str) -> list[float]:
    """Parse 'a:b:step' into an inclusive list (or a single float)."""
    if ":" not in text:
        return [float(text)]
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected a:b:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("range step must be positive")
    count = int(round((stop - start) / step))
    values = [round(start + i * step, 12) for i in range(count + 1)]
    return [v for v in values if v <= stop + step * 1e-9]


def _load_network(path: str):
    pattern = read_network(path)
    result = validate(pattern)
    if not result.ok:
        raise ValueError(f"network {path} is invalid: "
                         + "; ".join(v.message for v in result.violations))
    return pattern


def _cmd_gen_network(args) -> int:
    if args.family != "star-to-complete":
        print(f"unknown family {args.family!r}", file=sys.stderr)
        return EXIT_INVALID
    try:
        pattern = star_to_complete(args.n, args.xi)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    write_network(pattern, args.out)
    print(f"wrote {args.family} network (n={args.n}, xi={args.xi}) to {args.out}")
    return EXIT_OK


def _resolve_params(args) -> MarketParams:
    if (args.s is None) == (args.k is None):
        raise ValueError("provide exactly one of --s or --k")
    s = args.s if args.s is not None else args.k * args.omega
    return MarketParams(beta=args.beta, omega=args.omega, s=s, pbar=args.pbar)


def _cmd_solve(args) -> int:
    try:
        pattern = _load_network(args.network)
        params = _resolve_params(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    kind = ProgramKind.HUMAN_ONLY if args.human_only else ProgramKind.MIXED_ALTERNATIVE
    try:
        report = programs.solve_program(kind, pattern, params, tol=args.tol)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    Path(args.out).write_text(programs.report_to_json(report))
    eps = programs.eps_mass(pattern)
    total_x = float(report.state.x.sum())
    total_z = float(report.state.z.sum())
    regime = sweep.classify_regime(total_x, total_z, eps)
    print(f"{kind.value}: profit={report.profit:.9f} regime={regime} "
          f"total_x={total_x:.6f} total_z={total_z:.6f} -> {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        pattern = _load_network(args.network)
        report = programs.report_from_json(Path(args.report).read_text(), pattern)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if report.state.n != pattern.n:
        print("error: report and network dimensions disagree", file=sys.stderr)
        return EXIT_INVALID

    violations: list[str] = []

    def check(name: str, ok: bool, detail: str) -> None:
        print(f"  [{'ok' if ok else 'VIOLATION'}] {name}: {detail}")
        if not ok:
            violations.append(name)

    params, state = report.params, report.state
    profit_gap = abs(programs.profit_of_state(state, params) - report.profit)
    check("profit", profit_gap <= args.tol_profit, f"recomputation gap {profit_gap:.3e}")

    expected_d = pattern.theta * (1.0 - UniformWtp(params.pbar).cdf(state.p))
    d_gap = float(np.max(np.abs(state.d - expected_d)))
    check("demand", d_gap <= 1e-9, f"d vs theta*(1-F(p)) gap {d_gap:.3e}")

    most_negative = min(float(np.min(getattr(state, name)))
                        for name in ("p", "delta", "x", "y", "z", "r", "d"))
    check("nonnegativity", most_negative >= -1e-9, f"most negative entry {most_negative:.3e}")

    if report.kind is ProgramKind.MIXED_ALTERNATIVE:
        try:
            original = recover_original(report)
        except programs.FlowRecoveryError as exc:
            check("flow recovery", False, str(exc))
            original = None
    else:
        original = state
    if original is not None:
        residuals = equilibrium_residuals(original, pattern, params)
        for name, value in residuals.max_abs().items():
            check(f"flow residual {name}", value <= args.tol_residual, f"max-abs {value:.3e}")

    qp = build_program(report.kind, pattern, params)
    generic = kkt_residuals(qp, report.solve)
    check("solver certificate", generic.worst <= args.tol_residual,
          f"worst scaled residual {generic.worst:.3e}")

    if report.kind is ProgramKind.MIXED_ALTERNATIVE:
        cert = kkt.extract_duals(report)
        stationarity = kkt.stationarity_residuals(cert, report, pattern, params)
        for name, fam in stationarity.families().items():
            check(f"stationarity {name}", fam.violation <= args.tol_residual,
                  f"violation {fam.violation:.3e}, active gap {fam.active_gap:.3e}")

    if violations:
        print(f"verdict: VIOLATED ({', '.join(violations)})")
        return EXIT_VIOLATION
    print("verdict: consistent")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        pattern = _load_network(args.network)
        betas = parse_range(args.betas)
        ks = parse_range(args.ks)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    result = sweep.sweep_grid(pattern, args.omega, betas, ks)
    Path(args.out).write_text(sweep.sweep_to_csv(result))
    print(f"wrote {len(result.rows)} rows to {args.out}")
    for failure in result.failures:
        print(f"row failed: beta={failure.beta} k={failure.k}: {failure.message}",
              file=sys.stderr)
    return EXIT_SOLVER if result.failures else EXIT_OK


def _cmd_thresholds(args) -> int:
    try:
        pattern = _load_network(args.network)
        betas = parse_range(args.betas)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        rows = sweep.threshold_table(pattern, args.omega, betas, tol=args.tol)
    except (SolverError, sweep.ThresholdScanError) as exc:
        print(f"threshold detection failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    Path(args.out).write_text(sweep.thresholds_to_csv(rows))
    for row in rows:
        print(f"beta={row.beta:.2f}: k_a={row.k_a:.4f} k_s={row.k_s:.4f} k_t={row.k_t:.4f}")
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixedfleet",
                     description="Mixed human/AV ride-sharing equilibrium toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-network", parents=[], help="generate a network file")
    gen.add_argument("--family", default="star-to-complete",
                     choices=["star-to-complete"], help="network family")
    gen.add_argument("--n", type=int, required=True, help="number of locations (>= 3)")
    gen.add_argument("--xi", type=float, required=True,
                     help="interpolation weight in [0, 1]: 0 star, 1 complete")
    gen.add_argument("--out", required=True, help="output JSON path")
    gen.set_defaults(func=_cmd_gen_network)

    solve_p = sub.add_parser("solve", help="solve one profit-maximization instance")
    solve_p.add_argument("--network", required=True, help="network JSON path")
    solve_p.add_argument("--beta", type=float, required=True,
                         help="driver per-ride survival probability in (0, 1)")
    solve_p.add_argument("--omega", type=float, default=1.0,
                         help="driver outside-option lifetime earnings (default 1)")
    solve_p.add_argument("--s", type=float, default=None, help="AV operating cost")
    solve_p.add_argument("--k", type=float, default=None,
                         help="cost ratio s/omega (alternative to --s)")
    solve_p.add_argument("--pbar", type=float, default=1.0,
                         help="willingness-to-pay upper bound (default 1)")
    solve_p.add_argument("--human-only", action="store_true",
                         help="restrict to the no-AV program")
    solve_p.add_argument("--tol", type=float, default=1e-8, help="solver tolerance")
    solve_p.add_argument("--out", required=True, help="report JSON path")
    solve_p.set_defaults(func=_cmd_solve)

    verify_p = sub.add_parser("verify", help="check a report against its network")
    verify_p.add_argument("--report", required=True, help="report JSON path")
    verify_p.add_argument("--network", required=True, help="network JSON path")
    verify_p.add_argument("--tol-residual", type=float, default=1e-7)
    verify_p.add_argument("--tol-profit", type=float, default=1e-9)
    verify_p.set_defaults(func=_cmd_verify)

    sweep_p = sub.add_parser("sweep", help="profit/regime grid over (beta, k)")
    sweep_p.add_argument("--network", required=True)
    sweep_p.add_argument("--omega", type=float, default=1.0)
    sweep_p.add_argument("--betas", required=True, help="a:b:step or single value")
    sweep_p.add_argument("--ks", required=True, help="a:b:step or single value")
    sweep_p.add_argument("--out", required=True, help="output CSV path")
    sweep_p.set_defaults(func=_cmd_sweep)

    thr = sub.add_parser("thresholds", help="detect k_a / k_s per beta")
    thr.add_argument("--network", required=True)
    thr.add_argument("--omega", type=float, default=1.0)
    thr.add_argument("--betas", default="0.5:0.95:0.05", help="a:b:step or single value")
    thr.add_argument("--tol", type=float, default=5e-4, help="bisection bracket width")
    thr.add_argument("--out", required=True, help="output CSV path")
    thr.set_defaults(func=_cmd_thresholds)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
