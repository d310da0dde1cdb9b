"""Parameter sweeps over (beta, k): regime classification, threshold detection,
and the canonical threshold table on the 3-location star network.

For fixed beta, two cost thresholds structure the optimum as k = s / omega
grows: below ``k_a`` no human drivers are used; from ``k_a`` to ``k_s`` the
optimal fleet mixes drivers and AVs; above ``k_s`` no AVs are used.  ``k_t``
= 1 - beta is the structural upper bound above which AVs can never raise
profit.  Thresholds are located by a coarse scan (which also verifies that
each regime predicate switches exactly once) followed by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

from .market import MarketParams
from .network import DemandPattern
from .programs import ProgramKind, eps_mass, solve_program
from .solver import SolverError

DEFAULT_BETAS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DEFAULT_THRESHOLD_TOL = 5e-4
COARSE_STEP = 0.01


class ThresholdScanError(RuntimeError):
    """Coarse scan saw a regime predicate switch more than once."""


@dataclass(frozen=True)
class SweepRow:
    beta: float
    k: float
    profit_mixed: float
    profit_human: float
    total_x: float
    total_z: float
    regime: str


@dataclass(frozen=True)
class SweepFailure:
    beta: float
    k: float
    message: str


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    failures: tuple[SweepFailure, ...]


@dataclass(frozen=True)
class ThresholdRow:
    beta: float
    k_a: float
    k_s: float
    k_t: float


def classify_regime(total_x: float, total_z: float, eps: float) -> str:
    if total_z <= eps:
        return "human_only"
    if total_x <= eps:
        return "all_av"
    return "mixed"


def sweep_grid(pattern: DemandPattern, omega: float, betas, ks,
               pbar: float = 1.0) -> SweepResult:
    """One row per (beta, k), solving both program kinds; failures are recorded
    per row and do not abort the sweep.  Rows come back sorted by (beta, k)."""
    eps = eps_mass(pattern)
    rows: list[SweepRow] = []
    failures: list[SweepFailure] = []
    for beta in sorted(betas):
        for k in sorted(ks):
            params = MarketParams.from_k(beta=beta, omega=omega, k=k, pbar=pbar)
            try:
                mixed = solve_program(ProgramKind.MIXED_ALTERNATIVE, pattern, params)
                human = solve_program(ProgramKind.HUMAN_ONLY, pattern, params)
            except SolverError as exc:
                failures.append(SweepFailure(beta=beta, k=k, message=str(exc)))
                continue
            total_x = float(mixed.state.x.sum())
            total_z = float(mixed.state.z.sum())
            rows.append(SweepRow(beta=beta, k=k, profit_mixed=mixed.profit,
                                 profit_human=human.profit, total_x=total_x,
                                 total_z=total_z,
                                 regime=classify_regime(total_x, total_z, eps)))
    return SweepResult(tuple(rows), tuple(failures))


def _scan_switch_index(flags: list[bool], true_below: bool, label: str,
                       ks: list[float]) -> int | None:
    """Index of the first flag past the single switch, or None if no switch.

    With true_below the sequence must look like True...True False...False;
    otherwise False...False True...True.  Anything else raises.
    """
    normalized = flags if true_below else [not f for f in flags]
    try:
        first_off = normalized.index(False)
    except ValueError:
        return None
    if any(normalized[first_off:]):
        trace = ", ".join(f"k={k:.4f}:{'T' if f else 'F'}" for k, f in zip(ks, flags))
        raise ThresholdScanError(f"{label} predicate switches more than once: {trace}")
    return first_off


def find_thresholds(pattern: DemandPattern, omega: float, beta: float,
                    tol: float = DEFAULT_THRESHOLD_TOL, pbar: float = 1.0,
                    coarse_step: float = COARSE_STEP) -> ThresholdRow:
    """Locate k_a (driver mass appears) and k_s (AV mass vanishes) by coarse
    scan plus bisection to bracket width tol; k_t = 1 - beta is attached."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    eps = eps_mass(pattern)
    cache: dict[float, tuple[float, float]] = {}

    def masses(k: float) -> tuple[float, float]:
        if k not in cache:
            report = solve_program(ProgramKind.MIXED_ALTERNATIVE, pattern,
                                   MarketParams.from_k(beta=beta, omega=omega, k=k, pbar=pbar))
            cache[k] = (float(report.state.x.sum()), float(report.state.z.sum()))
        return cache[k]

    def no_drivers(k: float) -> bool:
        return masses(k)[0] <= eps

    def no_avs(k: float) -> bool:
        return masses(k)[1] <= eps

    top = 1.0 - beta + 0.05
    ks = [round(i * coarse_step, 10) for i in range(int(top / coarse_step) + 1)]
    x_flags = [no_drivers(k) for k in ks]
    z_flags = [no_avs(k) for k in ks]

    def bisect(lo: float, hi: float, pred_true_below) -> float:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if pred_true_below(mid):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    ia = _scan_switch_index(x_flags, True, "no-driver", ks)
    if ia is None:
        k_a = ks[-1] if x_flags[0] else 0.0
    elif ia == 0:
        k_a = 0.0
    else:
        k_a = bisect(ks[ia - 1], ks[ia], no_drivers)

    iz = _scan_switch_index(z_flags, False, "no-AV", ks)
    if iz is None:
        k_s = 0.0 if z_flags[0] else ks[-1]
    elif iz == 0:
        k_s = 0.0
    else:
        k_s = bisect(ks[iz - 1], ks[iz], lambda k: not no_avs(k))

    return ThresholdRow(beta=beta, k_a=k_a, k_s=k_s, k_t=1.0 - beta)


def threshold_table(pattern: DemandPattern, omega: float = 1.0,
                    betas=DEFAULT_BETAS,
                    tol: float = DEFAULT_THRESHOLD_TOL) -> list[ThresholdRow]:
    """Threshold rows for each beta (canonical run: 3-location star, omega 1)."""
    return [find_thresholds(pattern, omega, beta, tol=tol) for beta in betas]


def thresholds_to_csv(rows) -> str:
    """Fixed CSV schema: header beta,k_a,k_s,k_t, 4 decimals, newline-terminated."""
    lines = ["beta,k_a,k_s,k_t"]
    lines += [f"{r.beta:.4f},{r.k_a:.4f},{r.k_s:.4f},{r.k_t:.4f}" for r in rows]
    return "\n".join(lines) + "\n"


def sweep_to_csv(result: SweepResult) -> str:
    lines = ["beta,k,profit_mixed,profit_human,total_x,total_z,regime"]
    lines += [f"{r.beta:.10g},{r.k:.10g},{r.profit_mixed:.10g},{r.profit_human:.10g},"
              f"{r.total_x:.10g},{r.total_z:.10g},{r.regime}" for r in result.rows]
    return "\n".join(lines) + "\n"
