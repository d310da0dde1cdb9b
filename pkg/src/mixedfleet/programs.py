"""Profit-maximization programs over a demand pattern.

Two program kinds are built as concave QPs under uniform willingness to pay:

* ``mixed_alternative`` — the convexified mixed-fleet problem in variables
  (p, delta, x, z, r): driver mass follows x = beta * A' x + delta, AV mass
  follows z = A'(d - x) + column sums of r, and each r row sums to
  z_i - (d_i - x_i).  Effective demand d = theta * (1 - p/pbar) is substituted
  out, leaving the concave objective
  sum_i p_i d_i - omega * sum_i delta_i - s * sum_i z_i.
* ``human_only`` — the no-AV restriction in variables (p, delta, x, y) with
  x = beta * (A' d + column sums of y) + delta and y rows summing to x - d.

An optimal mixed solution is mapped back to a state satisfying the original
(min/max) flow equations by :func:`recover_original`; at an optimum, demand
minus driver mass has a single sign across locations, which selects whether
the relocation flows r play the role of driver relocations y or of AV
relocations.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import solver
from .market import (Compensations, FleetState, MarketParams, UniformWtp,
                     WtpDistribution, construct_compensation, equilibrium_residuals)
from .network import DemandPattern, validate
from .solver import QuadraticProgram, SolveOutcome, SolverError


class ProgramKind(enum.Enum):
    MIXED_ALTERNATIVE = "mixed_alternative"
    HUMAN_ONLY = "human_only"


class FlowRecoveryError(RuntimeError):
    """A claimed optimum whose flows cannot be mapped back to the original
    equations; indicates a solver or assumption failure."""


@dataclass(frozen=True)
class VariableLayout:
    """Column/row index map of a built program; fixed given (kind, n)."""

    kind: ProgramKind
    n: int

    @property
    def p(self) -> slice:
        return slice(0, self.n)

    @property
    def delta(self) -> slice:
        return slice(self.n, 2 * self.n)

    @property
    def x(self) -> slice:
        return slice(2 * self.n, 3 * self.n)

    @property
    def z(self) -> slice:
        if self.kind is not ProgramKind.MIXED_ALTERNATIVE:
            raise AttributeError("human-only program has no z block")
        return slice(3 * self.n, 4 * self.n)

    @property
    def flows(self) -> slice:
        """r (mixed) or y (human-only), row-major (n*n,)."""
        start = 4 * self.n if self.kind is ProgramKind.MIXED_ALTERNATIVE else 3 * self.n
        return slice(start, start + self.n * self.n)

    @property
    def num_vars(self) -> int:
        return self.flows.stop

    # Equality rows: x-flow first, then the AV-mass definition and the
    # relocation row sums (mixed) or the driver relocation row sums (human).
    @property
    def rows_x_flow(self) -> slice:
        return slice(0, self.n)

    @property
    def rows_z_def(self) -> slice:
        if self.kind is not ProgramKind.MIXED_ALTERNATIVE:
            raise AttributeError("human-only program has no z-definition rows")
        return slice(self.n, 2 * self.n)

    @property
    def rows_flow_sum(self) -> slice:
        start = 2 * self.n if self.kind is ProgramKind.MIXED_ALTERNATIVE else self.n
        return slice(start, start + self.n)

    @property
    def num_rows(self) -> int:
        return self.rows_flow_sum.stop


def eps_mass(pattern: DemandPattern) -> float:
    """Strict-positivity proxy: a mass counts as present above this threshold."""
    return 1e-6 * max(1.0, float(pattern.theta.sum()))


def _require_uniform(wtp: WtpDistribution | None, params: MarketParams) -> UniformWtp:
    if wtp is None:
        return UniformWtp(params.pbar)
    if not wtp.is_uniform:
        raise ValueError("program building requires a uniform willingness-to-pay "
                         "distribution (the objective is quadratic only then)")
    if abs(wtp.pbar - params.pbar) > 1e-12:
        raise ValueError("wtp.pbar disagrees with params.pbar")
    return wtp  # type: ignore[return-value]


def build_program(kind: ProgramKind, pattern: DemandPattern, params: MarketParams,
                  wtp: WtpDistribution | None = None) -> QuadraticProgram:
    """Assemble the QP for the given kind; rows are oriented so each equality
    reads as the zero of its defining expression (see module docstring)."""
    _require_uniform(wtp, params)
    result = validate(pattern)
    if not result.ok:
        raise ValueError(f"invalid demand pattern: {[v.message for v in result.violations]}")

    n = pattern.n
    alpha = pattern.alpha
    theta = pattern.theta
    slope = theta / params.pbar  # d_i = theta_i - slope_i * p_i
    lay = VariableLayout(kind, n)
    nv, nr = lay.num_vars, lay.num_rows

    quadratic = np.zeros((nv, nv))
    for i in range(n):
        quadratic[i, i] = -slope[i]
    linear = np.zeros(nv)
    linear[lay.p] = theta
    linear[lay.delta] = -params.omega

    eq = np.zeros((nr, nv))
    rhs = np.zeros(nr)
    p0, d0, x0 = lay.p.start, lay.delta.start, lay.x.start
    f0 = lay.flows.start

    if kind is ProgramKind.MIXED_ALTERNATIVE:
        linear[lay.z] = -params.s
        z0 = lay.z.start
        for i in range(n):
            # beta * A'x + delta - x = 0
            row = lay.rows_x_flow.start + i
            eq[row, x0:x0 + n] += params.beta * alpha[:, i]
            eq[row, x0 + i] -= 1.0
            eq[row, d0 + i] = 1.0
            # A'(d - x) + colsum(r) - z = 0, with d substituted by p
            row = lay.rows_z_def.start + i
            eq[row, p0:p0 + n] -= slope * alpha[:, i]
            eq[row, x0:x0 + n] -= alpha[:, i]
            eq[row, f0 + i::n] += 1.0          # r[j][i] over all j
            eq[row, z0 + i] -= 1.0
            rhs[row] = -float(alpha[:, i] @ theta)
            # d - x + rowsum(r) - z = 0
            row = lay.rows_flow_sum.start + i
            eq[row, p0 + i] -= slope[i]
            eq[row, x0 + i] -= 1.0
            eq[row, f0 + i * n:f0 + (i + 1) * n] += 1.0
            eq[row, z0 + i] -= 1.0
            rhs[row] = -theta[i]
    else:
        for i in range(n):
            # beta * (A'd + colsum(y)) + delta - x = 0
            row = lay.rows_x_flow.start + i
            eq[row, p0:p0 + n] -= params.beta * slope * alpha[:, i]
            eq[row, f0 + i::n] += params.beta
            eq[row, d0 + i] = 1.0
            eq[row, x0 + i] -= 1.0
            rhs[row] = -params.beta * float(alpha[:, i] @ theta)
            # d - x + rowsum(y) = 0
            row = lay.rows_flow_sum.start + i
            eq[row, p0 + i] -= slope[i]
            eq[row, x0 + i] -= 1.0
            eq[row, f0 + i * n:f0 + (i + 1) * n] += 1.0
            rhs[row] = -theta[i]

    return QuadraticProgram(num_vars=nv, quadratic=quadratic, linear=linear,
                            eq_matrix=eq, eq_rhs=rhs, nonneg_mask=np.ones(nv, dtype=bool))


@dataclass(frozen=True)
class EquilibriumReport:
    """Solved instance: optimal state, profit, compensation (when all demand is
    served), and the raw solver outcome carrying the dual certificate."""

    kind: ProgramKind
    pattern: DemandPattern
    params: MarketParams
    state: FleetState
    profit: float
    compensations: Compensations | None
    solve: SolveOutcome


def profit_of_state(state: FleetState, params: MarketParams) -> float:
    """Recompute profit from a state: p'd - omega * sum(delta) - s * sum(z)."""
    return (float(state.p @ state.d) - params.omega * float(state.delta.sum())
            - params.s * float(state.z.sum()))


def primal_from_state(kind: ProgramKind, state: FleetState) -> np.ndarray:
    """Inverse of the state extraction: stack a state back into program order."""
    lay = VariableLayout(kind, state.n)
    primal = np.zeros(lay.num_vars)
    primal[lay.p] = state.p
    primal[lay.delta] = state.delta
    primal[lay.x] = state.x
    if kind is ProgramKind.MIXED_ALTERNATIVE:
        primal[lay.z] = state.z
        primal[lay.flows] = state.r.ravel()
    else:
        primal[lay.flows] = state.y.ravel()
    return primal


def _state_from_primal(kind: ProgramKind, primal: np.ndarray,
                       pattern: DemandPattern, params: MarketParams) -> FleetState:
    n = pattern.n
    lay = VariableLayout(kind, n)
    p = primal[lay.p].copy()
    d = pattern.theta * (1.0 - p / params.pbar)
    flows = primal[lay.flows].reshape(n, n).copy()
    if kind is ProgramKind.MIXED_ALTERNATIVE:
        return FleetState(p=p, delta=primal[lay.delta].copy(), x=primal[lay.x].copy(),
                          y=np.zeros((n, n)), z=primal[lay.z].copy(), r=flows, d=d)
    return FleetState(p=p, delta=primal[lay.delta].copy(), x=primal[lay.x].copy(),
                      y=flows, z=np.zeros(n), r=np.zeros((n, n)), d=d)


def _attach_compensations(state: FleetState, pattern: DemandPattern,
                          params: MarketParams) -> Compensations | None:
    if float(np.min(state.d)) > eps_mass(pattern):
        return construct_compensation(state, params)
    return None


def solve_program(kind: ProgramKind, pattern: DemandPattern, params: MarketParams,
                  wtp: WtpDistribution | None = None, tol: float = solver.DEFAULT_TOL,
                  max_iter: int = solver.DEFAULT_MAX_ITER) -> EquilibriumReport:
    """Build and solve one program; raises SolverError unless status is optimal."""
    qp = build_program(kind, pattern, params, wtp)
    outcome = solver.solve(qp, tol=tol, max_iter=max_iter)
    if outcome.status != "optimal":
        raise SolverError(f"{kind.value} solve ended with status {outcome.status}", outcome)
    state = _state_from_primal(kind, outcome.primal, pattern, params)
    return EquilibriumReport(kind=kind, pattern=pattern, params=params, state=state,
                             profit=profit_of_state(state, params),
                             compensations=_attach_compensations(state, pattern, params),
                             solve=outcome)


def _mixed_sign_surgery(state: FleetState, pattern: DemandPattern) -> FleetState:
    """Rebuild (y, r) for a state whose d - x changes sign across locations.

    Such points arise only on degenerate optimal faces (at the exact cost
    where the platform is indifferent between drivers and AVs); the recovered
    flows spread each location's driver excess along its routing row and
    redistribute AV relocations through a transportation plan matching the
    row/column totals the original equations force.
    """
    alpha = pattern.alpha
    driver_excess = np.maximum(state.x - state.d, 0.0)
    y = alpha * driver_excess[:, None]
    served_by_avs = np.minimum(state.z, np.maximum(state.d - state.x, 0.0))
    row_sums = np.maximum(state.z - np.maximum(state.d - state.x, 0.0), 0.0)
    col_sums = state.z - alpha.T @ served_by_avs
    if float(np.min(col_sums)) < -10.0 * eps_mass(pattern):
        raise FlowRecoveryError(
            "no nonnegative AV relocation plan exists for this state "
            f"(required column totals {col_sums.tolist()})")
    col_sums = np.maximum(col_sums, 0.0)
    total = float(row_sums.sum())
    r = np.outer(row_sums, col_sums) / total if total > 0 else np.zeros_like(state.r)
    return FleetState(p=state.p, delta=state.delta, x=state.x, y=y,
                      z=state.z, r=r, d=state.d)


def recover_original(report: EquilibriumReport, residual_tol: float = 1e-7) -> FleetState:
    """Map a mixed-alternative optimum to flows satisfying the original
    steady-state equations.

    Where drivers cover demand everywhere (d <= x), the relocation matrix r
    was standing in for driver relocations: y := r, z := 0, r := 0.  Where
    demand covers drivers everywhere (d >= x), r already is the AV relocation
    matrix: y := 0.  A mixed sign pattern can only occur on a degenerate
    optimal face and is repaired by an explicit flow surgery; if the repaired
    state still violates the flow equations the input was no optimum at all
    and FlowRecoveryError is raised.
    """
    if report.kind is not ProgramKind.MIXED_ALTERNATIVE:
        raise ValueError("recovery applies to mixed_alternative reports only")
    state = report.state
    eps = eps_mass(report.pattern)
    gap = state.d - state.x
    has_excess_demand = bool(np.any(gap > eps))
    has_excess_drivers = bool(np.any(-gap > eps))
    if has_excess_demand and has_excess_drivers:
        repaired = _mixed_sign_surgery(state, report.pattern)
        worst = equilibrium_residuals(repaired, report.pattern, report.params).worst
        if worst > residual_tol:
            raise FlowRecoveryError(
                "mixed-sign state does not satisfy the flow equations after "
                f"surgery (worst residual {worst:.3e}); not a valid optimum")
        return repaired
    if has_excess_drivers:
        return FleetState(p=state.p, delta=state.delta, x=state.x, y=state.r.copy(),
                          z=np.zeros(state.n), r=np.zeros((state.n, state.n)), d=state.d)
    return FleetState(p=state.p, delta=state.delta, x=state.x,
                      y=np.zeros((state.n, state.n)), z=state.z, r=state.r, d=state.d)


def brute_force_oracle(pattern: DemandPattern, params: MarketParams,
                       grid_steps: int = 201,
                       wtp: WtpDistribution | None = None) -> EquilibriumReport:
    """Exhaustive price-grid oracle for small instances (n <= 3).

    Sweeps p over a uniform grid on [0, pbar]^n; at each grid point the
    remaining program in (delta, x, z, r) is a plain LP solved by the same
    interior-point core, so the price search is independent of the joint QP
    path.  Ties are broken toward the lexicographically smallest price vector.
    """
    if pattern.n > 3:
        raise ValueError("oracle grid cost explodes beyond n = 3")
    if grid_steps < 2:
        raise ValueError("grid_steps must be at least 2")
    _require_uniform(wtp, params)
    n = pattern.n
    kind = ProgramKind.MIXED_ALTERNATIVE
    qp = build_program(kind, pattern, params, wtp)
    lay = VariableLayout(kind, n)

    keep = solver._presolve_rows(qp.eq_matrix)
    eq_keep = qp.eq_matrix[keep]
    rhs_keep = qp.eq_rhs[keep]
    eq_p = np.ascontiguousarray(eq_keep[:, lay.p])
    eq_rest = np.ascontiguousarray(eq_keep[:, n:])
    c_rest = np.ascontiguousarray(-qp.linear[n:])
    p_rest = np.zeros((qp.num_vars - n, qp.num_vars - n))
    mask_rest = np.ones(qp.num_vars - n, dtype=np.uint8)
    backend = solver._ipm if solver._ipm is not None else solver._ipm_py

    theta, pbar = pattern.theta, params.pbar
    grid = np.linspace(0.0, pbar, grid_steps)
    best_profit = -np.inf
    best_p: tuple[float, ...] | None = None
    for p_tuple in itertools.product(grid, repeat=n):
        p = np.array(p_tuple)
        revenue = float(p @ (theta * (1.0 - p / pbar)))
        rhs = rhs_keep - eq_p @ p
        code, v, _, _, _, _ = backend.solve_core(
            p_rest, c_rest, eq_rest, np.ascontiguousarray(rhs), mask_rest,
            1e-8, 1e-10, solver.DEFAULT_MAX_ITER)
        if code != 0:
            continue
        profit = revenue - float(c_rest @ v)
        if profit > best_profit + 0.0 or (profit == best_profit and
                                          (best_p is None or p_tuple < best_p)):
            best_profit = profit
            best_p = p_tuple
    if best_p is None:
        raise SolverError("oracle found no feasible grid point")

    # Re-solve the winning point and assemble a full report.
    p = np.array(best_p)
    rhs = rhs_keep - eq_p @ p
    code, v, w, z, iterations, metrics = backend.solve_core(
        p_rest, c_rest, eq_rest, np.ascontiguousarray(rhs), mask_rest,
        1e-8, 1e-10, solver.DEFAULT_MAX_ITER)
    if code != 0:
        raise SolverError("oracle LP re-solve failed at the winning grid point")
    primal = np.concatenate([p, v])
    duals_eq = np.zeros(qp.num_eq)
    duals_eq[keep] = -np.asarray(w)
    duals_nonneg = np.concatenate([np.zeros(n), np.asarray(z)])
    outcome = SolveOutcome(primal=primal, duals_eq=duals_eq, duals_nonneg=duals_nonneg,
                           objective=qp.objective_value(primal), status="optimal",
                           iterations=int(iterations), backend=solver.BACKEND,
                           metrics=tuple(float(m) for m in metrics))
    state = _state_from_primal(kind, primal, pattern, params)
    return EquilibriumReport(kind=kind, pattern=pattern, params=params, state=state,
                             profit=profit_of_state(state, params),
                             compensations=_attach_compensations(state, pattern, params),
                             solve=outcome)


def report_to_json(report: EquilibriumReport) -> str:
    payload = {
        "kind": report.kind.value,
        "params": {"beta": report.params.beta, "omega": report.params.omega,
                   "s": report.params.s, "k": report.params.k, "pbar": report.params.pbar},
        "wtp": {"kind": "uniform", "pbar": report.params.pbar},
        "profit": report.profit,
        "state": report.state.to_dict(),
        "compensations": None if report.compensations is None else report.compensations.c.tolist(),
        "solve": {
            "status": report.solve.status,
            "objective": report.solve.objective,
            "iterations": report.solve.iterations,
            "backend": report.solve.backend,
            "metrics": list(report.solve.metrics),
            "duals_eq": report.solve.duals_eq.tolist(),
            "duals_nonneg": report.solve.duals_nonneg.tolist(),
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str, pattern: DemandPattern) -> EquilibriumReport:
    data = json.loads(text)
    params = MarketParams(beta=data["params"]["beta"], omega=data["params"]["omega"],
                          s=data["params"]["s"], pbar=data["params"]["pbar"])
    state = FleetState.from_dict(data["state"])
    comp = None if data["compensations"] is None else Compensations(np.asarray(data["compensations"]))
    kind = ProgramKind(data["kind"])
    sv = data["solve"]
    outcome = SolveOutcome(primal=primal_from_state(kind, state),
                           duals_eq=np.asarray(sv["duals_eq"], dtype=float),
                           duals_nonneg=np.asarray(sv["duals_nonneg"], dtype=float),
                           objective=float(sv["objective"]), status=sv["status"],
                           iterations=int(sv["iterations"]), backend=sv.get("backend", ""),
                           metrics=tuple(sv.get("metrics", (np.inf,) * 3)))
    return EquilibriumReport(kind=kind, pattern=pattern, params=params,
                             state=state, profit=float(data["profit"]),
                             compensations=comp, solve=outcome)
