"""Dense concave-QP / LP solver with dual extraction.

Problems are stated in maximization form

    maximize  v' Q v + q' v
    s.t.      A_eq v = b_eq,   v_i >= 0 for i with nonneg_mask[i],

with Q symmetric negative semidefinite (Q = 0 gives an LP; one code path).
The engine is a Mehrotra predictor-corrector interior-point method on the
internal minimization form.  Two interchangeable backends implement the same
iteration: a compiled Cython core (``_ipm``) and a pure-NumPy twin
(``_ipm_py``).  The compiled core is preferred at import; set environment
variable ``MIXEDFLEET_PURE_PYTHON=1`` to force the fallback.

Reported equality duals follow the shadow-value convention: at an optimum,
grad f(v) - A_eq' y + z = 0 with z = duals_nonneg >= 0 complementary to v,
so y[i] is the marginal objective change per unit increase of b_eq[i].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _ipm_py

if os.environ.get("MIXEDFLEET_PURE_PYTHON"):
    _ipm = None
else:
    try:
        from . import _ipm  # type: ignore[attr-defined]
    except ImportError:
        _ipm = None

BACKEND = "cython" if _ipm is not None else "python"

STATUS_NAMES = {
    _ipm_py.OPTIMAL: "optimal",
    _ipm_py.INFEASIBLE: "infeasible",
    _ipm_py.UNBOUNDED: "unbounded",
    _ipm_py.MAX_ITER: "max_iter",
}

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
_RANK_TOL = 1e-10


class SolverError(RuntimeError):
    """Raised by callers that require an optimal outcome and did not get one."""

    def __init__(self, message: str, outcome: "SolveOutcome | None" = None):
        super().__init__(message)
        self.outcome = outcome


@dataclass(frozen=True)
class QuadraticProgram:
    """Concave QP in the maximization form documented at module level.

    quadratic may be None for an LP; otherwise a symmetric negative
    semidefinite (num_vars, num_vars) matrix (diagonal in all programs built
    by this package).  nonneg_mask marks which variables carry v_i >= 0;
    unmarked variables are free.
    """

    num_vars: int
    quadratic: np.ndarray | None
    linear: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    nonneg_mask: np.ndarray

    def __post_init__(self) -> None:
        n = self.num_vars
        linear = np.asarray(self.linear, dtype=float)
        eq_matrix = np.asarray(self.eq_matrix, dtype=float).reshape(-1, n)
        eq_rhs = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
        mask = np.asarray(self.nonneg_mask, dtype=bool)
        if linear.shape != (n,) or mask.shape != (n,):
            raise ValueError("linear and nonneg_mask must have length num_vars")
        if eq_matrix.shape[0] != eq_rhs.shape[0]:
            raise ValueError("eq_matrix and eq_rhs row counts differ")
        quadratic = self.quadratic
        if quadratic is not None:
            quadratic = np.asarray(quadratic, dtype=float)
            if quadratic.shape != (n, n):
                raise ValueError(f"quadratic must be ({n},{n})")
            if not np.allclose(quadratic, quadratic.T, atol=1e-12):
                raise ValueError("quadratic must be symmetric")
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "eq_matrix", eq_matrix)
        object.__setattr__(self, "eq_rhs", eq_rhs)
        object.__setattr__(self, "nonneg_mask", mask)
        object.__setattr__(self, "quadratic", quadratic)

    @property
    def num_eq(self) -> int:
        return self.eq_matrix.shape[0]

    def q_matrix(self) -> np.ndarray:
        return self.quadratic if self.quadratic is not None else np.zeros((self.num_vars, self.num_vars))

    def objective_value(self, v: np.ndarray) -> float:
        quad = float(v @ (self.quadratic @ v)) if self.quadratic is not None else 0.0
        return quad + float(self.linear @ v)

    def check_concave(self, tol: float = 1e-9) -> None:
        """Reject quadratics with positive curvature (objective must be concave)."""
        if self.quadratic is None or self.num_vars == 0:
            return
        top = float(np.max(scipy.linalg.eigvalsh(self.quadratic)))
        scale = 1.0 + float(np.max(np.abs(self.quadratic)))
        if top > tol * scale:
            raise ValueError(f"quadratic has positive eigenvalue {top:g}; objective not concave")


@dataclass(frozen=True)
class SolveOutcome:
    """Primal/dual solution with status and the residual metrics achieved."""

    primal: np.ndarray
    duals_eq: np.ndarray
    duals_nonneg: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    backend: str = ""
    metrics: tuple[float, float, float] = (np.inf, np.inf, np.inf)  # (primal, dual, gap)


@dataclass(frozen=True)
class KktResiduals:
    """Optimality residuals recomputed from scratch, independent of the solver.

    All values are scaled relative to 1 + the matching input norms, so a valid
    certificate keeps every field at or below the solve tolerance.
    """

    stationarity: float
    primal_feasibility: float
    dual_feasibility: float
    complementarity: float

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.primal_feasibility,
                   self.dual_feasibility, self.complementarity)


def _presolve_rows(eq_matrix: np.ndarray, tol: float = _RANK_TOL) -> np.ndarray:
    """Indices of a maximal independent subset of rows (pivoted QR on E')."""
    m = eq_matrix.shape[0]
    if m == 0:
        return np.zeros(0, dtype=int)
    _, r_factor, piv = scipy.linalg.qr(eq_matrix.T, mode="economic", pivoting=True)
    diag = np.abs(np.diagonal(r_factor))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(0, dtype=int)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


def solve(qp: QuadraticProgram, tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER) -> SolveOutcome:
    """Solve the program; never raises on infeasible/unbounded, reports status.

    The core iterates toward tol * 1e-2 (extra headroom for downstream
    identities) and the outcome is 'optimal' as soon as the best iterate meets
    tol in all three scaled metrics.
    """
    qp.check_concave()
    n, m = qp.num_vars, qp.num_eq
    quad = qp.quadratic
    p_matrix = (-2.0 * quad) if quad is not None else np.zeros((n, n))
    c = -qp.linear

    keep = _presolve_rows(qp.eq_matrix)
    eq = np.ascontiguousarray(qp.eq_matrix[keep])
    rhs = np.ascontiguousarray(qp.eq_rhs[keep])

    backend = _ipm if _ipm is not None else _ipm_py
    tol_target = max(tol * 1e-2, 5e-13)
    code, v, w, z, iterations, metrics = backend.solve_core(
        np.ascontiguousarray(p_matrix), np.ascontiguousarray(c), eq, rhs,
        np.ascontiguousarray(qp.nonneg_mask, dtype=np.uint8),
        tol, tol_target, max_iter)

    status = STATUS_NAMES[int(code)]
    if status == "optimal" and m > len(keep):
        # Dropped rows must be consistent; otherwise the equalities conflict.
        full_residual = qp.eq_matrix @ v - qp.eq_rhs
        if float(np.max(np.abs(full_residual))) > tol * (1.0 + float(np.max(np.abs(qp.eq_rhs)))):
            status = "infeasible"

    duals_eq = np.zeros(m)
    duals_eq[keep] = -np.asarray(w)  # internal multipliers -> shadow-value convention
    return SolveOutcome(
        primal=np.asarray(v), duals_eq=duals_eq, duals_nonneg=np.asarray(z),
        objective=qp.objective_value(np.asarray(v)), status=status,
        iterations=int(iterations), backend=BACKEND, metrics=tuple(float(x) for x in metrics))


def kkt_residuals(qp: QuadraticProgram, outcome: SolveOutcome) -> KktResiduals:
    """Certificate check from first principles; uses only (qp, primal, duals)."""
    v = np.asarray(outcome.primal, dtype=float)
    y = np.asarray(outcome.duals_eq, dtype=float)
    z = np.asarray(outcome.duals_nonneg, dtype=float)
    if v.shape != (qp.num_vars,) or y.shape != (qp.num_eq,) or z.shape != (qp.num_vars,):
        raise ValueError("outcome dimensions do not match program")
    mask = qp.nonneg_mask

    grad = 2.0 * (qp.quadratic @ v) + qp.linear if qp.quadratic is not None else qp.linear.copy()
    stationarity_vec = grad - qp.eq_matrix.T @ y + z
    q_scale = 1.0 + float(np.max(np.abs(qp.linear))) if qp.num_vars else 1.0
    stationarity = float(np.max(np.abs(stationarity_vec))) / q_scale if qp.num_vars else 0.0

    h_scale = 1.0 + (float(np.max(np.abs(qp.eq_rhs))) if qp.num_eq else 0.0)
    eq_violation = float(np.max(np.abs(qp.eq_matrix @ v - qp.eq_rhs))) if qp.num_eq else 0.0
    bound_violation = float(max(0.0, -np.min(v[mask], initial=0.0)))
    primal = max(eq_violation, bound_violation) / h_scale

    dual_violation = float(max(0.0, -np.min(z[mask], initial=0.0)))
    free_dual = float(np.max(np.abs(z[~mask]), initial=0.0))
    dual = max(dual_violation, free_dual) / q_scale

    obj_scale = 1.0 + abs(outcome.objective)
    complementarity = float(np.max(np.abs(v[mask] * z[mask]), initial=0.0)) / obj_scale
    return KktResiduals(stationarity, primal, dual, complementarity)


def dual_objective(qp: QuadraticProgram, outcome: SolveOutcome) -> float:
    """Lagrangian dual value at the reported multipliers (for duality-gap checks).

    For the maximization form this is b_eq' y - vhat' Q vhat where vhat solves
    2 Q vhat = A_eq' y - z - q; with Q = 0 it reduces to b_eq' y.
    """
    y, z = outcome.duals_eq, outcome.duals_nonneg
    rhs = qp.eq_matrix.T @ y - z - qp.linear
    if qp.quadratic is None or not qp.quadratic.any():
        if float(np.max(np.abs(rhs), initial=0.0)) > 1e-6 * (1.0 + float(np.max(np.abs(qp.linear)))):
            raise ValueError("duals do not satisfy LP stationarity; dual value undefined")
        return float(qp.eq_rhs @ y)
    vhat, *_ = np.linalg.lstsq(2.0 * qp.quadratic, rhs, rcond=None)
    residual = 2.0 * qp.quadratic @ vhat - rhs
    if float(np.max(np.abs(residual))) > 1e-6 * (1.0 + float(np.max(np.abs(rhs)))):
        raise ValueError("stationarity system inconsistent; dual value undefined")
    return float(qp.eq_rhs @ y) - float(vhat @ (qp.quadratic @ vhat))
