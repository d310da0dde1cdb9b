"""Pure-NumPy interior-point core (Mehrotra predictor-corrector).

Reference implementation of the compiled core in ``_ipm.pyx``: same algorithm,
same status codes, same tolerances.  Solves the internal minimization form

    min 0.5 v'Pv + c'v   s.t.  E v = h,  v_i >= 0 for i in the nonneg set,

with P symmetric positive semidefinite and E of full row rank (the public
wrapper presolves redundancy away).  Newton systems use the augmented matrix
[[P + D, E'], [E, 0]] with D = diag(z_i / v_i) on nonnegative coordinates,
factored once per iteration with LU and reused for predictor and corrector,
plus one iterative-refinement pass against the unregularized matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
MAX_ITER = 3

_STEP_FRACTION = 0.99995
_DIVERGENCE_LIMIT = 1e13
_STALL_WINDOW = 8
_STALL_FACTOR = 0.98


def _max_step(u: np.ndarray, du: np.ndarray) -> float:
    """Largest alpha in (0, 1] with u + alpha * du >= 0 (u > 0 componentwise)."""
    shrinking = du < 0
    if not np.any(shrinking):
        return 1.0
    return float(min(1.0, np.min(-u[shrinking] / du[shrinking])))


def _certify_infeasible(E, h, w, z, nonneg):
    # Farkas direction: E'w + z ~ 0 with z >= 0 on the nonneg set and h'w > 0.
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale <= 1e4:
        return False
    w_hat = w / scale
    z_hat = z / scale
    residual = E.T @ w_hat + z_hat
    e_scale = 1.0 + (float(np.max(np.abs(E))) if E.size else 0.0)
    h_scale = 1.0 + (float(np.max(np.abs(h))) if h.size else 0.0)
    return (float(np.max(np.abs(residual))) <= 1e-8 * e_scale
            and float(h @ w_hat) >= 1e-8 * h_scale)


def _certify_unbounded(P, c, E, v, nonneg):
    # Descent ray: E v_hat = 0, v_hat >= 0 on the nonneg set, P v_hat = 0, c'v_hat < 0.
    scale = float(np.max(np.abs(v)))
    if scale <= 1e4:
        return False
    v_hat = v / scale
    if np.min(v_hat[nonneg], initial=0.0) < -1e-8:
        return False
    e_scale = 1.0 + (float(np.max(np.abs(E))) if E.size else 0.0)
    if E.size and float(np.max(np.abs(E @ v_hat))) > 1e-8 * e_scale:
        return False
    p_scale = 1.0 + (float(np.max(np.abs(P))) if P.size else 0.0)
    if float(np.max(np.abs(P @ v_hat))) > 1e-8 * p_scale:
        return False
    return float(c @ v_hat) <= -1e-8 * (1.0 + float(np.max(np.abs(c))))


def solve_core(P: np.ndarray, c: np.ndarray, E: np.ndarray, h: np.ndarray,
               nonneg: np.ndarray, tol_accept: float, tol_target: float,
               max_iter: int):
    """Run the predictor-corrector iteration.

    Returns (status, v, w, z, iterations, (rp, rd, gap)) where w are equality
    multipliers of the internal form and z >= 0 are the bound multipliers.
    The iteration pushes toward tol_target and reports OPTIMAL as soon as the
    best iterate meets tol_accept once no further progress is possible (or
    immediately when tol_target is met).
    """
    n = c.shape[0]
    m = h.shape[0]
    nonneg = np.asarray(nonneg, dtype=bool)
    free = ~nonneg
    num_nonneg = int(nonneg.sum())

    v = np.where(nonneg, 1.0, 0.0)
    z = np.where(nonneg, 1.0, 0.0)
    w = np.zeros(m)

    h_scale = 1.0 + (float(np.max(np.abs(h))) if m else 0.0)
    c_scale = 1.0 + (float(np.max(np.abs(c))) if n else 0.0)
    p_norm = float(np.max(np.abs(P))) if P.size else 0.0
    reg_p = 1e-12 * max(1.0, p_norm)
    reg_d = 1e-12

    best = (np.inf, v.copy(), w.copy(), z.copy(), (np.inf, np.inf, np.inf))
    history: list[float] = []
    iterations = 0

    for iterations in range(1, max_iter + 1):
        r_d = P @ v + c - (E.T @ w if m else 0.0) - z
        r_p = (E @ v - h) if m else np.zeros(0)
        gap = float(v[nonneg] @ z[nonneg]) if num_nonneg else 0.0
        mu = gap / num_nonneg if num_nonneg else 0.0
        obj = 0.5 * float(v @ (P @ v)) + float(c @ v)

        rp_rel = float(np.max(np.abs(r_p))) / h_scale if m else 0.0
        rd_rel = float(np.max(np.abs(r_d))) / c_scale
        gap_rel = gap / (1.0 + abs(obj))
        worst = max(rp_rel, rd_rel, gap_rel)

        if worst < best[0]:
            best = (worst, v.copy(), w.copy(), z.copy(), (rp_rel, rd_rel, gap_rel))
        if worst <= tol_target:
            break
        history.append(best[0])
        if len(history) > _STALL_WINDOW and history[-1] > _STALL_FACTOR * history[-1 - _STALL_WINDOW]:
            break
        if (float(np.max(np.abs(v))) > _DIVERGENCE_LIMIT
                or (m and float(np.max(np.abs(w))) > _DIVERGENCE_LIMIT)
                or float(np.max(np.abs(z))) > _DIVERGENCE_LIMIT):
            break

        # Augmented KKT matrix, shared by predictor and corrector.
        d_diag = np.zeros(n)
        d_diag[nonneg] = z[nonneg] / v[nonneg]
        size = n + m
        kkt = np.zeros((size, size))
        kkt[:n, :n] = P
        kkt[:n, :n][np.diag_indices(n)] += d_diag
        if m:
            kkt[:n, n:] = E.T
            kkt[n:, :n] = E
        kkt_reg = kkt.copy()
        kkt_reg[:n, :n][np.diag_indices(n)] += reg_p
        if m:
            kkt_reg[n:, n:][np.diag_indices(m)] -= reg_d
        try:
            lu = scipy.linalg.lu_factor(kkt_reg, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            break

        def solve_kkt(rhs_top, rhs_bot):
            rhs = np.concatenate([rhs_top, rhs_bot]) if m else rhs_top
            sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
            residual = rhs - kkt @ sol
            sol = sol + scipy.linalg.lu_solve(lu, residual, check_finite=False)
            return sol[:n], (-sol[n:] if m else np.zeros(0))

        # Predictor: pure Newton step toward complementarity zero.
        rhs_top = -r_d - np.where(nonneg, z, 0.0)
        dv_aff, dw_aff = solve_kkt(rhs_top, -r_p)
        dz_aff = np.zeros(n)
        dz_aff[nonneg] = -z[nonneg] - d_diag[nonneg] * dv_aff[nonneg]

        if num_nonneg:
            alpha_p_aff = _max_step(v[nonneg], dv_aff[nonneg])
            alpha_d_aff = _max_step(z[nonneg], dz_aff[nonneg])
            mu_aff = float((v[nonneg] + alpha_p_aff * dv_aff[nonneg])
                           @ (z[nonneg] + alpha_d_aff * dz_aff[nonneg])) / num_nonneg
            sigma = min(1.0, max((mu_aff / mu) ** 3 if mu > 0 else 0.0, 1e-10))
        else:
            sigma = 0.0

        # Corrector: recenters to sigma * mu and compensates the affine product.
        correction = np.zeros(n)
        if num_nonneg:
            correction[nonneg] = ((v[nonneg] * z[nonneg]
                                   + dv_aff[nonneg] * dz_aff[nonneg]
                                   - sigma * mu) / v[nonneg])
        dv, dw = solve_kkt(-r_d - correction, -r_p)
        dz = np.zeros(n)
        if num_nonneg:
            dz[nonneg] = ((-(v[nonneg] * z[nonneg] + dv_aff[nonneg] * dz_aff[nonneg]
                             - sigma * mu)) / v[nonneg]) - d_diag[nonneg] * dv[nonneg]

        if num_nonneg:
            alpha_p = min(1.0, _STEP_FRACTION * _max_step(v[nonneg], dv[nonneg]))
            alpha_d = min(1.0, _STEP_FRACTION * _max_step(z[nonneg], dz[nonneg]))
        else:
            alpha_p = alpha_d = 1.0
        if alpha_p < 1e-12 and alpha_d < 1e-12:
            break
        v = v + alpha_p * dv
        w = w + alpha_d * dw
        z = z + alpha_d * dz
        v[nonneg] = np.maximum(v[nonneg], 1e-300)
        z[nonneg] = np.maximum(z[nonneg], 1e-300)

    worst, v_best, w_best, z_best, metrics = best
    if worst <= tol_accept:
        return OPTIMAL, v_best, w_best, z_best, iterations, metrics
    if m and _certify_infeasible(E, h, w, z, nonneg):
        return INFEASIBLE, v_best, w_best, z_best, iterations, metrics
    if _certify_unbounded(P, c, E, v, nonneg):
        return UNBOUNDED, v_best, w_best, z_best, iterations, metrics
    return MAX_ITER, v_best, w_best, z_best, iterations, metrics
