# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled interior-point core (Mehrotra predictor-corrector).

Twin of ``_ipm_py``: identical algorithm, status codes, and tolerances, with
the per-iteration linear algebra done in C via LAPACK (dgetrf/dgetrs).  The
augmented KKT matrix is symmetric, so the row-major buffer can be handed to
column-major LAPACK unchanged.
"""

from libc.math cimport fabs

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_lapack cimport dgetrf, dgetrs

cnp.import_array()

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
MAX_ITER = 3

cdef double STEP_FRACTION = 0.99995
cdef double DIVERGENCE_LIMIT = 1e13
cdef int STALL_WINDOW = 8
cdef double STALL_FACTOR = 0.98


cdef inline double _absmax(double[::1] vec, Py_ssize_t length) noexcept:
    cdef double out = 0.0
    cdef Py_ssize_t i
    for i in range(length):
        if fabs(vec[i]) > out:
            out = fabs(vec[i])
    return out


cdef inline double _masked_step(double[::1] u, double[::1] du,
                                unsigned char[::1] mask, Py_ssize_t n) noexcept:
    """Largest alpha in (0, 1] keeping u + alpha*du >= 0 on masked coords."""
    cdef double alpha = 1.0
    cdef double candidate
    cdef Py_ssize_t i
    for i in range(n):
        if mask[i] and du[i] < 0.0:
            candidate = -u[i] / du[i]
            if candidate < alpha:
                alpha = candidate
    return alpha


def solve_core(double[:, ::1] P, double[::1] c, double[:, ::1] E, double[::1] h,
               unsigned char[::1] nonneg, double tol_accept, double tol_target,
               int max_iter):
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t m = h.shape[0]
    cdef Py_ssize_t size = n + m
    cdef Py_ssize_t i, j, it
    cdef int num_nonneg = 0
    for i in range(n):
        if nonneg[i]:
            num_nonneg += 1

    v_arr = np.zeros(n); z_arr = np.zeros(n); w_arr = np.zeros(m)
    cdef double[::1] v = v_arr, z = z_arr, w = w_arr
    for i in range(n):
        if nonneg[i]:
            v[i] = 1.0
            z[i] = 1.0

    r_d_arr = np.zeros(n); r_p_arr = np.zeros(max(m, 1))
    cdef double[::1] r_d = r_d_arr, r_p = r_p_arr
    d_diag_arr = np.zeros(n)
    cdef double[::1] d_diag = d_diag_arr
    kkt_arr = np.zeros((size, size)); kkt_orig_arr = np.zeros((size, size))
    cdef double[:, ::1] kkt = kkt_arr, kkt_orig = kkt_orig_arr
    rhs_arr = np.zeros(size); sol_arr = np.zeros(size); resid_arr = np.zeros(size)
    cdef double[::1] rhs = rhs_arr, sol = sol_arr, resid = resid_arr
    ipiv_arr = np.zeros(size, dtype=np.intc)
    cdef int[::1] ipiv = ipiv_arr
    dv_aff_arr = np.zeros(n); dz_aff_arr = np.zeros(n); dw_aff_arr = np.zeros(m)
    dv_arr = np.zeros(n); dz_arr = np.zeros(n); dw_arr = np.zeros(m)
    cdef double[::1] dv_aff = dv_aff_arr, dz_aff = dz_aff_arr, dw_aff = dw_aff_arr
    cdef double[::1] dv = dv_arr, dz = dz_arr, dw = dw_arr
    corr_arr = np.zeros(n)
    cdef double[::1] corr = corr_arr
    best_v_arr = v_arr.copy(); best_z_arr = z_arr.copy(); best_w_arr = w_arr.copy()
    cdef double[::1] best_v = best_v_arr, best_z = best_z_arr, best_w = best_w_arr
    hist_arr = np.zeros(max_iter + 1)
    cdef double[::1] history = hist_arr
    cdef int hist_len = 0

    cdef double h_scale = 1.0 + (_absmax(h, m) if m else 0.0)
    cdef double c_scale = 1.0 + _absmax(c, n)
    cdef double p_norm = 0.0
    for i in range(n):
        for j in range(n):
            if fabs(P[i, j]) > p_norm:
                p_norm = fabs(P[i, j])
    cdef double reg_p = 1e-12 * (p_norm if p_norm > 1.0 else 1.0)
    cdef double reg_d = 1e-12

    cdef double best_worst = np.inf
    cdef double best_rp = np.inf, best_rd = np.inf, best_gap = np.inf
    cdef double gap, mu, obj, acc, rp_rel, rd_rel, gap_rel, worst
    cdef double sigma, mu_aff, alpha_p, alpha_d, vmax, wmax, zmax
    cdef int info, one_int = 1, size_int = <int> size
    cdef char trans = b'N'
    cdef int iterations = 0
    cdef bint failed = False

    for it in range(1, max_iter + 1):
        iterations = it
        # Residuals of the internal minimization form.
        for i in range(n):
            acc = c[i] - z[i]
            for j in range(n):
                acc += P[i, j] * v[j]
            for j in range(m):
                acc -= E[j, i] * w[j]
            r_d[i] = acc
        for i in range(m):
            acc = -h[i]
            for j in range(n):
                acc += E[i, j] * v[j]
            r_p[i] = acc
        gap = 0.0
        for i in range(n):
            if nonneg[i]:
                gap += v[i] * z[i]
        mu = gap / num_nonneg if num_nonneg > 0 else 0.0
        obj = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += P[i, j] * v[j]
            obj += 0.5 * v[i] * acc + c[i] * v[i]

        rp_rel = (_absmax(r_p, m) / h_scale) if m else 0.0
        rd_rel = _absmax(r_d, n) / c_scale
        gap_rel = gap / (1.0 + fabs(obj))
        worst = rp_rel
        if rd_rel > worst:
            worst = rd_rel
        if gap_rel > worst:
            worst = gap_rel

        if worst < best_worst:
            best_worst = worst
            best_rp = rp_rel; best_rd = rd_rel; best_gap = gap_rel
            for i in range(n):
                best_v[i] = v[i]; best_z[i] = z[i]
            for i in range(m):
                best_w[i] = w[i]
        if worst <= tol_target:
            break
        history[hist_len] = best_worst
        hist_len += 1
        if hist_len > STALL_WINDOW and history[hist_len - 1] > STALL_FACTOR * history[hist_len - 1 - STALL_WINDOW]:
            break
        vmax = _absmax(v, n); zmax = _absmax(z, n); wmax = _absmax(w, m) if m else 0.0
        if vmax > DIVERGENCE_LIMIT or zmax > DIVERGENCE_LIMIT or wmax > DIVERGENCE_LIMIT:
            break

        # Augmented KKT matrix and its regularized LU factorization.
        for i in range(n):
            d_diag[i] = (z[i] / v[i]) if nonneg[i] else 0.0
        for i in range(size):
            for j in range(size):
                kkt_orig[i, j] = 0.0
        for i in range(n):
            for j in range(n):
                kkt_orig[i, j] = P[i, j]
            kkt_orig[i, i] += d_diag[i]
        for i in range(m):
            for j in range(n):
                kkt_orig[n + i, j] = E[i, j]
                kkt_orig[j, n + i] = E[i, j]
        for i in range(size):
            for j in range(size):
                kkt[i, j] = kkt_orig[i, j]
        for i in range(n):
            kkt[i, i] += reg_p
        for i in range(m):
            kkt[n + i, n + i] -= reg_d
        dgetrf(&size_int, &size_int, &kkt[0, 0], &size_int, &ipiv[0], &info)
        if info != 0:
            break

        # Predictor (affine) direction.
        for i in range(n):
            rhs[i] = -r_d[i] - (z[i] if nonneg[i] else 0.0)
        for i in range(m):
            rhs[n + i] = -r_p[i]
        _solve_refined(kkt, kkt_orig, ipiv, rhs, sol, resid, size_int)
        for i in range(n):
            dv_aff[i] = sol[i]
        for i in range(m):
            dw_aff[i] = -sol[n + i]
        for i in range(n):
            dz_aff[i] = (-z[i] - d_diag[i] * dv_aff[i]) if nonneg[i] else 0.0

        if num_nonneg > 0:
            alpha_p = _masked_step(v, dv_aff, nonneg, n)
            alpha_d = _masked_step(z, dz_aff, nonneg, n)
            mu_aff = 0.0
            for i in range(n):
                if nonneg[i]:
                    mu_aff += (v[i] + alpha_p * dv_aff[i]) * (z[i] + alpha_d * dz_aff[i])
            mu_aff /= num_nonneg
            sigma = (mu_aff / mu) ** 3 if mu > 0.0 else 0.0
            if sigma > 1.0:
                sigma = 1.0
            if sigma < 1e-10:
                sigma = 1e-10
        else:
            sigma = 0.0

        # Corrector direction.
        for i in range(n):
            if nonneg[i]:
                corr[i] = (v[i] * z[i] + dv_aff[i] * dz_aff[i] - sigma * mu) / v[i]
            else:
                corr[i] = 0.0
            rhs[i] = -r_d[i] - corr[i]
        for i in range(m):
            rhs[n + i] = -r_p[i]
        _solve_refined(kkt, kkt_orig, ipiv, rhs, sol, resid, size_int)
        for i in range(n):
            dv[i] = sol[i]
        for i in range(m):
            dw[i] = -sol[n + i]
        for i in range(n):
            if nonneg[i]:
                dz[i] = -(v[i] * z[i] + dv_aff[i] * dz_aff[i] - sigma * mu) / v[i] - d_diag[i] * dv[i]
            else:
                dz[i] = 0.0

        if num_nonneg > 0:
            alpha_p = STEP_FRACTION * _masked_step(v, dv, nonneg, n)
            alpha_d = STEP_FRACTION * _masked_step(z, dz, nonneg, n)
            if alpha_p > 1.0:
                alpha_p = 1.0
            if alpha_d > 1.0:
                alpha_d = 1.0
        else:
            alpha_p = 1.0
            alpha_d = 1.0
        if alpha_p < 1e-12 and alpha_d < 1e-12:
            break
        for i in range(n):
            v[i] += alpha_p * dv[i]
            z[i] += alpha_d * dz[i]
            if nonneg[i]:
                if v[i] < 1e-300:
                    v[i] = 1e-300
                if z[i] < 1e-300:
                    z[i] = 1e-300
        for i in range(m):
            w[i] += alpha_d * dw[i]

    metrics = (best_rp, best_rd, best_gap)
    if best_worst <= tol_accept:
        return OPTIMAL, best_v_arr, best_w_arr, best_z_arr, iterations, metrics
    if m and _certify_infeasible(E, h, w_arr, z_arr):
        return INFEASIBLE, best_v_arr, best_w_arr, best_z_arr, iterations, metrics
    if _certify_unbounded(P, c, E, v_arr, nonneg):
        return UNBOUNDED, best_v_arr, best_w_arr, best_z_arr, iterations, metrics
    return MAX_ITER, best_v_arr, best_w_arr, best_z_arr, iterations, metrics


cdef void _solve_refined(double[:, ::1] lu, double[:, ::1] original, int[::1] ipiv,
                         double[::1] rhs, double[::1] sol, double[::1] work,
                         int size) noexcept:
    """sol := A^{-1} rhs via the LU factors, plus one iterative-refinement pass
    against the unregularized matrix."""
    cdef int info, one = 1
    cdef char trans = b'N'
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(size):
        sol[i] = rhs[i]
    dgetrs(&trans, &size, &one, &lu[0, 0], &size, &ipiv[0], &sol[0], &size, &info)
    for i in range(size):
        acc = rhs[i]
        for j in range(size):
            acc -= original[i, j] * sol[j]
        work[i] = acc
    dgetrs(&trans, &size, &one, &lu[0, 0], &size, &ipiv[0], &work[0], &size, &info)
    for i in range(size):
        sol[i] += work[i]


def _certify_infeasible(double[:, ::1] E, double[::1] h, w_arr, z_arr):
    # Farkas direction: E'w + z ~ 0 with z >= 0 on the nonneg set and h'w > 0.
    w = np.asarray(w_arr)
    z = np.asarray(z_arr)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale <= 1e4:
        return False
    w_hat = w / scale
    z_hat = z / scale
    E_np = np.asarray(E)
    residual = E_np.T @ w_hat + z_hat
    e_scale = 1.0 + (float(np.max(np.abs(E_np))) if E_np.size else 0.0)
    h_np = np.asarray(h)
    h_scale = 1.0 + (float(np.max(np.abs(h_np))) if h_np.size else 0.0)
    return (float(np.max(np.abs(residual))) <= 1e-8 * e_scale
            and float(h_np @ w_hat) >= 1e-8 * h_scale)


def _certify_unbounded(double[:, ::1] P, double[::1] c, double[:, ::1] E,
                       v_arr, unsigned char[::1] nonneg):
    # Descent ray: E v_hat = 0, v_hat >= 0 on the nonneg set, P v_hat = 0, c'v_hat < 0.
    v = np.asarray(v_arr)
    scale = float(np.max(np.abs(v)))
    if scale <= 1e4:
        return False
    v_hat = v / scale
    mask = np.asarray(nonneg, dtype=bool)
    if np.min(v_hat[mask], initial=0.0) < -1e-8:
        return False
    E_np = np.asarray(E)
    e_scale = 1.0 + (float(np.max(np.abs(E_np))) if E_np.size else 0.0)
    if E_np.size and float(np.max(np.abs(E_np @ v_hat))) > 1e-8 * e_scale:
        return False
    P_np = np.asarray(P)
    p_scale = 1.0 + (float(np.max(np.abs(P_np))) if P_np.size else 0.0)
    if float(np.max(np.abs(P_np @ v_hat))) > 1e-8 * p_scale:
        return False
    c_np = np.asarray(c)
    return float(c_np @ v_hat) <= -1e-8 * (1.0 + float(np.max(np.abs(c_np))))
