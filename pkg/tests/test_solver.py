import numpy as np
import pytest
import scipy.optimize

from mixedfleet.solver import (QuadraticProgram, SolveOutcome, dual_objective,
                               kkt_residuals, solve)


def scalar_parabola() -> QuadraticProgram:
    # maximize p(1-p), p >= 0
    return QuadraticProgram(1, np.array([[-1.0]]), np.array([1.0]),
                            np.zeros((0, 1)), np.zeros(0), np.array([True]))


def flat_lp() -> QuadraticProgram:
    # maximize -(v1+v2) s.t. v1+v2 = 1, v >= 0
    return QuadraticProgram(2, None, np.array([-1.0, -1.0]),
                            np.array([[1.0, 1.0]]), np.array([1.0]),
                            np.array([True, True]))


def parabola_with_cost() -> QuadraticProgram:
    # maximize p(1-p) - 0.2 x s.t. p + x = 1, both >= 0.
    # Calculus oracle: maximize p(1-p) - 0.2(1-p) over p; stationarity
    # 1 - 2p + 0.2 = 0 gives p = 0.6, x = 0.4, objective 0.16, shadow value
    # of the constraint -0.2 (raising the right-hand side adds costly x).
    return QuadraticProgram(2, np.diag([-1.0, 0.0]), np.array([1.0, -0.2]),
                            np.array([[1.0, 1.0]]), np.array([1.0]),
                            np.array([True, True]))


def test_scalar_parabola_vertex():
    out = solve(scalar_parabola())
    assert out.status == "optimal"
    assert out.primal == pytest.approx([0.5], abs=1e-9)
    assert out.objective == pytest.approx(0.25, abs=1e-9)


def test_flat_lp_objective_and_dual():
    out = solve(flat_lp())
    assert out.status == "optimal"
    assert out.objective == pytest.approx(-1.0, abs=1e-9)
    assert float(out.primal.sum()) == pytest.approx(1.0, abs=1e-9)
    assert out.duals_eq == pytest.approx([-1.0], abs=1e-8)


def test_parabola_with_cost_matches_calculus():
    out = solve(parabola_with_cost())
    assert out.status == "optimal"
    assert out.primal == pytest.approx([0.6, 0.4], abs=1e-9)
    assert out.objective == pytest.approx(0.16, abs=1e-10)
    assert out.duals_eq == pytest.approx([-0.2], abs=1e-8)


def test_kkt_residuals_at_optimum_and_under_perturbation():
    qp = scalar_parabola()
    out = solve(qp)
    assert kkt_residuals(qp, out).worst <= 1e-8

    perturbed = SolveOutcome(primal=out.primal + 0.1, duals_eq=out.duals_eq,
                             duals_nonneg=out.duals_nonneg, objective=out.objective,
                             status=out.status)
    worst = kkt_residuals(qp, perturbed).worst
    assert worst >= 0.05


def test_kkt_residuals_accept_hand_built_certificate():
    qp = parabola_with_cost()
    outcome = SolveOutcome(primal=np.array([0.6, 0.4]), duals_eq=np.array([-0.2]),
                           duals_nonneg=np.zeros(2), objective=0.16, status="optimal")
    assert kkt_residuals(qp, outcome).worst <= 1e-10


def test_kkt_residuals_dimension_check():
    qp = parabola_with_cost()
    bad = SolveOutcome(primal=np.zeros(3), duals_eq=np.zeros(1),
                       duals_nonneg=np.zeros(3), objective=0.0, status="optimal")
    with pytest.raises(ValueError):
        kkt_residuals(qp, bad)


def test_infeasible_detected():
    qp = QuadraticProgram(1, None, np.zeros(1), np.array([[1.0]]),
                          np.array([-1.0]), np.array([True]))
    assert solve(qp).status == "infeasible"


def test_inconsistent_redundant_rows_detected():
    qp = QuadraticProgram(2, None, -np.ones(2),
                          np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 2.0]),
                          np.array([True, True]))
    assert solve(qp).status == "infeasible"


def test_consistent_redundant_rows_are_presolved_away():
    qp = QuadraticProgram(2, None, -np.ones(2),
                          np.array([[1.0, 1.0], [2.0, 2.0]]), np.array([1.0, 2.0]),
                          np.array([True, True]))
    out = solve(qp)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(-1.0, abs=1e-9)
    assert out.duals_eq.shape == (2,)


def test_unbounded_detected():
    qp = QuadraticProgram(1, None, np.array([1.0]), np.zeros((0, 1)),
                          np.zeros(0), np.array([True]))
    assert solve(qp).status == "unbounded"


def test_free_variable_support():
    # maximize -(v - 1)^2 over free v (constant term dropped).
    qp = QuadraticProgram(1, np.array([[-1.0]]), np.array([2.0]),
                          np.zeros((0, 1)), np.zeros(0), np.array([False]))
    out = solve(qp)
    assert out.status == "optimal"
    assert out.primal == pytest.approx([1.0], abs=1e-8)


def test_nonconcave_quadratic_rejected():
    qp = QuadraticProgram(1, np.array([[1.0]]), np.zeros(1), np.zeros((0, 1)),
                          np.zeros(0), np.array([True]))
    with pytest.raises(ValueError):
        solve(qp)


def test_asymmetric_quadratic_rejected():
    with pytest.raises(ValueError):
        QuadraticProgram(2, np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros(2),
                         np.zeros((0, 2)), np.zeros(0), np.ones(2, dtype=bool))


def test_argmax_invariant_under_objective_scaling():
    base = solve(parabola_with_cost())
    lam = 7.25
    scaled_qp = QuadraticProgram(2, lam * np.diag([-1.0, 0.0]),
                                 lam * np.array([1.0, -0.2]),
                                 np.array([[1.0, 1.0]]), np.array([1.0]),
                                 np.array([True, True]))
    scaled = solve(scaled_qp)
    assert scaled.status == "optimal"
    assert scaled.primal == pytest.approx(base.primal, abs=1e-6)
    assert scaled.objective == pytest.approx(lam * base.objective, abs=1e-8)


def test_determinism_bit_identical():
    qp = parabola_with_cost()
    first = solve(qp)
    second = solve(qp)
    assert np.array_equal(first.primal, second.primal)
    assert np.array_equal(first.duals_eq, second.duals_eq)
    assert np.array_equal(first.duals_nonneg, second.duals_nonneg)
    assert first.objective == second.objective


def _random_feasible_lp(rng, n_vars, n_rows):
    # Feasibility by construction: pick a positive point and match the rhs.
    eq = rng.normal(size=(n_rows, n_vars))
    v0 = rng.uniform(0.5, 2.0, size=n_vars)
    rhs = eq @ v0
    cost = -rng.uniform(0.1, 2.0, size=n_vars)  # bounded: maximize a negative cost
    return QuadraticProgram(n_vars, None, cost, eq, rhs, np.ones(n_vars, dtype=bool))


def test_random_lps_match_scipy_linprog(rng):
    # Independent oracle: scipy HiGHS on the equivalent minimization.
    for _ in range(25):
        n_vars = int(rng.integers(3, 8))
        n_rows = int(rng.integers(1, n_vars))
        qp = _random_feasible_lp(rng, n_vars, n_rows)
        out = solve(qp)
        assert out.status == "optimal"
        ref = scipy.optimize.linprog(-qp.linear, A_eq=qp.eq_matrix, b_eq=qp.eq_rhs,
                                     bounds=[(0, None)] * n_vars, method="highs")
        assert ref.status == 0
        assert out.objective == pytest.approx(-ref.fun, abs=1e-7)


def test_strong_duality_on_random_instances(rng):
    for _ in range(25):
        n_vars = int(rng.integers(2, 7))
        n_rows = int(rng.integers(1, n_vars))
        qp_lp = _random_feasible_lp(rng, n_vars, n_rows)
        diag = -rng.uniform(0.1, 1.0, size=n_vars)
        qp = QuadraticProgram(n_vars, np.diag(diag), qp_lp.linear, qp_lp.eq_matrix,
                              qp_lp.eq_rhs, qp_lp.nonneg_mask)
        out = solve(qp)
        assert out.status == "optimal"
        assert dual_objective(qp, out) == pytest.approx(out.objective, abs=1e-7)
        assert kkt_residuals(qp, out).worst <= 1e-8


def test_metrics_reported_at_or_below_tolerance():
    out = solve(parabola_with_cost())
    assert max(out.metrics) <= 1e-8
    assert out.backend in ("cython", "python")
