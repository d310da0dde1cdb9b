"""Cross-checks between the compiled interior-point core and its pure-NumPy twin."""

import os

import numpy as np
import pytest

import mixedfleet.solver as sv
import mixedfleet.solver._ipm_py as ipm_py
from mixedfleet.market import MarketParams
from mixedfleet.network import star_to_complete
from mixedfleet.programs import ProgramKind, build_program

ipm_cy = pytest.importorskip("mixedfleet.solver._ipm",
                             reason="compiled core not built")


def core_inputs(qp):
    keep = sv._presolve_rows(qp.eq_matrix)
    p_matrix = -2.0 * qp.quadratic if qp.quadratic is not None else np.zeros((qp.num_vars,) * 2)
    return (np.ascontiguousarray(p_matrix), np.ascontiguousarray(-qp.linear),
            np.ascontiguousarray(qp.eq_matrix[keep]), np.ascontiguousarray(qp.eq_rhs[keep]),
            np.ascontiguousarray(qp.nonneg_mask, dtype=np.uint8))


def instances():
    for beta, k in [(0.8, 0.1), (0.8, 0.19), (0.8, 0.3), (0.5, 0.47), (0.5, 0.0),
                    (0.95, 0.02), (0.7, 0.25)]:
        params = MarketParams.from_k(beta=beta, omega=1.0, k=k)
        for n, xi in [(3, 0.0), (4, 0.5)]:
            pattern = star_to_complete(n, xi)
            for kind in ProgramKind:
                yield build_program(kind, pattern, params)


def test_backends_agree_on_program_battery():
    for qp in instances():
        args = core_inputs(qp)
        code_py, v_py, w_py, z_py, _, met_py = ipm_py.solve_core(*args, 1e-8, 1e-10, 200)
        code_cy, v_cy, w_cy, z_cy, _, met_cy = ipm_cy.solve_core(*args, 1e-8, 1e-10, 200)
        assert code_py == code_cy == 0
        assert np.max(np.abs(np.asarray(v_py) - np.asarray(v_cy))) <= 1e-7
        assert np.max(np.abs(np.asarray(w_py) - np.asarray(w_cy))) <= 1e-6
        assert max(met_py) <= 1e-8 and max(met_cy) <= 1e-8


def test_backends_agree_on_statuses():
    infeasible = sv.QuadraticProgram(1, None, np.zeros(1), np.array([[1.0]]),
                                     np.array([-1.0]), np.array([True]))
    unbounded = sv.QuadraticProgram(1, None, np.ones(1), np.zeros((0, 1)),
                                    np.zeros(0), np.array([True]))
    for qp, expected in [(infeasible, 1), (unbounded, 2)]:
        args = core_inputs(qp)
        code_py, *_ = ipm_py.solve_core(*args, 1e-8, 1e-10, 200)
        code_cy, *_ = ipm_cy.solve_core(*args, 1e-8, 1e-10, 200)
        assert code_py == code_cy == expected


@pytest.mark.skipif(bool(os.environ.get("MIXEDFLEET_PURE_PYTHON")),
                    reason="pure-Python backend forced via environment")
def test_wrapper_selects_compiled_backend_by_default():
    assert sv.BACKEND == "cython"
