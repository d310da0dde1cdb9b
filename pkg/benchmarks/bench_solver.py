#!/usr/bin/env python3
"""Benchmark the compiled interior-point core against the pure-NumPy twin.

Three workloads mirror how the package actually spends its time:

* program solves on the 3-location star (threshold bisections),
* program solves on a 5-location interpolated network (validation batteries),
* fixed-price relocation LPs (the brute-force oracle's inner loop).

Run:  python3 benchmarks/bench_solver.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import mixedfleet.solver as sv
import mixedfleet.solver._ipm_py as ipm_py
from mixedfleet.market import MarketParams
from mixedfleet.network import DemandPattern, star_to_complete
from mixedfleet.programs import ProgramKind, VariableLayout, build_program

try:
    import mixedfleet.solver._ipm as ipm_cy
except ImportError:
    ipm_cy = None


def core_inputs(qp):
    keep = sv._presolve_rows(qp.eq_matrix)
    p_matrix = -2.0 * qp.quadratic if qp.quadratic is not None else np.zeros((qp.num_vars,) * 2)
    return (np.ascontiguousarray(p_matrix), np.ascontiguousarray(-qp.linear),
            np.ascontiguousarray(qp.eq_matrix[keep]), np.ascontiguousarray(qp.eq_rhs[keep]),
            np.ascontiguousarray(qp.nonneg_mask, dtype=np.uint8))


def qp_workload(pattern, betas_ks):
    cases = []
    for beta, k in betas_ks:
        params = MarketParams.from_k(beta=beta, omega=1.0, k=k)
        for kind in ProgramKind:
            cases.append(core_inputs(build_program(kind, pattern, params)))
    return cases


def oracle_lp_workload(num_prices: int = 120):
    pattern = DemandPattern(2, [[0, 1], [1, 0]], [1, 1])
    params = MarketParams(beta=0.8, omega=1.0, s=0.5)
    qp = build_program(ProgramKind.MIXED_ALTERNATIVE, pattern, params)
    lay = VariableLayout(ProgramKind.MIXED_ALTERNATIVE, 2)
    keep = sv._presolve_rows(qp.eq_matrix)
    eq_keep, rhs_keep = qp.eq_matrix[keep], qp.eq_rhs[keep]
    eq_p = eq_keep[:, lay.p]
    eq_rest = np.ascontiguousarray(eq_keep[:, 2:])
    c_rest = np.ascontiguousarray(-qp.linear[2:])
    p_rest = np.zeros((qp.num_vars - 2, qp.num_vars - 2))
    mask = np.ones(qp.num_vars - 2, dtype=np.uint8)
    grid = np.linspace(0.0, 1.0, num_prices)
    cases = []
    for a in grid:
        p = np.array([a, 1.0 - a])
        cases.append((p_rest, c_rest, eq_rest,
                      np.ascontiguousarray(rhs_keep - eq_p @ p), mask))
    return cases


def run(backend, cases, repeat: int) -> float:
    start = time.perf_counter()
    for _ in range(repeat):
        for args in cases:
            code, *_ = backend.solve_core(*args, 1e-8, 1e-10, 200)
            assert code == 0
    return (time.perf_counter() - start) / (repeat * len(cases))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    star3_cases = qp_workload(star_to_complete(3, 0.0),
                              [(0.8, 0.1), (0.8, 0.19), (0.5, 0.47), (0.7, 0.25)])
    star5_cases = qp_workload(star_to_complete(5, 0.5),
                              [(0.8, 0.1), (0.6, 0.3)])
    lp_cases = oracle_lp_workload()

    workloads = [
        ("star-3 programs (21 vars)", star3_cases),
        ("star-5 programs (45 vars)", star5_cases),
        ("oracle relocation LPs (10 vars)", lp_cases),
    ]

    print(f"{'workload':<34} {'python':>12} {'cython':>12} {'speedup':>9}")
    for label, cases in workloads:
        t_py = run(ipm_py, cases, args.repeat)
        if ipm_cy is not None:
            t_cy = run(ipm_cy, cases, args.repeat)
            print(f"{label:<34} {t_py * 1e6:>9.0f} us {t_cy * 1e6:>9.0f} us "
                  f"{t_py / t_cy:>8.1f}x")
        else:
            print(f"{label:<34} {t_py * 1e6:>9.0f} us {'n/a':>12} {'n/a':>9}")
    if ipm_cy is None:
        print("\ncompiled core not built; install with a C toolchain to compare")


if __name__ == "__main__":
    main()
