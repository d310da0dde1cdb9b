import numpy as np
import pytest

from mixedfleet.kkt import (DualCertificate, check_av_cost_bound, extract_duals,
                            stationarity_residuals)
from mixedfleet.market import MarketParams
from mixedfleet.network import star_to_complete
from mixedfleet.programs import ProgramKind, eps_mass, solve_program


def solve_pair(pattern, params):
    mixed = solve_program(ProgramKind.MIXED_ALTERNATIVE, pattern, params)
    human = solve_program(ProgramKind.HUMAN_ONLY, pattern, params)
    return mixed, human


def test_entry_multiplier_equals_omega_where_entry_is_active(star3):
    params = MarketParams.from_k(beta=0.8, omega=1.0, k=0.3)
    report = solve_program(ProgramKind.MIXED_ALTERNATIVE, star3, params)
    cert = extract_duals(report)
    active = report.state.delta > eps_mass(star3)
    assert active.any()
    assert np.max(np.abs(cert.mu[active] - params.omega)) <= 1e-6
    assert np.max(cert.mu) <= params.omega + 1e-8


def test_av_multipliers_tight_when_avs_everywhere(star3):
    params = MarketParams.from_k(beta=0.8, omega=1.0, k=0.1)
    report = solve_program(ProgramKind.MIXED_ALTERNATIVE, star3, params)
    assert np.all(report.state.z > eps_mass(star3))
    cert = extract_duals(report)
    assert np.max(np.abs(cert.lam + cert.gamma + params.s)) <= 1e-7
    families = stationarity_residuals(cert, report, star3, params)
    assert families.av_mass.active_gap <= 1e-7
    assert np.all(report.state.x <= eps_mass(star3))


def test_extract_duals_rejects_wrong_inputs(star3):
    params = MarketParams.from_k(beta=0.8, omega=1.0, k=0.3)
    human = solve_program(ProgramKind.HUMAN_ONLY, star3, params)
    with pytest.raises(ValueError):
        extract_duals(human)


def test_certificate_exists_at_empty_market(star3):
    params = MarketParams(beta=0.5, omega=2.2, s=1.0)
    report = solve_program(ProgramKind.MIXED_ALTERNATIVE, star3, params)
    cert = extract_duals(report)
    families = stationarity_residuals(cert, report, star3, params)
    assert families.worst_violation <= 1e-8


@pytest.mark.parametrize("k", [0.1, 0.19, 0.3])
def test_stationarity_families_hold_at_optima(star3, k):
    params = MarketParams.from_k(beta=0.8, omega=1.0, k=k)
    report = solve_program(ProgramKind.MIXED_ALTERNATIVE, star3, params)
    cert = extract_duals(report)
    families = stationarity_residuals(cert, report, star3, params)
    assert families.worst_violation <= 1e-7


def test_stationarity_detects_perturbed_multiplier(star3):
    params = MarketParams.from_k(beta=0.8, omega=1.0, k=0.3)
    report = solve_program(ProgramKind.MIXED_ALTERNATIVE, star3, params)
    cert = extract_duals(report)
    bad = DualCertificate(lam=cert.lam, gamma=cert.gamma, mu=cert.mu + 0.1)
    families = stationarity_residuals(bad, report, star3, params)
    assert families.entry.violation == pytest.approx(0.1, abs=1e-6)


def test_idle_av_relocations_avoid_the_diagonal(star3):
    # Positive s makes a same-location idle relocation strictly suboptimal
    # whenever AV mass is present.
    for beta, k in [(0.8, 0.1), (0.5, 0.47)]:
        params = MarketParams.from_k(beta=beta, omega=1.0, k=k)
        report = solve_program(ProgramKind.MIXED_ALTERNATIVE, star3, params)
        eps = eps_mass(star3)
        if np.any(report.state.z > eps) and np.any(report.state.r > eps):
            assert float(np.max(np.diagonal(report.state.r))) <= eps


def test_av_cost_bound_strict_gap_case(star3):
    params = MarketParams.from_k(beta=0.8, omega=1.0, k=0.15)
    verdict = check_av_cost_bound(star3, params, *solve_pair(star3, params))
    assert verdict.consistent
    assert verdict.strict_gap
    assert verdict.av_everywhere is True
    assert verdict.min_z > eps_mass(star3)


def test_av_cost_bound_vacuous_case(star3):
    params = MarketParams.from_k(beta=0.8, omega=1.0, k=0.25)
    verdict = check_av_cost_bound(star3, params, *solve_pair(star3, params))
    assert verdict.consistent
    assert not verdict.strict_gap
    assert verdict.av_everywhere is None


def test_av_cost_bound_boundary_scan(star3):
    # Near the bound k = 1 - beta the gap must close before k crosses it.
    for k in (0.4992, 0.4996, 0.5):
        params = MarketParams.from_k(beta=0.5, omega=1.0, k=k)
        verdict = check_av_cost_bound(star3, params, *solve_pair(star3, params))
        assert verdict.consistent


def test_av_cost_bound_rejects_non_family_patterns(two_complete):
    params = MarketParams(beta=0.8, omega=1.0, s=0.1)
    mixed, human = solve_pair(two_complete, params)
    with pytest.raises(ValueError):
        check_av_cost_bound(two_complete, params, mixed, human)


def test_av_cost_bound_battery_on_family():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(3, 6))
        xi = float(rng.choice([0.0, 0.25, 0.5, 1.0]))
        beta = round(float(rng.uniform(0.5, 0.95)), 3)
        k = round(float(rng.uniform(0.0, 1.1 * (1 - beta))), 4)
        pattern = star_to_complete(n, xi)
        params = MarketParams.from_k(beta=beta, omega=1.0, k=k)
        verdict = check_av_cost_bound(pattern, params, *solve_pair(pattern, params))
        assert verdict.consistent
