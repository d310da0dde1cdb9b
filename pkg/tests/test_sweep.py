import pytest

from mixedfleet.market import MarketParams
from mixedfleet.programs import ProgramKind, solve_program
from mixedfleet.sweep import (SweepResult, SweepRow, ThresholdRow, ThresholdScanError,
                              _scan_switch_index, classify_regime, find_thresholds,
                              sweep_grid, sweep_to_csv, thresholds_to_csv)


def test_regime_classification_rules():
    eps = 3e-6
    assert classify_regime(0.0, 1.0, eps) == "all_av"
    assert classify_regime(1.0, 1.0, eps) == "mixed"
    assert classify_regime(1.0, 0.0, eps) == "human_only"
    assert classify_regime(0.0, 0.0, eps) == "human_only"  # empty market


def test_sweep_grid_regimes_and_gap(star3):
    result = sweep_grid(star3, omega=1.0, betas=[0.8], ks=[0.1, 0.19, 0.25])
    assert not result.failures
    regimes = [row.regime for row in result.rows]
    assert regimes == ["all_av", "human_only", "human_only"]
    gaps = [row.profit_mixed - row.profit_human for row in result.rows]
    assert gaps[0] > 1e-3
    assert abs(gaps[1]) <= 1e-7 and abs(gaps[2]) <= 1e-7
    for row in result.rows:
        assert row.profit_mixed >= row.profit_human - 1e-8


def test_sweep_grid_mixed_regime(star3):
    result = sweep_grid(star3, omega=1.0, betas=[0.5], ks=[0.47])
    assert result.rows[0].regime == "mixed"


def test_sweep_grid_priced_out_market(star3):
    result = sweep_grid(star3, omega=3.0, betas=[0.5], ks=[0.4])
    row = result.rows[0]
    assert row.profit_mixed == pytest.approx(0.0, abs=1e-7)
    assert row.profit_human == pytest.approx(0.0, abs=1e-7)


def test_sweep_rows_sorted(star3):
    result = sweep_grid(star3, omega=1.0, betas=[0.8, 0.6], ks=[0.3, 0.1])
    keys = [(row.beta, row.k) for row in result.rows]
    assert keys == sorted(keys)


def test_find_thresholds_star_beta08(star3):
    row = find_thresholds(star3, omega=1.0, beta=0.8, tol=5e-4)
    assert row.k_a == pytest.approx(0.1799, abs=2e-3)
    assert row.k_s == pytest.approx(0.18, abs=2e-3)
    assert row.k_t == 1.0 - 0.8
    assert row.k_a <= row.k_s + 5e-4 <= row.k_t + 2 * 5e-4


def test_find_thresholds_regime_segments(star3):
    # Below k_a the optimum is all-AV with a strict profit gap; above k_s the
    # AV mass vanishes and the profits coincide.  The in-between strict-gap
    # claim needs a beta where the mixed band is wide (at beta=0.8 the band
    # k_a..k_s is only ~1e-4, thinner than the bisection tolerance).
    tol = 5e-4
    row = find_thresholds(star3, omega=1.0, beta=0.8, tol=tol)
    below = sweep_grid(star3, 1.0, [0.8], [row.k_a - 10 * tol]).rows[0]
    assert below.regime == "all_av"
    assert below.profit_mixed > below.profit_human + 1e-7
    above = sweep_grid(star3, 1.0, [0.8], [row.k_s + 10 * tol]).rows[0]
    assert above.regime == "human_only"
    assert above.profit_mixed == pytest.approx(above.profit_human, abs=1e-7)

    wide = find_thresholds(star3, omega=1.0, beta=0.5, tol=tol)
    assert wide.k_s - wide.k_a > 0.05
    between = sweep_grid(star3, 1.0, [0.5], [(wide.k_a + wide.k_s) / 2]).rows[0]
    assert between.regime == "mixed"
    assert between.profit_mixed > between.profit_human + 1e-7


def test_scan_switch_index_accepts_single_switch():
    assert _scan_switch_index([True, True, False, False], True, "x", [0, 1, 2, 3]) == 2
    assert _scan_switch_index([False, False, True], False, "z", [0, 1, 2]) == 2
    assert _scan_switch_index([True, True], True, "x", [0, 1]) is None
    assert _scan_switch_index([False, False], False, "z", [0, 1]) is None


def test_scan_switch_index_rejects_multiple_switches():
    with pytest.raises(ThresholdScanError):
        _scan_switch_index([True, False, True, False], True, "x", [0.0, 0.01, 0.02, 0.03])
    with pytest.raises(ThresholdScanError):
        _scan_switch_index([False, True, False], False, "z", [0.0, 0.01, 0.02])


def test_thresholds_csv_schema_is_bit_exact():
    rows = [ThresholdRow(beta=0.5, k_a=0.4383, k_s=0.4992, k_t=0.5),
            ThresholdRow(beta=0.55, k_a=0.3916, k_s=0.4417, k_t=0.45)]
    expected = ("beta,k_a,k_s,k_t\n"
                "0.5000,0.4383,0.4992,0.5000\n"
                "0.5500,0.3916,0.4417,0.4500\n")
    assert thresholds_to_csv(rows) == expected


def test_sweep_csv_schema():
    result = SweepResult(rows=(SweepRow(beta=0.8, k=0.1, profit_mixed=0.57,
                                        profit_human=0.4548, total_x=0.0,
                                        total_z=1.6, regime="all_av"),),
                         failures=())
    text = sweep_to_csv(result)
    lines = text.splitlines()
    assert lines[0] == "beta,k,profit_mixed,profit_human,total_x,total_z,regime"
    assert lines[1].endswith(",all_av")
    assert text.endswith("\n")


def test_invalid_tol_rejected(star3):
    with pytest.raises(ValueError):
        find_thresholds(star3, omega=1.0, beta=0.8, tol=0.0)
