import json

import numpy as np
import pytest

from mixedfleet.network import (DemandPattern, is_star_to_complete, read_network,
                                star_to_complete, strongly_connected, validate,
                                write_network)


def test_validate_star3_ok(star3):
    assert validate(star3).ok
    assert star3.alpha.tolist() == [[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]


def test_validate_self_loop_reports_both_codes():
    pattern = DemandPattern(3, [[1, 0, 0], [0, 0, 1], [0, 1, 0]], [1, 1, 1])
    result = validate(pattern)
    assert not result.ok
    assert {"nonzero_diagonal", "not_strongly_connected"} <= result.codes()


def test_validate_two_location_complete(two_complete):
    assert validate(two_complete).ok


def test_validate_row_sum_and_theta():
    pattern = DemandPattern(2, [[0, 0.9], [1, 0]], [1, -1])
    codes = validate(pattern).codes()
    assert "row_sum" in codes and "theta_positive" in codes


def test_validate_shape_mismatch():
    pattern = DemandPattern(3, [[0, 1], [1, 0]], [1, 1, 1])
    assert validate(pattern).codes() == {"shape"}


def test_star_to_complete_star_rows():
    pattern = star_to_complete(3, 0.0)
    expected = [[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
    assert pattern.alpha.tolist() == expected
    assert pattern.theta.tolist() == [1.0, 1.0, 1.0]


def test_star_to_complete_complete_rows():
    pattern = star_to_complete(3, 1.0)
    expected = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]
    assert np.allclose(pattern.alpha, expected, atol=1e-15)


def test_star_to_complete_halfway_coefficients():
    pattern = star_to_complete(3, 0.5)
    assert pattern.alpha[1, 0] == pytest.approx(0.75, abs=1e-15)  # c1
    assert pattern.alpha[1, 2] == pytest.approx(0.25, abs=1e-15)  # c2


@pytest.mark.parametrize("n,xi", [(2, 0.5), (3, -0.1), (3, 1.1)])
def test_star_to_complete_rejects_bad_inputs(n, xi):
    with pytest.raises(ValueError):
        star_to_complete(n, xi)


def test_strongly_connected_cases(star3):
    assert strongly_connected(star3.alpha)
    assert not strongly_connected(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert strongly_connected(np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float))


def test_strongly_connected_rejects_nonsquare():
    with pytest.raises(ValueError):
        strongly_connected(np.ones((2, 3)))


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("xi", [round(0.1 * i, 1) for i in range(11)])
def test_family_row_sums_connectivity_validation(n, xi):
    pattern = star_to_complete(n, xi)
    assert np.max(np.abs(pattern.alpha.sum(axis=1) - 1.0)) <= 1e-12
    assert strongly_connected(pattern.alpha)
    assert validate(pattern).ok


def test_is_star_to_complete(star3, two_complete):
    assert is_star_to_complete(star3)
    assert is_star_to_complete(star_to_complete(4, 0.3))
    assert not is_star_to_complete(two_complete)
    ring = DemandPattern(3, [[0, 1, 0], [0, 0, 1], [1, 0, 0]], [1, 1, 1])
    assert not is_star_to_complete(ring)


def test_normalized_rescales_rows():
    pattern = DemandPattern(2, [[0, 2.0], [0.5, 0]], [1, 1])
    fixed = pattern.normalized()
    assert validate(fixed).ok
    assert not validate(pattern).ok  # original untouched


def test_json_round_trip(tmp_path, star3):
    path = tmp_path / "net.json"
    write_network(star3, path)
    loaded = read_network(path)
    assert loaded.n == star3.n
    assert np.array_equal(loaded.alpha, star3.alpha)
    assert np.array_equal(loaded.theta, star3.theta)
    payload = json.loads(path.read_text())
    assert set(payload) == {"n", "alpha", "theta"}
