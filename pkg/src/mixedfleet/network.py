"""Demand-pattern networks: construction, validation, and the star-to-complete family.

A demand pattern is a set of ``n`` equidistant locations, a row-stochastic
routing matrix ``alpha`` (``alpha[i][j]`` = fraction of riders at ``i`` headed
to ``j``), and a vector ``theta`` of rider arrival masses per period.  The
market model requires a zero diagonal and strong connectivity of the positive
entries, which :func:`validate` checks explicitly.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DemandPattern:
    """Immutable network of locations with routing fractions and arrival masses.

    Attributes:
        n: number of locations.
        alpha: (n, n) routing matrix; row i sums to 1, alpha[i][i] == 0.
        theta: (n,) positive rider arrival mass per location and period.

    The constructor only coerces shapes/dtypes; call :func:`validate` to check
    the model invariants (candidates with violations are representable so they
    can be reported rather than rejected).
    """

    n: int
    alpha: np.ndarray
    theta: np.ndarray

    def __post_init__(self) -> None:
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        alpha.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "theta", theta)

    def normalized(self) -> "DemandPattern":
        """Copy with each alpha row rescaled to sum to 1 (explicit request only)."""
        sums = self.alpha.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise ValueError("cannot normalize: some row of alpha sums to zero")
        return DemandPattern(self.n, self.alpha / sums, self.theta)

    def to_dict(self) -> dict:
        return {"n": self.n, "alpha": self.alpha.tolist(), "theta": self.theta.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DemandPattern":
        return cls(int(data["n"]), np.asarray(data["alpha"], dtype=float),
                   np.asarray(data["theta"], dtype=float))


@dataclass(frozen=True)
class Violation:
    """One failed invariant: a short machine code plus a human-readable message."""

    code: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def strongly_connected(alpha: np.ndarray) -> bool:
    """True iff every location reaches every other along positive-entry edges.

    Runs one forward and one reverse breadth-first search from location 0;
    the graph is strongly connected iff both reach all nodes.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 2 or alpha.shape[0] != alpha.shape[1]:
        raise ValueError("alpha must be a square matrix")
    n = alpha.shape[0]
    if n == 0:
        return False
    positive = alpha > 0

    def reaches_all(adj: np.ndarray) -> bool:
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in np.nonzero(adj[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    queue.append(j)
        return bool(seen.all())

    return reaches_all(positive) and reaches_all(positive.T)


def validate(pattern: DemandPattern, row_sum_tol: float = ROW_SUM_TOL) -> ValidationResult:
    """Check every DemandPattern invariant; violations are data, not exceptions."""
    bad: list[Violation] = []
    alpha, theta, n = pattern.alpha, pattern.theta, pattern.n

    if alpha.shape != (n, n) or theta.shape != (n,) or n < 1:
        bad.append(Violation("shape", f"expected alpha ({n},{n}) and theta ({n},), "
                                      f"got {alpha.shape} and {theta.shape}"))
        return ValidationResult(False, tuple(bad))

    diag = np.diagonal(alpha)
    for i in np.nonzero(diag != 0)[0]:
        bad.append(Violation("nonzero_diagonal", f"alpha[{i}][{i}] = {diag[i]:g} must be 0"))

    row_sums = alpha.sum(axis=1)
    for i in np.nonzero(np.abs(row_sums - 1.0) > row_sum_tol)[0]:
        bad.append(Violation("row_sum", f"row {i} of alpha sums to {row_sums[i]!r}, not 1"))

    if np.any((alpha < 0) | (alpha > 1)):
        i, j = np.argwhere((alpha < 0) | (alpha > 1))[0]
        bad.append(Violation("entry_range", f"alpha[{i}][{j}] = {alpha[i, j]:g} outside [0, 1]"))

    for i in np.nonzero(theta <= 0)[0]:
        bad.append(Violation("theta_positive", f"theta[{i}] = {theta[i]:g} must be > 0"))

    if not strongly_connected(alpha):
        bad.append(Violation("not_strongly_connected",
                             "positive-entry graph of alpha is not strongly connected"))

    return ValidationResult(not bad, tuple(bad))


def star_to_complete(n: int, xi: float) -> DemandPattern:
    """Network interpolating a star (xi=0, hub at location 0) and a complete graph (xi=1).

    Row 0 routes 1/(n-1) to every other location.  Every other row routes
    c1 = xi/(n-1) + (1-xi) back to the hub and c2 = xi/(n-1) to each remaining
    location.  All arrival masses are 1.
    """
    if n < 3:
        raise ValueError(f"star-to-complete family needs n >= 3, got {n}")
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must lie in [0, 1], got {xi}")
    c1 = xi / (n - 1) + (1.0 - xi)
    c2 = xi / (n - 1)
    alpha = np.full((n, n), c2)
    alpha[0, :] = 1.0 / (n - 1)
    alpha[1:, 0] = c1
    np.fill_diagonal(alpha, 0.0)
    pattern = DemandPattern(n, alpha, np.ones(n))
    result = validate(pattern)
    if not result.ok:  # construction bug guard, not reachable for valid inputs
        raise AssertionError(f"constructed pattern fails validation: {result.violations}")
    return pattern


def is_star_to_complete(pattern: DemandPattern, atol: float = 1e-9) -> bool:
    """True iff the pattern matches the star-to-complete structure for some xi."""
    n, alpha = pattern.n, pattern.alpha
    if n < 3 or alpha.shape != (n, n):
        return False
    if np.any(np.abs(np.diagonal(alpha)) > atol):
        return False
    off0 = alpha[0, 1:]
    if np.any(np.abs(off0 - 1.0 / (n - 1)) > atol):
        return False
    c1 = alpha[1:, 0]
    if np.any(np.abs(c1 - c1[0]) > atol):
        return False
    rest = alpha[1:, 1:]
    c2_entries = rest[~np.eye(n - 1, dtype=bool)]
    if c2_entries.size and np.any(np.abs(c2_entries - c2_entries[0]) > atol):
        return False
    c2 = float(c2_entries[0]) if c2_entries.size else 0.0
    xi = c2 * (n - 1)
    if not -atol <= xi <= 1.0 + atol:
        return False
    return abs(c1[0] - (xi / (n - 1) + (1.0 - xi))) <= atol


def write_network(pattern: DemandPattern, path: str | Path) -> None:
    """Write the single on-disk network format: JSON {n, alpha, theta}."""
    Path(path).write_text(json.dumps(pattern.to_dict(), indent=2) + "\n")


def read_network(path: str | Path) -> DemandPattern:
    return DemandPattern.from_dict(json.loads(Path(path).read_text()))
