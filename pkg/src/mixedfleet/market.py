"""Market primitives: willingness to pay, effective demand, steady-state flow
residuals, the driver value function, and the compensation schedule that makes
a feasible flow pattern an equilibrium.

Conventions: all per-location quantities are length-n vectors; relocation
flows ``y`` (unmatched drivers) and ``r`` (idle autonomous vehicles) are (n, n)
matrices with ``y[j][k]`` the mass moved from j to k for the next period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import DemandPattern


@dataclass(frozen=True)
class MarketParams:
    """Market-side constants.

    Attributes:
        beta: probability a driver stays on the platform after a ride, in (0, 1).
        omega: outside-option lifetime earnings of a driver (> 0).
        s: operating cost of one unit of AV mass, on the driver-lifetime scale
           used by the profit objective (>= 0).
        pbar: upper end of the willingness-to-pay support (> 0; 1 for the
              uniform market normalization).
    """

    beta: float
    omega: float
    s: float
    pbar: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if self.s < 0:
            raise ValueError(f"s must be >= 0, got {self.s}")
        if self.pbar <= 0:
            raise ValueError(f"pbar must be > 0, got {self.pbar}")

    @property
    def k(self) -> float:
        """Cost ratio s/omega."""
        return self.s / self.omega

    @classmethod
    def from_k(cls, beta: float, omega: float, k: float, pbar: float = 1.0) -> "MarketParams":
        return cls(beta=beta, omega=omega, s=k * omega, pbar=pbar)


class WtpDistribution:
    """Continuous cumulative distribution of rider willingness to pay on [0, pbar].

    Subclasses provide a vectorized ``cdf``; it must be nondecreasing with
    cdf(0) = 0 and cdf(pbar) = 1.  Only the uniform instance yields a concave
    quadratic profit objective, so program building accepts uniform only; this
    base class is the hook for plugging other distributions into the residual
    and demand primitives.
    """

    pbar: float = 1.0
    is_uniform: bool = False

    def cdf(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check(self, grid_points: int = 257, tol: float = 1e-9) -> None:
        """Sanity-check monotonicity and the boundary values on a grid."""
        grid = np.linspace(0.0, self.pbar, grid_points)
        values = np.asarray(self.cdf(grid), dtype=float)
        if abs(values[0]) > tol or abs(values[-1] - 1.0) > tol:
            raise ValueError("cdf must satisfy cdf(0) = 0 and cdf(pbar) = 1")
        if np.any(np.diff(values) < -tol):
            raise ValueError("cdf must be nondecreasing")


class UniformWtp(WtpDistribution):
    """Uniform willingness to pay on [0, pbar]: cdf(p) = p / pbar."""

    is_uniform = True

    def __init__(self, pbar: float = 1.0):
        if pbar <= 0:
            raise ValueError(f"pbar must be > 0, got {pbar}")
        self.pbar = float(pbar)

    def cdf(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(p, dtype=float) / self.pbar


@dataclass(frozen=True)
class FleetState:
    """One market configuration: prices and all mass/flow variables.

    Fields: p (prices), delta (driver entry mass), x (driver mass), y (driver
    relocation flows), z (AV mass), r (AV relocation flows), d (effective
    demand, theta * (1 - F(p))).  All entries are nonnegative at a valid state.
    """

    p: np.ndarray
    delta: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    r: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        for name in ("p", "delta", "x", "z", "d"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        for name in ("y", "r"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def zeros(cls, n: int, p: np.ndarray | float = 0.0) -> "FleetState":
        full_p = np.full(n, p, dtype=float) if np.isscalar(p) else np.asarray(p, dtype=float)
        zv, zm = np.zeros(n), np.zeros((n, n))
        return cls(p=full_p, delta=zv.copy(), x=zv.copy(), y=zm.copy(),
                   z=zv.copy(), r=zm.copy(), d=zv.copy())

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "delta": self.delta.tolist(), "x": self.x.tolist(),
                "y": self.y.tolist(), "z": self.z.tolist(), "r": self.r.tolist(),
                "d": self.d.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FleetState":
        return cls(**{key: np.asarray(data[key], dtype=float) for key in
                      ("p", "delta", "x", "y", "z", "r", "d")})


@dataclass(frozen=True)
class Compensations:
    """Per-ride driver compensation by location."""

    c: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", np.atleast_1d(np.asarray(self.c, dtype=float)))


def effective_demand(p: np.ndarray, pattern: DemandPattern, wtp: WtpDistribution) -> np.ndarray:
    """Demand that accepts price p at each location: theta_i * (1 - F(p_i))."""
    p = np.asarray(p, dtype=float)
    if p.shape != (pattern.n,):
        raise ValueError(f"p must have shape ({pattern.n},), got {p.shape}")
    if np.any(p < 0) or np.any(p > wtp.pbar):
        raise ValueError("prices must lie in [0, pbar]")
    return pattern.theta * (1.0 - wtp.cdf(p))


def check_state_consistency(state: FleetState, pattern: DemandPattern,
                            wtp: WtpDistribution, tol: float = 1e-9) -> None:
    """Raise unless d matches theta * (1 - F(p)) within tol and all fields are nonnegative."""
    expected = pattern.theta * (1.0 - wtp.cdf(state.p))
    if np.max(np.abs(state.d - expected)) > tol:
        raise ValueError("state.d is inconsistent with theta * (1 - F(p))")
    for name in ("p", "delta", "x", "y", "z", "r", "d"):
        if np.any(np.asarray(getattr(state, name)) < -tol):
            raise ValueError(f"state.{name} has negative entries")


@dataclass(frozen=True)
class EquilibriumResiduals:
    """Signed residual vectors of the four steady-state flow equations.

    y_balance[j]: sum_k y[j][k] - max(x_j - d_j, 0)           (unmatched drivers relocate)
    x_flow[i]:    x_i - beta * (sum_j a_ji min(x_j, d_j) + sum_j y[j][i]) - delta_i
    z_flow[i]:    z_i - sum_j a_ji min(z_j, max(d_j - x_j, 0)) - sum_j r[j][i]
    r_balance[j]: sum_k r[j][k] - max(z_j - max(d_j - x_j, 0), 0)  (idle AVs relocate)
    """

    y_balance: np.ndarray
    x_flow: np.ndarray
    z_flow: np.ndarray
    r_balance: np.ndarray

    def max_abs(self) -> dict[str, float]:
        return {name: float(np.max(np.abs(getattr(self, name))))
                for name in ("y_balance", "x_flow", "z_flow", "r_balance")}

    @property
    def worst(self) -> float:
        return max(self.max_abs().values())

    def is_equilibrium(self, tol: float = 1e-7) -> bool:
        return self.worst <= tol


def equilibrium_residuals(state: FleetState, pattern: DemandPattern,
                          params: MarketParams) -> EquilibriumResiduals:
    """Evaluate the four flow equations at a candidate state.

    All zeros (within tolerance) means the state is a steady-state flow
    equilibrium for its prices; the signed vectors localize any violation.
    """
    n = pattern.n
    if state.n != n or state.y.shape != (n, n) or state.r.shape != (n, n):
        raise ValueError(f"state dimensions do not match pattern n={n}")
    alpha, beta = pattern.alpha, params.beta
    x, d, z, delta = state.x, state.d, state.z, state.delta

    served_by_drivers = np.minimum(x, d)
    excess_demand = np.maximum(d - x, 0.0)
    served_by_avs = np.minimum(z, excess_demand)

    y_balance = state.y.sum(axis=1) - np.maximum(x - d, 0.0)
    x_flow = x - beta * (alpha.T @ served_by_drivers + state.y.sum(axis=0)) - delta
    z_flow = z - alpha.T @ served_by_avs - state.r.sum(axis=0)
    r_balance = state.r.sum(axis=1) - np.maximum(z - excess_demand, 0.0)
    return EquilibriumResiduals(y_balance, x_flow, z_flow, r_balance)


def _match_probability(state: FleetState) -> np.ndarray:
    """min(d_i / x_i, 1), with the x_i = 0 convention that a driver is surely matched."""
    x, d = state.x, state.d
    m = np.ones_like(x)
    busy = x > 0
    m[busy] = np.minimum(d[busy] / x[busy], 1.0)
    return m


def driver_value(state: FleetState, pattern: DemandPattern, params: MarketParams,
                 comp: Compensations, tol: float = 1e-10, max_iter: int = 10**6) -> np.ndarray:
    """Expected lifetime earnings per location under compensation schedule comp.

    Solves V_i = m_i (c_i + beta * sum_k a_ik V_k) + (1 - m_i) beta max_j V_j
    with m_i the per-period match probability, by plain fixed-point iteration
    from V = 0.  The map is a beta-contraction in sup norm, so convergence is
    guaranteed; iteration stops once successive sup-norm change <= tol.
    """
    if comp.c.shape != (pattern.n,):
        raise ValueError("compensation length does not match pattern")
    if np.any(comp.c < 0):
        raise ValueError("compensations must be nonnegative")
    m = _match_probability(state)
    alpha, beta, c = pattern.alpha, params.beta, comp.c
    v = np.zeros(pattern.n)
    for _ in range(max_iter):
        v_next = m * (c + beta * (alpha @ v)) + (1.0 - m) * beta * np.max(v)
        if np.max(np.abs(v_next - v)) <= tol:
            return v_next
        v = v_next
    raise RuntimeError(f"driver value iteration did not converge within {max_iter} iterations")


def construct_compensation(state: FleetState, params: MarketParams) -> Compensations:
    """Compensation making expected lifetime earnings equal omega everywhere.

    c_i = (x_i / d_i) * omega * (1 - beta) where demand falls short of drivers
    (the matched driver's premium covers idle periods), and omega * (1 - beta)
    where every driver is matched.  Requires d_i > 0 at every location.
    """
    x, d = state.x, state.d
    if np.any(d <= 0):
        i = int(np.argmax(d <= 0))
        raise ValueError(f"compensation undefined: d[{i}] = {d[i]:g} must be > 0")
    base = params.omega * (1.0 - params.beta)
    c = np.where(d < x, x / d * base, base)
    return Compensations(c)


def platform_cost_identity(state: FleetState, comp: Compensations,
                           params: MarketParams) -> tuple[float, float]:
    """Per-period driver payout vs. entry cost: sum_i min(x_i, d_i) c_i and omega * sum_i delta_i.

    At a flow equilibrium with the constructed compensation the two sides are
    equal (entering mass replaces exiting mass, (1-beta) sum x = sum delta).
    Both are returned even off equilibrium so callers can diagnose the gap.
    """
    payout = float(np.minimum(state.x, state.d) @ comp.c)
    entry_cost = float(params.omega * state.delta.sum())
    return payout, entry_cost
