"""Program-specific optimality certificates for the mixed-fleet program.

The equality multipliers of a solved mixed program split into three families:
``lam`` on the AV-mass definition rows, ``gamma`` on the relocation row sums,
and ``mu`` on the driver-flow rows.  Written against the program's Lagrangian,
optimality requires four inequality families (with equality on coordinates
whose primal mass is strictly positive):

    (i)   entry:         mu_i - omega                                   <= 0
    (ii)  driver mass:   sum_j a_ij (beta mu_j - lam_j) - gamma_i - mu_i <= 0
    (iii) AV mass:       -s - lam_i - gamma_i                            <= 0
    (iv)  relocation:    lam_j + gamma_i                                 <= 0

:func:`stationarity_residuals` reports the worst violation and the worst
active-coordinate equality gap per family.  :func:`check_av_cost_bound` uses
solved profits to falsify the structural claim that, on a star-to-complete
network, AVs can only raise optimal profit when k <= 1 - beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import MarketParams
from .network import DemandPattern, is_star_to_complete
from .programs import EquilibriumReport, ProgramKind, VariableLayout, eps_mass


@dataclass(frozen=True)
class DualCertificate:
    """Equality multipliers (lam, gamma, mu) in the sign convention above."""

    lam: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray


def extract_duals(report: EquilibriumReport) -> DualCertificate:
    """Pull (lam, gamma, mu) out of a solved mixed program's equality duals.

    The solver reports shadow-value duals y (marginal objective per unit of
    right-hand side); the Lagrangian convention used by the families flips the
    sign, so each block is negated here.
    """
    if report.kind is not ProgramKind.MIXED_ALTERNATIVE:
        raise ValueError("dual certificate is defined for mixed_alternative reports")
    if report.solve.status != "optimal":
        raise ValueError(f"cannot extract duals from status {report.solve.status!r}")
    lay = VariableLayout(report.kind, report.pattern.n)
    duals = np.asarray(report.solve.duals_eq, dtype=float)
    if duals.shape != (lay.num_rows,):
        raise ValueError("equality dual vector does not match program rows")
    return DualCertificate(lam=-duals[lay.rows_z_def],
                           gamma=-duals[lay.rows_flow_sum],
                           mu=-duals[lay.rows_x_flow])


@dataclass(frozen=True)
class FamilyCheck:
    """One inequality family: worst positive part, and worst |gap| where the
    matching primal coordinate is active (above the mass threshold)."""

    violation: float
    active_gap: float


@dataclass(frozen=True)
class StationarityReport:
    entry: FamilyCheck
    driver_mass: FamilyCheck
    av_mass: FamilyCheck
    relocation: FamilyCheck

    def families(self) -> dict[str, FamilyCheck]:
        return {"entry": self.entry, "driver_mass": self.driver_mass,
                "av_mass": self.av_mass, "relocation": self.relocation}

    @property
    def worst_violation(self) -> float:
        return max(f.violation for f in self.families().values())

    @property
    def worst_active_gap(self) -> float:
        return max(f.active_gap for f in self.families().values())


def _family(expr: np.ndarray, active: np.ndarray) -> FamilyCheck:
    violation = float(np.max(expr, initial=0.0))
    gap = float(np.max(np.abs(expr[active]), initial=0.0))
    return FamilyCheck(max(violation, 0.0), gap)


def stationarity_residuals(cert: DualCertificate, report: EquilibriumReport,
                           pattern: DemandPattern, params: MarketParams,
                           activity_threshold: float | None = None) -> StationarityReport:
    """Evaluate the four families at (cert, state); activity uses the shared
    mass threshold unless overridden."""
    n = pattern.n
    lam, gamma, mu = cert.lam, cert.gamma, cert.mu
    if lam.shape != (n,) or gamma.shape != (n,) or mu.shape != (n,):
        raise ValueError("certificate dimensions do not match pattern")
    eps = eps_mass(pattern) if activity_threshold is None else activity_threshold
    state = report.state
    alpha = pattern.alpha

    entry = _family(mu - params.omega, state.delta > eps)
    driver = _family(alpha @ (params.beta * mu - lam) - gamma - mu, state.x > eps)
    av = _family(-params.s - lam - gamma, state.z > eps)
    relocation = _family(lam[None, :] + gamma[:, None], state.r > eps)
    return StationarityReport(entry=entry, driver_mass=driver, av_mass=av,
                              relocation=relocation)


@dataclass(frozen=True)
class AvCostBoundVerdict:
    """Outcome of the falsification check on one star-to-complete instance.

    consistent is False only when the mixed fleet strictly out-earns the
    human-only fleet while k exceeds 1 - beta.  When the gap is strict, AV
    mass must additionally be present at every location (av_everywhere);
    that side condition is reported but does not flip the verdict.
    """

    consistent: bool
    strict_gap: bool
    beta: float
    k: float
    min_z: float
    av_everywhere: bool | None


def check_av_cost_bound(pattern: DemandPattern, params: MarketParams,
                        mixed: EquilibriumReport, human: EquilibriumReport,
                        profit_tol: float = 1e-6,
                        k_tol: float = 1e-9) -> AvCostBoundVerdict:
    """Falsification harness: tolerances above are part of its contract."""
    if not is_star_to_complete(pattern):
        raise ValueError("bound check applies to star-to-complete patterns only")
    if mixed.kind is not ProgramKind.MIXED_ALTERNATIVE or human.kind is not ProgramKind.HUMAN_ONLY:
        raise ValueError("expected one mixed_alternative and one human_only report")
    strict_gap = mixed.profit > human.profit + profit_tol
    violated = strict_gap and params.k > (1.0 - params.beta) + k_tol
    min_z = float(np.min(mixed.state.z))
    av_everywhere = bool(min_z > eps_mass(pattern)) if strict_gap else None
    return AvCostBoundVerdict(consistent=not violated, strict_gap=strict_gap,
                              beta=params.beta, k=params.k, min_z=min_z,
                              av_everywhere=av_everywhere)
