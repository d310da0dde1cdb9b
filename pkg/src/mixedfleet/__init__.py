"""Profit-maximizing equilibria for ride-sharing networks with mixed
human-driven and autonomous fleets: network construction, equilibrium
primitives, a dense concave-QP solver, program builders, KKT certificates,
and parameter sweeps with threshold detection."""

from .network import DemandPattern, star_to_complete, strongly_connected, validate
from .market import (Compensations, FleetState, MarketParams, UniformWtp,
                     WtpDistribution, construct_compensation, driver_value,
                     effective_demand, equilibrium_residuals, platform_cost_identity)
from .solver import QuadraticProgram, SolveOutcome, SolverError, kkt_residuals, solve

__all__ = [
    "DemandPattern", "star_to_complete", "strongly_connected", "validate",
    "Compensations", "FleetState", "MarketParams", "UniformWtp", "WtpDistribution",
    "construct_compensation", "driver_value", "effective_demand",
    "equilibrium_residuals", "platform_cost_identity",
    "QuadraticProgram", "SolveOutcome", "SolverError", "kkt_residuals", "solve",
]

__version__ = "0.1.0"
