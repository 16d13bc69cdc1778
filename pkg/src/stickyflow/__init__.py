"""Sticky particle flows in one dimension.

Quantile-map calculus, monotone-cone projection, an exact event-driven
sticky particle engine, closed-form Lagrangian solutions, long-time
diagnostics, and the bombardment decay studies.
"""

from .asymptotics import (
    AsymptoticProfile,
    DecayFit,
    DiagnosticsReport,
    DivergentFlowError,
    decay_fit,
    diagnose,
    energy_gap,
    identity_3_11_probe,
    identity_suite,
    inequality_suite,
    limit_profile,
    limit_uniqueness_check,
    metric_derivative,
    shape_checks,
    theta,
)
from .bombardment import (
    BombardmentSpec,
    admissible_speed,
    energy_gap_series,
    engine_cross_validation,
    exponent_sweep,
    geometric_family,
    reference_family,
    run_recursion,
)
from .cone import cone_certificates, convex_envelope, is_confinement_consistent, pava, project_monotone
from .engine import EventLog, clusters_at, next_event, quantile_at, simulate, state_at
from .lagrangian import (
    LagrangianSolution,
    confine_flow,
    confinement_equivalence,
    flow_identity_check,
    generic_decay_check,
    oleinik_check,
    solve_quantile,
)
from .quantile import (
    Atom,
    DiscreteMeasure,
    Domain,
    PiecewiseLinear,
    StepFunction,
    antiderivative,
    cdf_of,
    l2_inner,
    l2_norm,
    pushforward,
    quantile_of,
    wasserstein2,
    wasserstein2_squared,
)
from .scenario import Scenario, ScenarioError, load_scenario, run

__all__ = [
    "AsymptoticProfile",
    "DecayFit",
    "DiagnosticsReport",
    "DivergentFlowError",
    "decay_fit",
    "diagnose",
    "energy_gap",
    "identity_3_11_probe",
    "identity_suite",
    "inequality_suite",
    "limit_profile",
    "limit_uniqueness_check",
    "metric_derivative",
    "shape_checks",
    "theta",
    "BombardmentSpec",
    "admissible_speed",
    "energy_gap_series",
    "engine_cross_validation",
    "exponent_sweep",
    "geometric_family",
    "reference_family",
    "run_recursion",
    "cone_certificates",
    "convex_envelope",
    "is_confinement_consistent",
    "pava",
    "project_monotone",
    "EventLog",
    "clusters_at",
    "next_event",
    "quantile_at",
    "simulate",
    "state_at",
    "LagrangianSolution",
    "confine_flow",
    "confinement_equivalence",
    "flow_identity_check",
    "generic_decay_check",
    "oleinik_check",
    "solve_quantile",
    "Atom",
    "DiscreteMeasure",
    "Domain",
    "PiecewiseLinear",
    "StepFunction",
    "antiderivative",
    "cdf_of",
    "l2_inner",
    "l2_norm",
    "pushforward",
    "quantile_of",
    "wasserstein2",
    "wasserstein2_squared",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "run",
]

__version__ = "0.1.0"
