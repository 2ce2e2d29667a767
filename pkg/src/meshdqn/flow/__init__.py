from meshdqn.flow.analytic import AnalyticKind, AnalyticParams, analytic_snapshots
from meshdqn.flow.models import FluidConstants, PropertyKind, PropertyVector
from meshdqn.flow.quantities import (
    compute_force_components,
    compute_property,
    reynolds_number,
    stress_tensor,
)

__all__ = [
    "AnalyticKind",
    "AnalyticParams",
    "FluidConstants",
    "PropertyKind",
    "PropertyVector",
    "analytic_snapshots",
    "compute_force_components",
    "compute_property",
    "reynolds_number",
    "stress_tensor",
]
