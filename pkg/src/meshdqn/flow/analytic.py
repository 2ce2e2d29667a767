"""Closed-form flow fields used as ground-truth fixtures."""

from __future__ import annotations

from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from meshdqn.fields.models import SnapshotSet, dof_points
from meshdqn.flow.models import FluidConstants
from meshdqn.mesh.models import TriMesh


class AnalyticKind(str, Enum):
    poiseuille = "poiseuille"
    uniform = "uniform"
    linear_shear = "linear-shear"


class AnalyticParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # Peak (poiseuille) or free-stream (uniform) velocity
    u_max: float = 1.0
    # Velocity gradient du_x/dy of the linear-shear field
    shear: float = 1.0
    # Channel extent; taken from the mesh bounding box when unset
    height: Optional[float] = Field(None, gt=0)
    length: Optional[float] = Field(None, gt=0)
    n_snapshots: int = Field(5, ge=1)
    velocity_order: Literal[1, 2] = 2
    # Snapshot s is scaled by 1 + ramp * s / (n_snapshots - 1)
    ramp: float = 0.1
    fluid: FluidConstants = Field(default_factory=FluidConstants)


def _scales(params: AnalyticParams) -> np.ndarray:
    if params.n_snapshots == 1:
        return np.ones(1)
    return 1.0 + params.ramp * np.arange(params.n_snapshots) / (params.n_snapshots - 1)


def analytic_snapshots(
    kind: AnalyticKind | str, mesh: TriMesh, params: AnalyticParams | None = None
) -> SnapshotSet:
    """
    Fill velocity and pressure DOFs from a closed-form field.

    poiseuille: u_x = 4 U y' (H - y') / H^2, u_y = 0 and the matching linear
    pressure drop p = 8 mu U (L - x') / H^2, with x', y' measured from the
    mesh's lower-left corner. uniform: u = (U, 0), p = 0. linear-shear:
    u_x = shear * y', u_y = 0, p = 0.
    """
    kind = AnalyticKind(kind)
    params = params or AnalyticParams()
    lo = mesh.vertices.min(axis=0)
    span = mesh.vertices.max(axis=0) - lo
    height = params.height or float(span[1])
    length = params.length or float(span[0])

    vpts = dof_points(mesh, params.velocity_order) - lo
    ppts = np.asarray(mesh.vertices) - lo
    ux = np.zeros(len(vpts))
    uy = np.zeros(len(vpts))
    p = np.zeros(len(ppts))
    if kind is AnalyticKind.poiseuille:
        y = vpts[:, 1]
        ux = 4.0 * params.u_max * y * (height - y) / height**2
        p = 8.0 * params.fluid.viscosity * params.u_max * (length - ppts[:, 0]) / height**2
    elif kind is AnalyticKind.uniform:
        ux = np.full(len(vpts), params.u_max)
    else:
        ux = params.shear * vpts[:, 1]

    scales = _scales(params)
    velocity = scales[:, None, None] * np.stack([ux, uy])[None]
    pressure = scales[:, None] * p[None]
    return SnapshotSet(mesh, velocity, pressure, params.velocity_order)


def poiseuille_wall_drag(params: AnalyticParams, height: float, length: float) -> np.ndarray:
    """Exact per-snapshot viscous drag on one channel wall, 4 mu U L / H."""
    return _scales(params) * 4.0 * params.fluid.viscosity * params.u_max * length / height
