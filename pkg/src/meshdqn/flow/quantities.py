"""Drag and lift from boundary integrals of the Cauchy stress.

The force on the body is the integral of sigma . n over its boundary facets,
where n is the unit normal pointing from the body into the fluid. Each facet
takes the velocity gradient of its single adjacent triangle and the P1
pressure. P1 velocity uses the facet midpoint; P2 velocity uses two Gauss
points.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from meshdqn.errors import PropertyError
from meshdqn.fields.interpolate import shape_gradients
from meshdqn.fields.models import SnapshotSet, triangle_dofs
from meshdqn.flow.models import FluidConstants, PropertyKind, PropertyVector
from meshdqn.mesh.models import BoundaryTag, TriMesh

logger = logging.getLogger(__name__)

_GAUSS_2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


def stress_tensor(grad_u, p, fluid: FluidConstants) -> np.ndarray:
    """sigma = -p I + mu (grad u + grad u^T), broadcasting over leading axes."""
    grad_u = np.asarray(grad_u, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    eye = np.eye(2)
    return -p[..., None, None] * eye + fluid.viscosity * (grad_u + np.swapaxes(grad_u, -1, -2))


def region_mask(mesh: TriMesh, region: Sequence[float] | None) -> np.ndarray | None:
    """Facets whose midpoint lies in the (xmin, ymin, xmax, ymax) box."""
    if region is None:
        return None
    xmin, ymin, xmax, ymax = region
    mid = 0.5 * (mesh.vertices[mesh.facets[:, 0]] + mesh.vertices[mesh.facets[:, 1]])
    return (mid[:, 0] >= xmin) & (mid[:, 0] <= xmax) & (mid[:, 1] >= ymin) & (mid[:, 1] <= ymax)


def _selected_facets(mesh: TriMesh, tag: BoundaryTag, facet_mask: np.ndarray | None) -> np.ndarray:
    chosen = np.array([t is BoundaryTag(tag) for t in mesh.facet_tags], dtype=bool)
    if facet_mask is not None:
        facet_mask = np.asarray(facet_mask, dtype=bool)
        if facet_mask.shape != chosen.shape:
            raise PropertyError(
                f"facet mask has {facet_mask.shape[0]} entries, mesh has {chosen.shape[0]} facets"
            )
        chosen &= facet_mask
    facets = np.flatnonzero(chosen)
    if len(facets) == 0:
        raise PropertyError(f"no boundary facets tagged {BoundaryTag(tag).value} to integrate over")
    return facets


def compute_force_components(
    snaps: SnapshotSet,
    tag: BoundaryTag,
    fluid: FluidConstants,
    facet_mask: np.ndarray | None = None,
) -> np.ndarray:
    """(S, 2) force exerted by the fluid on the `tag` boundary, per snapshot."""
    mesh = snaps.mesh
    facets = _selected_facets(mesh, tag, facet_mask)
    edges = mesh.facet_edges[facets]
    if np.any(edges < 0):
        raise PropertyError("boundary facet has no adjacent triangle")
    owners = mesh.edge_triangles[edges]
    if np.any(owners[:, 1] >= 0) or np.any(owners[:, 0] < 0):
        raise PropertyError("boundary facet does not have exactly one adjacent triangle")
    tri = owners[:, 0]

    a = mesh.vertices[mesh.facets[facets, 0]]
    b = mesh.vertices[mesh.facets[facets, 1]]
    tangent = b - a
    length = np.hypot(tangent[:, 0], tangent[:, 1])
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / length[:, None]
    inward = mesh.centroids[tri] - 0.5 * (a + b)
    flip = np.einsum("ij,ij->i", normal, inward) < 0
    normal[flip] *= -1.0

    order = snaps.velocity_order
    s_points = np.array([0.5]) if order == 1 else np.array(_GAUSS_2)
    weights = np.full(len(s_points), 1.0 / len(s_points))
    x = a[:, None, :] + s_points[None, :, None] * tangent[:, None, :]  # (M, Q, 2)

    origin, inv = mesh.barycentric_maps
    l12 = np.einsum("mij,mqj->mqi", inv[tri], x - origin[tri][:, None, :])
    lam = np.concatenate([1.0 - l12.sum(axis=-1, keepdims=True), l12], axis=-1)

    dphi = shape_gradients(mesh.barycentric_gradients[tri][:, None], lam, order)  # (M,Q,nb,2)
    vdofs = triangle_dofs(mesh, order)[tri]
    grad_u = np.einsum("sdmk,mqkj->smqdj", snaps.velocity[:, :, vdofs], dphi)
    p = np.einsum("smk,mqk->smq", snaps.pressure[:, mesh.triangles[tri]], lam)

    sigma = stress_tensor(grad_u, p, fluid)
    traction = np.einsum("smqij,mj->smqi", sigma, normal)
    return np.einsum("smqi,q,m->si", traction, weights, length)


def compute_property(
    snaps: SnapshotSet,
    mesh: TriMesh,
    tag: BoundaryTag,
    direction: Sequence[float],
    fluid: FluidConstants,
    facet_mask: np.ndarray | None = None,
    kind: PropertyKind | None = None,
) -> PropertyVector:
    """Force component along unit `direction`: e_x gives drag, e_y gives lift."""
    if snaps.mesh is not mesh and snaps.mesh != mesh:
        raise PropertyError("snapshots do not live on the given mesh")
    d = np.asarray(direction, dtype=np.float64).reshape(-1)
    if d.shape != (2,) or abs(float(np.hypot(d[0], d[1])) - 1.0) > 1e-9:
        raise PropertyError(f"direction must be a 2D unit vector, got {list(d)}")
    if kind is None:
        kind = PropertyKind.lift if abs(d[1]) > abs(d[0]) else PropertyKind.drag
    forces = compute_force_components(snaps, tag, fluid, facet_mask)
    return PropertyVector(forces @ d, kind)


def properties_from_forces(forces: np.ndarray) -> dict[PropertyKind, PropertyVector]:
    return {
        PropertyKind.drag: PropertyVector(forces[:, 0], PropertyKind.drag),
        PropertyKind.lift: PropertyVector(forces[:, 1], PropertyKind.lift),
    }


def reynolds_number(fluid: FluidConstants, velocity: float, length: float) -> float:
    return fluid.density * velocity * length / fluid.viscosity
