from __future__ import annotations

import logging

import numpy as np

from meshdqn.errors import BrokenInterpolationError, PointOutsideError
from meshdqn.fields.locate import locate, locate_or_snap
from meshdqn.fields.models import ScalarField, SnapshotSet, dof_points, triangle_dofs
from meshdqn.mesh.models import TriMesh

logger = logging.getLogger(__name__)


def shape_functions(lam: np.ndarray, order: int) -> np.ndarray:
    """
    Lagrange basis at barycentric coordinates `lam` (..., 3).

    Order 1: the barycentrics. Order 2: vertex functions l_i (2 l_i - 1),
    then edge functions 4 l_0 l_1, 4 l_1 l_2, 4 l_2 l_0.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if order == 1:
        return lam
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    return np.stack(
        [
            l0 * (2.0 * l0 - 1.0),
            l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l0 * l1,
            4.0 * l1 * l2,
            4.0 * l2 * l0,
        ],
        axis=-1,
    )


def shape_gradients(lam_grads: np.ndarray, lam: np.ndarray, order: int) -> np.ndarray:
    """
    Basis gradients (..., n_basis, 2) from the barycentric gradients
    `lam_grads` (..., 3, 2) of the triangle and the point's barycentrics
    `lam` (..., 3).
    """
    g = np.asarray(lam_grads, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    g, lam = np.broadcast_arrays(g, lam[..., None])
    lam = lam[..., 0]
    if order == 1:
        return np.array(g)
    g0, g1, g2 = g[..., 0, :], g[..., 1, :], g[..., 2, :]
    l0, l1, l2 = lam[..., 0:1], lam[..., 1:2], lam[..., 2:3]
    return np.stack(
        [
            (4.0 * l0 - 1.0) * g0,
            (4.0 * l1 - 1.0) * g1,
            (4.0 * l2 - 1.0) * g2,
            4.0 * (l1 * g0 + l0 * g1),
            4.0 * (l2 * g1 + l1 * g2),
            4.0 * (l0 * g2 + l2 * g0),
        ],
        axis=-2,
    )


def evaluate(field: ScalarField, point) -> float:
    loc = locate(field.mesh, point)
    dofs = triangle_dofs(field.mesh, field.order)[loc.triangle]
    basis = shape_functions(loc.weights, field.order)
    return float(field.values[dofs] @ basis)


def _locate_all(mesh: TriMesh, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # DOF points are walked to one by one. The walk touches a handful of
    # triangles per point where a batch scan touches all of them.
    triangles = np.empty(len(points), dtype=np.int64)
    lam = np.empty((len(points), 3))
    for k in range(len(points)):
        try:
            loc = locate_or_snap(mesh, points[k])
        except PointOutsideError as exc:
            raise BrokenInterpolationError(
                f"DOF point ({points[k, 0]:.6g}, {points[k, 1]:.6g}) lies outside the source mesh"
            ) from exc
        triangles[k] = loc.triangle
        lam[k] = loc.weights
    return triangles, lam


def evaluate_many(mesh: TriMesh, values: np.ndarray, order: int, points: np.ndarray) -> np.ndarray:
    """
    Evaluate one or more FE functions sharing `mesh` and `order` at `points`.
    `values` is (..., n_dofs); the result is (..., P).
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    triangles, lam = _locate_all(mesh, points)
    dofs = triangle_dofs(mesh, order)[triangles]
    basis = shape_functions(lam, order)
    return np.einsum("...pk,pk->...p", np.asarray(values)[..., dofs], basis)


def interpolate(src: SnapshotSet, dst_mesh: TriMesh) -> SnapshotSet:
    """
    Nodal interpolation of every snapshot onto `dst_mesh`: velocity at the
    destination's DOF points with the source's order, pressure (P1) at the
    destination vertices.

    Raises BrokenInterpolationError when a DOF point falls outside the source
    mesh beyond the snapping tolerance.
    """
    order = src.velocity_order
    points = dof_points(dst_mesh, order)
    triangles, lam = _locate_all(src.mesh, points)

    vdofs = triangle_dofs(src.mesh, order)[triangles]
    vbasis = shape_functions(lam, order)
    velocity = np.einsum("sdpk,pk->sdp", src.velocity[:, :, vdofs], vbasis)

    nv = dst_mesh.n_vertices
    pdofs = src.mesh.triangles[triangles[:nv]]
    pressure = np.einsum("spk,pk->sp", src.pressure[:, pdofs], lam[:nv])
    return SnapshotSet(dst_mesh, velocity, pressure, order)
