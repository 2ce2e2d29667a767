"""Point location on a TriMesh.

A point belongs to a triangle when its distance outside every edge is at most
`mesh.loc_epsilon`. Among several containing triangles the lowest index wins,
so the walk and the exhaustive scan always agree.
"""

from __future__ import annotations

import logging

import numpy as np

from meshdqn.errors import PointOutsideError
from meshdqn.fields.models import PointLocation
from meshdqn.mesh.models import TriMesh

logger = logging.getLogger(__name__)

SNAP_TOLERANCE_FACTOR = 1e-6

# Upper bound on points x triangles evaluated per vectorised chunk.
_CHUNK_CELLS = 2_000_000


def _barycentric_rows(mesh: TriMesh, triangles: np.ndarray, points: np.ndarray) -> np.ndarray:
    origin, inv = mesh.barycentric_maps
    l12 = np.einsum("...ij,...j->...i", inv[triangles], points - origin[triangles])
    return np.concatenate([1.0 - l12.sum(axis=-1, keepdims=True), l12], axis=-1)


def _inside(mesh: TriMesh, triangles: np.ndarray, lam: np.ndarray) -> np.ndarray:
    return np.all(lam * mesh.heights[triangles] >= -mesh.loc_epsilon, axis=-1)


def _location(triangle: int, lam: np.ndarray) -> PointLocation:
    return PointLocation(int(triangle), (float(lam[0]), float(lam[1]), float(lam[2])))


def locate_exhaustive(mesh: TriMesh, point) -> PointLocation:
    """Scan every triangle; the lowest-index containing triangle wins."""
    p = np.asarray(point, dtype=np.float64)
    everything = np.arange(mesh.n_triangles)
    lam = _barycentric_rows(mesh, everything, np.broadcast_to(p, (mesh.n_triangles, 2)))
    hits = np.flatnonzero(_inside(mesh, everything, lam))
    if len(hits) == 0:
        raise PointOutsideError(p)
    return _location(hits[0], lam[hits[0]])


def _walk(mesh: TriMesh, p: np.ndarray) -> int | None:
    _, nearest = mesh.kdtree.query(p)
    t = int(mesh.vertex_triangles[int(nearest)][0])
    visited: set[int] = set()
    while t not in visited:
        visited.add(t)
        lam = mesh.barycentrics(t, p)
        slack = lam * mesh.heights[t]
        if np.all(slack >= -mesh.loc_epsilon):
            return t
        nxt = int(mesh.triangle_neighbors[t, int(np.argmin(slack))])
        if nxt < 0:
            return None
        t = nxt
    return None


def locate(mesh: TriMesh, point) -> PointLocation:
    """
    Walk from the triangle at the nearest vertex towards `point`, then settle
    ties among the triangles around the one found. Falls back to an exhaustive
    scan when the walk leaves the mesh or cycles.
    """
    p = np.asarray(point, dtype=np.float64)
    found = _walk(mesh, p)
    if found is None:
        return locate_exhaustive(mesh, p)
    around = np.unique(np.concatenate([mesh.vertex_triangles[v] for v in mesh.triangles[found]]))
    lam = _barycentric_rows(mesh, around, np.broadcast_to(p, (len(around), 2)))
    inside = np.flatnonzero(_inside(mesh, around, lam))
    k = inside[0]
    return _location(around[k], lam[k])


def locate_many(mesh: TriMesh, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Locate many points at once.

    Returns (triangles, barycentrics) with shapes (P,) and (P, 3); points that
    lie outside the mesh get triangle -1 and NaN barycentrics.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(points)
    triangles = np.full(n, -1, dtype=np.int64)
    lam_out = np.full((n, 3), np.nan)
    everything = np.arange(mesh.n_triangles)
    chunk = max(1, _CHUNK_CELLS // max(1, mesh.n_triangles))
    for start in range(0, n, chunk):
        block = points[start : start + chunk]
        lam = _barycentric_rows(mesh, everything[None, :], block[:, None, :])
        inside = _inside(mesh, everything[None, :], lam)
        hit = inside.any(axis=1)
        first = np.argmax(inside, axis=1)
        rows = np.flatnonzero(hit)
        triangles[start + rows] = first[rows]
        lam_out[start + rows] = lam[rows, first[rows]]
    return triangles, lam_out


def nearest_boundary_point(mesh: TriMesh, point) -> tuple[np.ndarray, float]:
    p = np.asarray(point, dtype=np.float64)
    a = mesh.vertices[mesh.facets[:, 0]]
    b = mesh.vertices[mesh.facets[:, 1]]
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    dist = np.hypot(*(proj - p).T)
    k = int(np.argmin(dist))
    return proj[k], float(dist[k])


def snap_tolerance(mesh: TriMesh) -> float:
    return SNAP_TOLERANCE_FACTOR * mesh.bbox_diagonal


def locate_or_snap(mesh: TriMesh, point, tolerance: float | None = None) -> PointLocation:
    """Locate `point`, snapping it onto the nearest boundary facet if it lies just outside."""
    try:
        return locate(mesh, point)
    except PointOutsideError:
        tol = snap_tolerance(mesh) if tolerance is None else tolerance
        projected, dist = nearest_boundary_point(mesh, point)
        if dist > tol:
            raise
        logger.warning(
            "Snapped point (%.17g, %.17g) onto the boundary (distance %.3e)",
            point[0],
            point[1],
            dist,
        )
        return locate(mesh, projected)
