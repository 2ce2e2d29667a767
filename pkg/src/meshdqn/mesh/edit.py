"""Interior vertex removal with cavity retriangulation.

The star polygon left by the removed vertex is triangulated by ear clipping
and then improved with Lawson edge flips restricted to the new diagonals, so
the cavity boundary is kept as a constraint.
"""

from __future__ import annotations

import logging

import numpy as np

from meshdqn.errors import BrokenMeshError, NonRemovableVertexError
from meshdqn.mesh.models import TriMesh

logger = logging.getLogger(__name__)


def _orient(p: np.ndarray, a: int, b: int, c: int) -> float:
    """Twice the signed area of (a, b, c)."""
    return float(
        (p[b, 0] - p[a, 0]) * (p[c, 1] - p[a, 1]) - (p[b, 1] - p[a, 1]) * (p[c, 0] - p[a, 0])
    )


def _incircle(p: np.ndarray, a: int, b: int, c: int, d: int) -> tuple[float, float]:
    """
    In-circle determinant of d against counter-clockwise (a, b, c), positive
    when d is strictly inside the circumcircle, plus its magnitude scale.
    """
    ad = p[a] - p[d]
    bd = p[b] - p[d]
    cd = p[c] - p[d]
    a2, b2, c2 = ad @ ad, bd @ bd, cd @ cd
    det = (
        a2 * (bd[0] * cd[1] - cd[0] * bd[1])
        + b2 * (cd[0] * ad[1] - ad[0] * cd[1])
        + c2 * (ad[0] * bd[1] - bd[0] * ad[1])
    )
    scale = max(a2, b2, c2) ** 2
    return float(det), float(scale)


def star_polygon(mesh: TriMesh, v: int) -> list[int]:
    """Counter-clockwise link cycle of vertex `v`, starting at its lowest index."""
    following: dict[int, int] = {}
    for t in mesh.vertex_triangles[v]:
        tri = [int(x) for x in mesh.triangles[t]]
        k = tri.index(v)
        a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
        if a in following:
            raise BrokenMeshError(f"vertex {v} has a non-manifold star")
        following[a] = b
    start = min(following)
    ring = [start]
    while True:
        nxt = following.get(ring[-1])
        if nxt is None:
            raise BrokenMeshError(f"star of vertex {v} is not closed")
        if nxt == start:
            break
        ring.append(nxt)
        if len(ring) > len(following):
            raise BrokenMeshError(f"star of vertex {v} is not a single cycle")
    if len(ring) != len(following):
        raise BrokenMeshError(f"star of vertex {v} is not a single cycle")
    return ring


def ear_clip(
    points: np.ndarray, ring: list[int], area_epsilon: float
) -> list[tuple[int, int, int]]:
    """
    Triangulate the simple counter-clockwise polygon `ring` (indices into
    `points`) by repeatedly clipping the first valid ear.
    """
    poly = list(ring)
    tol = 2.0 * area_epsilon
    out: list[tuple[int, int, int]] = []
    while len(poly) > 3:
        n = len(poly)
        for k in range(n):
            a, b, c = poly[k - 1], poly[k], poly[(k + 1) % n]
            if _orient(points, a, b, c) <= tol:
                continue
            blocked = False
            for q in poly:
                if q in (a, b, c):
                    continue
                if (
                    _orient(points, a, b, q) >= -tol
                    and _orient(points, b, c, q) >= -tol
                    and _orient(points, c, a, q) >= -tol
                ):
                    blocked = True
                    break
            if not blocked:
                out.append((a, b, c))
                poly.pop(k)
                break
        else:
            raise BrokenMeshError(f"no ear found in cavity polygon {poly}")
    a, b, c = poly
    if _orient(points, a, b, c) <= tol:
        raise BrokenMeshError(f"degenerate final ear {poly}")
    out.append((a, b, c))
    return out


def delaunay_flips(
    points: np.ndarray, triangles: list[tuple[int, int, int]], area_epsilon: float
) -> list[tuple[int, int, int]]:
    """Lawson flips over the internal diagonals of a triangulated polygon."""
    tris = [list(t) for t in triangles]
    tol = 2.0 * area_epsilon
    max_rounds = 4 * len(tris) ** 2 + 8
    for _ in range(max_rounds):
        owner: dict[tuple[int, int], int] = {}
        for t, tri in enumerate(tris):
            for k in range(3):
                owner[(tri[k], tri[(k + 1) % 3])] = t
        flipped = False
        for (a, b), t1 in owner.items():
            t2 = owner.get((b, a))
            if t2 is None or t1 > t2:
                continue
            c = next(x for x in tris[t1] if x not in (a, b))
            d = next(x for x in tris[t2] if x not in (a, b))
            det, scale = _incircle(points, a, b, c, d)
            if det <= 1e-10 * scale:
                continue
            if _orient(points, a, d, c) <= tol or _orient(points, d, b, c) <= tol:
                continue
            tris[t1] = [a, d, c]
            tris[t2] = [d, b, c]
            flipped = True
            break
        if not flipped:
            break
    return [(t[0], t[1], t[2]) for t in tris]


def remove_vertex(mesh: TriMesh, v: int) -> TriMesh:
    """
    Remove interior vertex `v`; its k incident triangles are replaced by the
    k - 2 triangles of the retriangulated cavity.

    Raises NonRemovableVertexError for boundary or out-of-range vertices and
    BrokenMeshError when the cavity cannot be filled with positive-area
    triangles.
    """
    if not 0 <= v < mesh.n_vertices:
        raise NonRemovableVertexError(f"vertex {v} out of range [0, {mesh.n_vertices})")
    if not mesh.interior_mask[v]:
        raise NonRemovableVertexError(
            f"vertex {v} is tagged {mesh.vertex_tags[v].value} and cannot be removed"
        )

    ring = star_polygon(mesh, v)
    points = mesh.vertices
    eps = mesh.area_epsilon
    fill = delaunay_flips(points, ear_clip(points, ring, eps), eps)
    new = np.array(fill, dtype=np.int64).reshape(-1, 3)

    areas = 0.5 * np.array([_orient(points, a, b, c) for a, b, c in fill])
    if len(fill) != len(ring) - 2 or np.any(areas <= eps):
        raise BrokenMeshError(f"cavity of vertex {v} retriangulated into degenerate triangles")

    keep = np.ones(mesh.n_triangles, dtype=bool)
    keep[mesh.vertex_triangles[v]] = False
    triangles = np.vstack([mesh.triangles[keep], new])
    logger.debug("Removed vertex %d (id %d), valence %d", v, mesh.vertex_ids[v], len(ring))
    return mesh.without_vertex(v, triangles)
