from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from meshdqn.errors import InvalidMeshError


class BoundaryTag(str, Enum):
    AIRFOIL = "airfoil"
    INLET = "inlet"
    OUTLET = "outlet"
    WALL = "wall"
    INTERIOR = "interior"


# A vertex shared by facets of different tags takes the first tag in this order.
_TAG_PRECEDENCE = (BoundaryTag.AIRFOIL, BoundaryTag.INLET, BoundaryTag.OUTLET, BoundaryTag.WALL)

DEFAULT_PHYSICAL_TAGS: dict[int, BoundaryTag] = {
    1: BoundaryTag.AIRFOIL,
    2: BoundaryTag.INLET,
    3: BoundaryTag.OUTLET,
    4: BoundaryTag.WALL,
}

AREA_EPSILON_FACTOR = 1e-12
LOC_EPSILON_FACTOR = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * (
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    )


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    Immutable 2D triangular mesh.

    Triangles are counter-clockwise vertex-index triples. Boundary facets are
    vertex-index pairs, each carrying a BoundaryTag. `vertex_ids` are stable
    identifiers (MSH node tags) that survive vertex removal, while array
    indices shift. Adjacency is derived lazily from the triangle list.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    facets: np.ndarray
    facet_tags: tuple[BoundaryTag, ...]
    vertex_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 2)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        facets = np.array(self.facets, dtype=np.int64).reshape(-1, 2)
        if self.vertex_ids is None:
            vertex_ids = np.arange(1, len(vertices) + 1, dtype=np.int64)
        else:
            vertex_ids = np.array(self.vertex_ids, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "vertices", _frozen(vertices))
        object.__setattr__(self, "triangles", _frozen(triangles))
        object.__setattr__(self, "facets", _frozen(facets))
        object.__setattr__(self, "vertex_ids", _frozen(vertex_ids))
        object.__setattr__(self, "facet_tags", tuple(BoundaryTag(t) for t in self.facet_tags))

    # ------------------------------------------------------------------
    # Value semantics
    # ------------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TriMesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.facets, other.facets)
            and self.facet_tags == other.facet_tags
            and np.array_equal(self.vertex_ids, other.vertex_ids)
        )

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        return (
            f"TriMesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_triangles}, "
            f"facets={len(self.facets)})"
        )

    # ------------------------------------------------------------------
    # Counts
    # ------------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    # ------------------------------------------------------------------
    # Derived topology
    # ------------------------------------------------------------------

    @cached_property
    def _edge_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = self.triangles
        local = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        local = np.sort(local, axis=1)
        edges, inverse, counts = np.unique(
            local, axis=0, return_inverse=True, return_counts=True
        )
        inverse = inverse.reshape(-1)
        triangle_edges = inverse.reshape(3, -1).T.copy()
        return edges.reshape(-1, 2), triangle_edges, counts

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges (i < j), lexicographically sorted."""
        return _frozen(self._edge_table[0])

    @cached_property
    def triangle_edges(self) -> np.ndarray:
        """Per triangle, the edge indices of local edges (0,1), (1,2), (2,0)."""
        return _frozen(self._edge_table[1])

    @cached_property
    def edge_triangle_counts(self) -> np.ndarray:
        return _frozen(self._edge_table[2])

    @cached_property
    def edge_triangles(self) -> np.ndarray:
        """(E, 2) incident triangles per edge, -1 where an edge has one triangle."""
        out = np.full((self.n_edges, 2), -1, dtype=np.int64)
        for t in range(self.n_triangles):
            for e in self.triangle_edges[t]:
                slot = 0 if out[e, 0] < 0 else 1
                out[e, slot] = t
        return _frozen(out)

    @cached_property
    def triangle_neighbors(self) -> np.ndarray:
        """(F, 3) neighbour across the edge opposite local vertex k, -1 on the boundary."""
        opposite_edge = self.triangle_edges[:, [1, 2, 0]]
        et = self.edge_triangles
        out = np.empty_like(opposite_edge)
        for k in range(3):
            pair = et[opposite_edge[:, k]]
            own = np.arange(self.n_triangles)
            out[:, k] = np.where(pair[:, 0] == own, pair[:, 1], pair[:, 0])
        return _frozen(out)

    @cached_property
    def vertex_triangles(self) -> tuple[np.ndarray, ...]:
        buckets: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for t, tri in enumerate(self.triangles):
            for v in tri:
                buckets[v].append(t)
        return tuple(np.array(b, dtype=np.int64) for b in buckets)

    @cached_property
    def vertex_neighbors(self) -> tuple[np.ndarray, ...]:
        buckets: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for i, j in self.edges:
            buckets[i].add(int(j))
            buckets[j].add(int(i))
        return tuple(np.array(sorted(b), dtype=np.int64) for b in buckets)

    @cached_property
    def facet_edges(self) -> np.ndarray:
        """Edge index of every boundary facet, -1 if the facet is not a mesh edge."""
        lookup = {(int(i), int(j)): e for e, (i, j) in enumerate(self.edges)}
        out = np.array(
            [lookup.get((int(min(a, b)), int(max(a, b))), -1) for a, b in self.facets],
            dtype=np.int64,
        )
        return _frozen(out)

    @cached_property
    def vertex_tags(self) -> tuple[BoundaryTag, ...]:
        seen: list[set[BoundaryTag]] = [set() for _ in range(self.n_vertices)]
        for (a, b), tag in zip(self.facets, self.facet_tags):
            seen[a].add(tag)
            seen[b].add(tag)
        tags = []
        for s in seen:
            tag = next((t for t in _TAG_PRECEDENCE if t in s), BoundaryTag.INTERIOR)
            tags.append(tag)
        return tuple(tags)

    @cached_property
    def interior_mask(self) -> np.ndarray:
        return _frozen(np.array([t is BoundaryTag.INTERIOR for t in self.vertex_tags]))

    def vertices_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        return np.array(
            [i for i, t in enumerate(self.vertex_tags) if t is tag], dtype=np.int64
        )

    def facets_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        return np.array(
            [i for i, t in enumerate(self.facet_tags) if t is tag], dtype=np.int64
        )

    # ------------------------------------------------------------------
    # Derived geometry
    # ------------------------------------------------------------------

    @cached_property
    def areas(self) -> np.ndarray:
        return _frozen(signed_areas(self.vertices, self.triangles))

    @cached_property
    def bbox_area(self) -> float:
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(span[0] * span[1])

    @cached_property
    def bbox_diagonal(self) -> float:
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.hypot(span[0], span[1]))

    @property
    def area_epsilon(self) -> float:
        return AREA_EPSILON_FACTOR * self.bbox_area

    @property
    def loc_epsilon(self) -> float:
        return LOC_EPSILON_FACTOR * self.bbox_diagonal

    @cached_property
    def mean_edge_length(self) -> float:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return float(np.mean(np.hypot(d[:, 0], d[:, 1])))

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        return _frozen(0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]]))

    @cached_property
    def centroids(self) -> np.ndarray:
        return _frozen(self.vertices[self.triangles].mean(axis=1))

    @cached_property
    def barycentric_maps(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Per triangle, (origin, inverse Jacobian) such that
        (l1, l2) = inv @ (p - origin) and l0 = 1 - l1 - l2.
        """
        p = self.vertices[self.triangles]
        origin = p[:, 0, :]
        jac = np.stack([p[:, 1, :] - origin, p[:, 2, :] - origin], axis=-1)
        return _frozen(origin.copy()), _frozen(np.linalg.inv(jac))

    @cached_property
    def barycentric_gradients(self) -> np.ndarray:
        """(F, 3, 2) constant gradients of the three barycentric coordinates."""
        _, inv = self.barycentric_maps
        g1 = inv[:, 0, :]
        g2 = inv[:, 1, :]
        return _frozen(np.stack([-(g1 + g2), g1, g2], axis=1))

    @cached_property
    def heights(self) -> np.ndarray:
        """(F, 3) distance from local vertex k to its opposite edge."""
        p = self.vertices[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for k in range(3):
            a = p[:, (k + 1) % 3]
            b = p[:, (k + 2) % 3]
            length = np.hypot(*(b - a).T)
            out[:, k] = 2.0 * np.abs(self.areas) / length
        return _frozen(out)

    @cached_property
    def kdtree(self) -> cKDTree:
        return cKDTree(self.vertices)

    def barycentrics(self, triangle: int, point) -> np.ndarray:
        origin, inv = self.barycentric_maps
        l12 = inv[triangle] @ (np.asarray(point, dtype=np.float64) - origin[triangle])
        return np.array([1.0 - l12[0] - l12[1], l12[0], l12[1]])

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def errors(self) -> list[str]:
        return mesh_errors(self)

    def validate(self) -> "TriMesh":
        errors = mesh_errors(self)
        if errors:
            raise InvalidMeshError(errors)
        return self

    def without_vertex(self, v: int, triangles: np.ndarray) -> "TriMesh":
        """Drop vertex `v` and renumber `triangles` (given in the old numbering)."""
        remap = np.arange(self.n_vertices, dtype=np.int64)
        remap[v + 1 :] -= 1
        return TriMesh(
            vertices=np.delete(self.vertices, v, axis=0),
            triangles=remap[triangles],
            facets=remap[self.facets],
            facet_tags=self.facet_tags,
            vertex_ids=np.delete(self.vertex_ids, v),
        )

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        return TriMesh(
            vertices=vertices,
            triangles=self.triangles,
            facets=self.facets,
            facet_tags=self.facet_tags,
            vertex_ids=self.vertex_ids,
        )


def mesh_errors(mesh: TriMesh) -> list[str]:
    errors: list[str] = []
    V = mesh.n_vertices
    if V == 0 or mesh.n_triangles == 0:
        return ["mesh has no vertices or no triangles"]
    if len(mesh.vertex_ids) != V:
        errors.append("vertex_ids length does not match vertex count")
    elif len(np.unique(mesh.vertex_ids)) != V:
        errors.append("vertex_ids are not unique")
    if len(mesh.facet_tags) != len(mesh.facets):
        errors.append("facet_tags length does not match facet count")
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= V:
        return errors + ["triangle vertex index out of range"]
    if len(mesh.facets) and (mesh.facets.min() < 0 or mesh.facets.max() >= V):
        return errors + ["facet vertex index out of range"]
    if any(t is BoundaryTag.INTERIOR for t in mesh.facet_tags):
        errors.append("boundary facet tagged interior")

    bad = np.flatnonzero(mesh.areas <= 0.0)
    for t in bad[:10]:
        errors.append(f"triangle {int(t)} has non-positive signed area {mesh.areas[t]:.3e}")

    counts = mesh.edge_triangle_counts
    for e in np.flatnonzero(counts > 2)[:10]:
        i, j = mesh.edges[e]
        errors.append(f"edge ({int(i)}, {int(j)}) lies on {int(counts[e])} triangles")

    facet_keys = [(int(min(a, b)), int(max(a, b))) for a, b in mesh.facets]
    if len(set(facet_keys)) != len(facet_keys):
        errors.append("duplicate boundary facets")
    single = {(int(i), int(j)) for (i, j) in mesh.edges[counts == 1]}
    for key in facet_keys:
        if key not in single:
            errors.append(f"boundary facet {key} does not lie on exactly one triangle")
    for key in sorted(single - set(facet_keys))[:10]:
        errors.append(f"edge {key} lies on one triangle but is not a boundary facet")

    used = np.zeros(V, dtype=bool)
    used[mesh.triangles.reshape(-1)] = True
    for v in np.flatnonzero(~used)[:10]:
        errors.append(f"vertex {int(v)} belongs to no triangle")
    return errors
