from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from meshdqn.env.models import StateGraph
from meshdqn.errors import InsufficientVerticesError
from meshdqn.fields.models import SnapshotSet
from meshdqn.mesh.models import BoundaryTag, TriMesh


def anchor_vertices(mesh: TriMesh, tag: BoundaryTag) -> np.ndarray:
    """Endpoints of every facet tagged `tag`."""
    facets = mesh.facets_with_tag(BoundaryTag(tag))
    return np.unique(mesh.facets[facets].reshape(-1))


def ranked_interior(mesh: TriMesh, anchor_tag: BoundaryTag = BoundaryTag.AIRFOIL) -> np.ndarray:
    """Interior vertices by distance to the nearest anchor vertex, ties by index."""
    anchors = anchor_vertices(mesh, anchor_tag)
    if len(anchors) == 0:
        raise InsufficientVerticesError(
            f"mesh has no {BoundaryTag(anchor_tag).value} vertices to measure the window from"
        )
    interior = np.flatnonzero(mesh.interior_mask)
    if len(interior) == 0:
        return interior
    dist, _ = cKDTree(mesh.vertices[anchors]).query(mesh.vertices[interior])
    return interior[np.lexsort((interior, dist))]


def window_capacity(mesh: TriMesh, size: int) -> int:
    """Largest offset for which a window of `size` still fits."""
    return int(mesh.interior_mask.sum()) - size


def node_features(snaps: SnapshotSet, window: np.ndarray) -> np.ndarray:
    """[x, y, ux_1, uy_1, ..., ux_S, uy_S, p_1, ..., p_S] per window vertex."""
    mesh = snaps.mesh
    vel = snaps.vertex_velocity[:, :, window]  # (S, 2, N)
    vel = np.transpose(vel, (2, 0, 1)).reshape(len(window), -1)
    pressure = snaps.pressure[:, window].T
    return np.hstack([mesh.vertices[window], vel, pressure])


def induced_edges(mesh: TriMesh, window: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mesh edges with both ends in the window, as local (2, E) pairs in both directions."""
    local = np.full(mesh.n_vertices, -1, dtype=np.int64)
    local[window] = np.arange(len(window))
    a, b = local[mesh.edges[:, 0]], local[mesh.edges[:, 1]]
    keep = (a >= 0) & (b >= 0)
    edges = mesh.edges[keep]
    lengths = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    a, b = a[keep], b[keep]
    edge_index = np.stack([np.concatenate([a, b]), np.concatenate([b, a])])
    return edge_index, np.concatenate([lengths, lengths])


def build_state(
    mesh: TriMesh,
    snaps: SnapshotSet,
    size: int,
    offset: int = 0,
    anchor_tag: BoundaryTag = BoundaryTag.AIRFOIL,
) -> StateGraph:
    """
    The window of interior vertices ranked [offset, offset + size) by distance
    to the anchor boundary, with their node features and induced edges.
    """
    if size < 1 or offset < 0:
        raise ValueError(f"window size must be >= 1 and offset >= 0, got {size}, {offset}")
    if snaps.mesh is not mesh and snaps.mesh != mesh:
        raise ValueError("snapshots do not live on the given mesh")
    ranked = ranked_interior(mesh, anchor_tag)
    if len(ranked) < offset + size:
        raise InsufficientVerticesError(
            f"mesh has {len(ranked)} interior vertices, window needs {offset + size}"
        )
    window = ranked[offset : offset + size]
    edge_index, edge_attr = induced_edges(mesh, window)
    return StateGraph(
        window=window,
        window_ids=mesh.vertex_ids[window],
        features=node_features(snaps, window),
        edge_index=edge_index,
        edge_attr=edge_attr,
        offset=offset,
    )
