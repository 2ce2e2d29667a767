from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from meshdqn.errors import BrokenMeshError
from meshdqn.mesh.models import TriMesh

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHING_ITERATIONS = 50


def averaging_operator(mesh: TriMesh) -> sp.csr_matrix:
    """Row-normalised 1-ring adjacency: (W @ X)[i] is the mean of i's neighbours."""
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    n = mesh.n_vertices
    adjacency = sp.coo_matrix(
        (np.ones(2 * len(i)), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n)
    ).tocsr()
    degree = np.asarray(adjacency.sum(axis=1)).reshape(-1)
    inv = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)
    return sp.diags(inv) @ adjacency


def smooth(mesh: TriMesh, iterations: int = DEFAULT_SMOOTHING_ITERATIONS) -> TriMesh:
    """
    Jacobi Laplacian smoothing: every Interior vertex moves to the mean of its
    neighbours, all at once, `iterations` times. Boundary coordinates are
    never touched.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    if iterations == 0:
        return mesh

    weights = averaging_operator(mesh)
    movable = mesh.interior_mask[:, None]
    xy = np.array(mesh.vertices)
    for _ in range(iterations):
        xy = np.where(movable, weights @ xy, xy)

    smoothed = mesh.with_vertices(xy)
    worst = float(smoothed.areas.min())
    if worst <= mesh.area_epsilon:
        logger.info("Smoothing inverted the mesh (min area %.3e)", worst)
        raise BrokenMeshError(f"smoothing produced a triangle with area {worst:.3e}")
    return smoothed
