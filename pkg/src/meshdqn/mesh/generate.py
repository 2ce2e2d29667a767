from __future__ import annotations

import logging

import numpy as np

from meshdqn.mesh.models import BoundaryTag, TriMesh

logger = logging.getLogger(__name__)

Obstacle = tuple[int, int, int, int]


def _check_obstacle(nx: int, ny: int, obstacle: Obstacle) -> None:
    i0, j0, i1, j1 = obstacle
    if not (1 <= i0 < i1 <= nx - 2 and 1 <= j0 < j1 <= ny - 2):
        raise ValueError(
            f"obstacle cells {obstacle} must lie strictly inside the {nx - 1}x{ny - 1} cell grid"
        )


def gen_channel_mesh(
    nx: int,
    ny: int,
    length: float = 1.0,
    height: float = 1.0,
    obstacle: Obstacle | None = None,
) -> TriMesh:
    """
    Structured "crossed" channel mesh on [0, length] x [0, height].

    `nx`, `ny` are grid points per direction. Every grid cell gets a centre
    vertex and four triangles, so the plain channel has
    nx*ny + (nx-1)*(ny-1) vertices and 4*(nx-1)*(ny-1) triangles.

    Boundary facets: Inlet at x=0, Outlet at x=length, Wall at y=0 and
    y=height. An optional `obstacle=(i0, j0, i1, j1)` removes the cells
    i0 <= i < i1, j0 <= j < j1 and tags the hole's perimeter Airfoil.
    """
    if nx < 2 or ny < 2:
        raise ValueError(f"gen_channel_mesh needs nx, ny >= 2, got ({nx}, {ny})")
    if length <= 0 or height <= 0:
        raise ValueError("length and height must be positive")
    if obstacle is not None:
        _check_obstacle(nx, ny, obstacle)

    xs = np.linspace(0.0, length, nx)
    ys = np.linspace(0.0, height, ny)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    cx, cy = np.meshgrid(0.5 * (xs[:-1] + xs[1:]), 0.5 * (ys[:-1] + ys[1:]))
    centres = np.column_stack([cx.ravel(), cy.ravel()])
    points = np.vstack([grid, centres])

    def g(i: int, j: int) -> int:
        return j * nx + i

    def c(i: int, j: int) -> int:
        return nx * ny + j * (nx - 1) + i

    def in_obstacle(i: int, j: int) -> bool:
        if obstacle is None:
            return False
        i0, j0, i1, j1 = obstacle
        return i0 <= i < i1 and j0 <= j < j1

    triangles: list[tuple[int, int, int]] = []
    used = np.zeros(len(points), dtype=bool)
    for j in range(ny - 1):
        for i in range(nx - 1):
            if in_obstacle(i, j):
                continue
            p00, p10, p11, p01, m = g(i, j), g(i + 1, j), g(i + 1, j + 1), g(i, j + 1), c(i, j)
            triangles += [(p00, p10, m), (p10, p11, m), (p11, p01, m), (p01, p00, m)]
            used[[p00, p10, p11, p01, m]] = True

    facets: list[tuple[int, int]] = []
    tags: list[BoundaryTag] = []

    def add(a: int, b: int, tag: BoundaryTag) -> None:
        facets.append((a, b))
        tags.append(tag)

    # Outer loop counter-clockwise, holes clockwise.
    for i in range(nx - 1):
        add(g(i, 0), g(i + 1, 0), BoundaryTag.WALL)
    for j in range(ny - 1):
        add(g(nx - 1, j), g(nx - 1, j + 1), BoundaryTag.OUTLET)
    for i in range(nx - 1, 0, -1):
        add(g(i, ny - 1), g(i - 1, ny - 1), BoundaryTag.WALL)
    for j in range(ny - 1, 0, -1):
        add(g(0, j), g(0, j - 1), BoundaryTag.INLET)
    if obstacle is not None:
        i0, j0, i1, j1 = obstacle
        for j in range(j0, j1):
            add(g(i0, j), g(i0, j + 1), BoundaryTag.AIRFOIL)
        for i in range(i0, i1):
            add(g(i, j1), g(i + 1, j1), BoundaryTag.AIRFOIL)
        for j in range(j1, j0, -1):
            add(g(i1, j), g(i1, j - 1), BoundaryTag.AIRFOIL)
        for i in range(i1, i0, -1):
            add(g(i, j0), g(i - 1, j0), BoundaryTag.AIRFOIL)

    remap = np.cumsum(used) - 1
    mesh = TriMesh(
        vertices=points[used],
        triangles=remap[np.array(triangles, dtype=np.int64)],
        facets=remap[np.array(facets, dtype=np.int64)],
        facet_tags=tuple(tags),
    )
    logger.debug("Generated channel %s (obstacle=%s)", mesh, obstacle)
    return mesh


def obstacle_channel_mesh(nx: int = 21, ny: int = 13) -> TriMesh:
    """Channel with a centred square-ish obstacle, about 500 vertices at the defaults."""
    i0 = (nx - 1) // 3
    j0 = (ny - 1) // 3
    i1 = i0 + max(1, (nx - 1) // 6)
    j1 = (ny - 1) - j0
    length = 2.0 * (nx - 1) / (ny - 1)
    return gen_channel_mesh(nx, ny, length=length, height=2.0, obstacle=(i0, j0, i1, j1))
