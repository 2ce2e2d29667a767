from __future__ import annotations

import numpy as np
import pytest

from meshdqn.errors import NonRemovableVertexError
from meshdqn.mesh.edit import remove_vertex, star_polygon
from meshdqn.mesh.generate import gen_channel_mesh, obstacle_channel_mesh
from meshdqn.mesh.smoothing import smooth


def test_remove_centre_of_square(square_mesh):
    out = remove_vertex(square_mesh, 4)
    assert (out.n_vertices, out.n_edges, out.n_triangles) == (4, 5, 2)
    assert out.vertex_ids.tolist() == [1, 2, 3, 4]
    assert out.errors() == []


@pytest.mark.parametrize("fixture", ["square_mesh", "channel_mesh", "obstacle_mesh"])
def test_every_interior_vertex_is_removable(fixture, request):
    mesh = request.getfixturevalue(fixture)
    V, E, F = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
    for v in np.flatnonzero(mesh.interior_mask):
        out = remove_vertex(mesh, int(v))
        assert (out.n_vertices, out.n_edges, out.n_triangles) == (V - 1, E - 3, F - 2)
        assert out.errors() == []
        assert mesh.vertex_ids[v] not in out.vertex_ids


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize(
    "make_mesh",
    [lambda: gen_channel_mesh(8, 8), obstacle_channel_mesh],
    ids=["channel", "obstacle"],
)
def test_random_sequential_removals_stay_valid(make_mesh, seed):
    mesh = make_mesh()
    rng = np.random.default_rng(seed)
    for _ in range(40):
        v = int(rng.choice(np.flatnonzero(mesh.interior_mask)))
        removed_id = mesh.vertex_ids[v]
        mesh = smooth(remove_vertex(mesh, v), 50)
        assert mesh.errors() == []
        assert removed_id not in mesh.vertex_ids


def test_removal_keeps_boundary(obstacle_mesh):
    v = int(np.flatnonzero(obstacle_mesh.interior_mask)[0])
    out = remove_vertex(obstacle_mesh, v)
    assert out.facet_tags == obstacle_mesh.facet_tags
    kept = np.delete(np.arange(obstacle_mesh.n_vertices), v)
    np.testing.assert_array_equal(out.vertices, obstacle_mesh.vertices[kept])


def test_boundary_vertex_is_not_removable(square_mesh):
    with pytest.raises(NonRemovableVertexError, match="inlet"):
        remove_vertex(square_mesh, 0)


def test_out_of_range_vertex(square_mesh):
    with pytest.raises(NonRemovableVertexError, match="out of range"):
        remove_vertex(square_mesh, 5)


def test_star_polygon_is_counter_clockwise(square_mesh):
    ring = star_polygon(square_mesh, 4)
    assert sorted(ring) == [0, 1, 2, 3]
    pts = square_mesh.vertices[ring]
    x, y = pts[:, 0], pts[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


def test_repeated_removal_then_smoothing_stays_valid(obstacle_mesh):
    mesh = obstacle_mesh
    corner_cells = [(0.25, 0.25), (3.75, 2.75), (0.25, 2.75), (3.75, 0.25)]
    for point in corner_cells:
        v = int(np.argmin(np.linalg.norm(mesh.vertices - np.array(point), axis=1)))
        assert mesh.interior_mask[v]
        mesh = smooth(remove_vertex(mesh, v), 50)
        assert mesh.errors() == []
    assert mesh.n_vertices == obstacle_mesh.n_vertices - 4
