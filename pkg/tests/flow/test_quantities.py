from __future__ import annotations

import numpy as np
import pytest

from meshdqn.errors import PropertyError
from meshdqn.fields.models import SnapshotSet
from meshdqn.flow.analytic import AnalyticParams, analytic_snapshots, poiseuille_wall_drag
from meshdqn.flow.models import FluidConstants, PropertyKind, PropertyVector
from meshdqn.flow.quantities import (
    compute_force_components,
    compute_property,
    region_mask,
    reynolds_number,
    stress_tensor,
)
from meshdqn.mesh.generate import gen_channel_mesh
from meshdqn.mesh.models import BoundaryTag

FLUID = FluidConstants()
BOTTOM = (-1.0, -1e-9, 10.0, 1e-9)


def _bottom_drag(snaps):
    mask = region_mask(snaps.mesh, BOTTOM)
    return compute_property(snaps, snaps.mesh, BoundaryTag.WALL, (1.0, 0.0), FLUID, mask)


def test_stress_tensor():
    grad_u = np.array([[1.0, 2.0], [3.0, 4.0]])
    sigma = stress_tensor(grad_u, 5.0, FluidConstants(viscosity=0.5))
    np.testing.assert_allclose(sigma, [[-4.0, 2.5], [2.5, -1.0]])


def test_poiseuille_wall_drag_p2_is_exact():
    mesh = gen_channel_mesh(9, 5, length=2.0, height=1.0)
    params = AnalyticParams(n_snapshots=3)
    drag = _bottom_drag(analytic_snapshots("poiseuille", mesh, params))
    assert drag.kind is PropertyKind.drag
    exact = poiseuille_wall_drag(params, height=1.0, length=2.0)
    np.testing.assert_allclose(drag.values, exact, rtol=1e-10)
    np.testing.assert_allclose(exact, [0.008, 0.0084, 0.0088])


def _p1_wall_drag_error(ny: int) -> float:
    mesh = gen_channel_mesh(5, ny)
    params = AnalyticParams(n_snapshots=1, velocity_order=1)
    drag = _bottom_drag(analytic_snapshots("poiseuille", mesh, params))
    exact = poiseuille_wall_drag(params, height=1.0, length=1.0)
    return abs(drag.values[0] - exact[0]) / exact[0]


def test_poiseuille_wall_drag_p1_within_one_percent():
    assert 0.0 < _p1_wall_drag_error(81) < 0.01


def test_p1_wall_drag_converges_under_refinement():
    errors = [_p1_wall_drag_error(ny) for ny in (11, 21, 41)]
    assert errors[0] > errors[1] > errors[2]
    # First order: halving h roughly halves the error.
    assert errors[1] < 0.6 * errors[0]
    assert errors[2] < 0.6 * errors[1]


def test_both_walls_carry_the_same_drag(channel_mesh):
    params = AnalyticParams(n_snapshots=1)
    snaps = analytic_snapshots("poiseuille", channel_mesh, params)
    total = compute_property(snaps, channel_mesh, BoundaryTag.WALL, (1.0, 0.0), FLUID)
    exact = poiseuille_wall_drag(params, height=1.0, length=1.0)
    np.testing.assert_allclose(total.values, 2.0 * exact, rtol=1e-10)


@pytest.mark.parametrize("c", [2.5, -0.7])
def test_drag_and_lift_scale_linearly(obstacle_snapshots, obstacle_mesh, c):
    scaled = SnapshotSet(
        obstacle_mesh,
        c * obstacle_snapshots.velocity,
        c * obstacle_snapshots.pressure,
        obstacle_snapshots.velocity_order,
    )
    for direction in [(1.0, 0.0), (0.0, 1.0)]:
        base = compute_property(
            obstacle_snapshots, obstacle_mesh, BoundaryTag.WALL, direction, FLUID
        )
        out = compute_property(scaled, obstacle_mesh, BoundaryTag.WALL, direction, FLUID)
        np.testing.assert_allclose(out.values, c * base.values, rtol=1e-12, atol=1e-15)


def test_pressure_equal_to_x_drags_minus_the_enclosed_area(obstacle_mesh):
    # The obstacle block is 1 x 1. With p = x the pressure force on a closed body
    # is minus its area along e_x.
    n_dofs = obstacle_mesh.n_vertices
    snaps = SnapshotSet(
        obstacle_mesh, np.zeros((1, 2, n_dofs)), obstacle_mesh.vertices[:, 0][None], 1
    )
    drag = compute_property(snaps, obstacle_mesh, BoundaryTag.AIRFOIL, (1.0, 0.0), FLUID)
    lift = compute_property(snaps, obstacle_mesh, BoundaryTag.AIRFOIL, (0.0, 1.0), FLUID)
    assert drag.values[0] == pytest.approx(-1.0, rel=1e-12)
    assert lift.values[0] == pytest.approx(0.0, abs=1e-12)


def test_net_force_on_closed_obstacle_vanishes(obstacle_snapshots):
    forces = compute_force_components(obstacle_snapshots, BoundaryTag.AIRFOIL, FLUID)
    np.testing.assert_allclose(forces, 0.0, atol=1e-12)


def test_linear_shear_drag(channel_mesh):
    params = AnalyticParams(n_snapshots=1, shear=3.0)
    snaps = analytic_snapshots("linear-shear", channel_mesh, params)
    drag = _bottom_drag(snaps)
    assert drag.values[0] == pytest.approx(FLUID.viscosity * 3.0 * 1.0, rel=1e-12)


def test_uniform_flow_exerts_no_force(channel_mesh):
    snaps = analytic_snapshots("uniform", channel_mesh, AnalyticParams(n_snapshots=2))
    drag = compute_property(snaps, channel_mesh, BoundaryTag.WALL, (1.0, 0.0), FLUID)
    assert drag.has_zero()


def test_lift_inferred_from_direction(channel_mesh):
    snaps = analytic_snapshots("poiseuille", channel_mesh, AnalyticParams(n_snapshots=1))
    mask = region_mask(channel_mesh, BOTTOM)
    lift = compute_property(snaps, channel_mesh, BoundaryTag.WALL, (0.0, 1.0), FLUID, mask)
    assert lift.kind is PropertyKind.lift
    # Pressure pushes down on the bottom wall.
    assert lift.values[0] < 0


def test_missing_boundary_tag(channel_mesh):
    snaps = analytic_snapshots("poiseuille", channel_mesh, AnalyticParams(n_snapshots=1))
    with pytest.raises(PropertyError, match="no boundary facets tagged airfoil"):
        compute_force_components(snaps, BoundaryTag.AIRFOIL, FLUID)


def test_direction_must_be_unit(channel_mesh):
    snaps = analytic_snapshots("poiseuille", channel_mesh, AnalyticParams(n_snapshots=1))
    with pytest.raises(PropertyError, match="unit vector"):
        compute_property(snaps, channel_mesh, BoundaryTag.WALL, (1.0, 1.0), FLUID)


def test_property_vector_rejects_nan():
    with pytest.raises(PropertyError):
        PropertyVector([1.0, np.nan], PropertyKind.drag)


def test_reynolds_number():
    assert reynolds_number(FluidConstants(), 1.0, 2.0) == pytest.approx(2000.0)
