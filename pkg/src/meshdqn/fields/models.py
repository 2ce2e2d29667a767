from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from meshdqn.errors import SnapshotFormatError
from meshdqn.mesh.models import TriMesh


def n_velocity_dofs(mesh: TriMesh, order: int) -> int:
    if order == 1:
        return mesh.n_vertices
    if order == 2:
        return mesh.n_vertices + mesh.n_edges
    raise SnapshotFormatError(f"unsupported velocity order {order}")


def dof_points(mesh: TriMesh, order: int) -> np.ndarray:
    """Coordinates of the Lagrange DOFs: vertices, then edge midpoints for order 2."""
    if order == 1:
        return np.array(mesh.vertices)
    if order == 2:
        return np.vstack([mesh.vertices, mesh.edge_midpoints])
    raise SnapshotFormatError(f"unsupported velocity order {order}")


def triangle_dofs(mesh: TriMesh, order: int) -> np.ndarray:
    """(F, 3) or (F, 6) global DOF indices; edge DOFs follow local edges (0,1), (1,2), (2,0)."""
    if order == 1:
        return np.array(mesh.triangles)
    if order == 2:
        return np.hstack([mesh.triangles, mesh.n_vertices + mesh.triangle_edges])
    raise SnapshotFormatError(f"unsupported velocity order {order}")


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """
    Flow snapshots living on one mesh.

    velocity: (S, 2, n_velocity_dofs), P1 (vertices) or P2 (vertices + edge
    midpoints, in `mesh.edges` order). pressure: (S, V), always P1.
    """

    mesh: TriMesh
    velocity: np.ndarray
    pressure: np.ndarray
    velocity_order: int = 2

    def __post_init__(self) -> None:
        velocity = np.array(self.velocity, dtype=np.float64)
        pressure = np.array(self.pressure, dtype=np.float64)
        if velocity.ndim == 2:
            velocity = velocity[None]
        if pressure.ndim == 1:
            pressure = pressure[None]
        expected = n_velocity_dofs(self.mesh, self.velocity_order)
        if velocity.ndim != 3 or velocity.shape[1] != 2 or velocity.shape[2] != expected:
            raise SnapshotFormatError(
                f"velocity shape {velocity.shape} does not match (S, 2, {expected}) "
                f"for order {self.velocity_order}"
            )
        if pressure.shape != (velocity.shape[0], self.mesh.n_vertices):
            raise SnapshotFormatError(
                f"pressure shape {pressure.shape} does not match "
                f"({velocity.shape[0]}, {self.mesh.n_vertices})"
            )
        if velocity.shape[0] < 1:
            raise SnapshotFormatError("a snapshot set needs at least one snapshot")
        velocity.setflags(write=False)
        pressure.setflags(write=False)
        object.__setattr__(self, "velocity", velocity)
        object.__setattr__(self, "pressure", pressure)

    @property
    def n_snapshots(self) -> int:
        return int(self.velocity.shape[0])

    @property
    def n_velocity_dofs(self) -> int:
        return int(self.velocity.shape[2])

    @property
    def vertex_velocity(self) -> np.ndarray:
        """(S, 2, V) velocity at the mesh vertices."""
        return self.velocity[:, :, : self.mesh.n_vertices]

    def select(self, count: int) -> "SnapshotSet":
        """The first `count` snapshots."""
        if not 1 <= count <= self.n_snapshots:
            raise SnapshotFormatError(
                f"cannot select {count} of {self.n_snapshots} snapshots"
            )
        return SnapshotSet(
            self.mesh, self.velocity[:count], self.pressure[:count], self.velocity_order
        )

    def scaled(self, factor: float) -> "SnapshotSet":
        return SnapshotSet(
            self.mesh, factor * self.velocity, factor * self.pressure, self.velocity_order
        )

    def allclose(self, other: "SnapshotSet", atol: float = 1e-12) -> bool:
        return (
            self.velocity_order == other.velocity_order
            and self.velocity.shape == other.velocity.shape
            and self.pressure.shape == other.pressure.shape
            and np.allclose(self.velocity, other.velocity, rtol=0.0, atol=atol)
            and np.allclose(self.pressure, other.pressure, rtol=0.0, atol=atol)
        )


@dataclass(frozen=True)
class PointLocation:
    triangle: int
    barycentric: tuple[float, float, float]

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.barycentric)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One scalar component of one snapshot, as a P1 or P2 function."""

    mesh: TriMesh
    values: np.ndarray
    order: int = 1

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        expected = n_velocity_dofs(self.mesh, self.order)
        if values.shape[0] != expected:
            raise SnapshotFormatError(
                f"field has {values.shape[0]} values, order {self.order} needs {expected}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def velocity(cls, snaps: SnapshotSet, snapshot: int, component: int) -> "ScalarField":
        return cls(snaps.mesh, snaps.velocity[snapshot, component], snaps.velocity_order)

    @classmethod
    def pressure(cls, snaps: SnapshotSet, snapshot: int) -> "ScalarField":
        return cls(snaps.mesh, snaps.pressure[snapshot], 1)
