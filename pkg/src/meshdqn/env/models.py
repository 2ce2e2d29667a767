from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from meshdqn.fields.models import SnapshotSet
from meshdqn.flow.models import PropertyVector
from meshdqn.mesh.models import TriMesh


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateGraph:
    """
    Graph fed to the Q-network.

    `window` holds mesh vertex indices (nearest first), `window_ids` their
    stable ids. `features` rows are [x, y, ux_1, uy_1, ..., ux_S, uy_S,
    p_1, ..., p_S]. `edge_index` (2, E) lists induced mesh edges between
    window positions in both directions, `edge_attr` their lengths.
    """

    window: np.ndarray
    window_ids: np.ndarray
    features: np.ndarray
    edge_index: np.ndarray
    edge_attr: np.ndarray
    offset: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "window", _frozen(self.window, np.int64).reshape(-1))
        object.__setattr__(self, "window_ids", _frozen(self.window_ids, np.int64).reshape(-1))
        object.__setattr__(self, "features", _frozen(self.features, np.float64))
        object.__setattr__(self, "edge_index", _frozen(self.edge_index, np.int64).reshape(2, -1))
        object.__setattr__(self, "edge_attr", _frozen(self.edge_attr, np.float64).reshape(-1))

    @property
    def size(self) -> int:
        return int(self.window.shape[0])

    @property
    def n_actions(self) -> int:
        """One action per window slot plus 'no removal'."""
        return self.size + 1

    @property
    def no_removal_action(self) -> int:
        return self.size

    def as_graph(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.features, self.edge_index, self.edge_attr

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateGraph):
            return NotImplemented
        return (
            self.offset == other.offset
            and np.array_equal(self.window, other.window)
            and np.array_equal(self.window_ids, other.window_ids)
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.edge_index, other.edge_index)
            and np.array_equal(self.edge_attr, other.edge_attr)
        )

    __hash__ = object.__hash__


@dataclass(frozen=True, eq=False)
class EpisodeState:
    """
    One coarsening episode.

    `source` is the snapshot set as loaded (on the unmodified mesh) and is
    what every step interpolates from. `ground_truth` and `n_gt` are fixed at
    reset. `forces` is the current (S, 2) drag/lift per snapshot.
    """

    mesh: TriMesh
    snapshots: SnapshotSet
    source: SnapshotSet
    ground_truth: PropertyVector
    ground_truth_forces: np.ndarray
    n_gt: int
    removal_target: int
    forces: np.ndarray
    state: Optional[StateGraph]
    error: float = 0.0
    removals: int = 0
    offset: int = 0
    steps: int = 0
    done: bool = False


@dataclass(frozen=True)
class StepResult:
    state: Optional[StateGraph]
    reward: float
    done: bool


class Environment(Protocol):
    """What a worker needs from an environment."""

    @property
    def n_actions(self) -> int: ...

    @property
    def n_features(self) -> int: ...

    def reset(self, rng: np.random.Generator) -> StateGraph: ...

    def step(self, action: int) -> StepResult: ...

    def final_error(self) -> float: ...

    def vertices_removed(self) -> int: ...


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    action: str
    error: float
    reward: float
    n_vertices: int
    drag: tuple[float, ...]
    lift: tuple[float, ...]
    recomputed: tuple[float, ...] = field(default=())
