"""The mesh coarsening environment.

Each step either removes one window vertex (retriangulate, smooth, interpolate
the original snapshots onto the new mesh, integrate the stress) or shifts the
window one vertex outwards ('no removal'). Episodes are immutable values; the
`CoarsenEnv` wrapper keeps the current one for workers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from meshdqn.agent.reward import Outcome, RewardConfig, property_error, reward
from meshdqn.env.models import EpisodeState, StateGraph, StepResult
from meshdqn.env.state import build_state
from meshdqn.env.toy import ToyChainEnv
from meshdqn.errors import (
    BrokenInterpolationError,
    BrokenMeshError,
    ConfigError,
    EpisodeFinishedError,
    InsufficientVerticesError,
    PropertyError,
    SnapshotFormatError,
)
from meshdqn.fields.interpolate import interpolate
from meshdqn.fields.io import load_snapshots
from meshdqn.fields.models import SnapshotSet
from meshdqn.flow.models import FluidConstants, PropertyKind, PropertyVector
from meshdqn.flow.quantities import compute_force_components, region_mask
from meshdqn.mesh.edit import remove_vertex
from meshdqn.mesh.models import BoundaryTag, TriMesh
from meshdqn.mesh.msh import read_msh
from meshdqn.mesh.smoothing import smooth

logger = logging.getLogger(__name__)


class EnvConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    window_size: int = Field(180, ge=1)
    removal_fraction: float = Field(0.05, gt=0, le=1)
    smoothing_iterations: int = Field(50, ge=0)
    n_snapshots: int = Field(5, ge=1)
    velocity_order: int = 2
    anchor_tag: BoundaryTag = BoundaryTag.AIRFOIL
    property_kind: PropertyKind = PropertyKind.drag
    direction: Tuple[float, float] = (1.0, 0.0)
    property_tag: BoundaryTag = BoundaryTag.AIRFOIL
    region: Optional[Tuple[float, float, float, float]] = None
    fluid: FluidConstants = Field(default_factory=FluidConstants)
    reward: RewardConfig = Field(default_factory=RewardConfig)

    @classmethod
    def from_run_config(cls, cfg) -> "EnvConfig":
        env = cfg.environment
        return cls(
            window_size=env.window_size,
            removal_fraction=env.removal_fraction,
            smoothing_iterations=env.smoothing_iterations,
            n_snapshots=env.n_snapshots,
            velocity_order=env.velocity_order,
            anchor_tag=cfg.mesh.anchor_tag,
            property_kind=cfg.property.kind,
            direction=cfg.property.resolved_direction,
            property_tag=cfg.property.tag,
            region=cfg.property.region,
            fluid=cfg.fluid,
            reward=RewardConfig.from_run_config(cfg),
        )

    @property
    def n_features(self) -> int:
        return 2 + 3 * self.n_snapshots


def removal_target(n_gt: int, fraction: float) -> int:
    return max(1, math.ceil(round(fraction * n_gt, 9)))


def _forces(snaps: SnapshotSet, cfg: EnvConfig) -> np.ndarray:
    mask = region_mask(snaps.mesh, cfg.region)
    return compute_force_components(snaps, cfg.property_tag, cfg.fluid, mask)


def target_property(forces: np.ndarray, cfg: EnvConfig) -> PropertyVector:
    return PropertyVector(forces @ np.asarray(cfg.direction), cfg.property_kind)


def _window(
    mesh: TriMesh, snaps: SnapshotSet, offset: int, cfg: EnvConfig
) -> Optional[StateGraph]:
    """The state at `offset`, or None once the window no longer fits."""
    try:
        return build_state(mesh, snaps, cfg.window_size, offset, cfg.anchor_tag)
    except InsufficientVerticesError:
        return None


def start_episode(mesh: TriMesh, source: SnapshotSet, cfg: EnvConfig) -> EpisodeState:
    """
    Smooth the loaded mesh, interpolate the snapshots onto it and take the
    ground truth from that configuration, so the initial error is exactly 0.
    """
    if source.mesh is not mesh and source.mesh != mesh:
        raise SnapshotFormatError("snapshots do not live on the loaded mesh")
    if source.velocity_order != cfg.velocity_order:
        raise SnapshotFormatError(
            f"snapshots carry P{source.velocity_order} velocity, "
            f"configuration expects P{cfg.velocity_order}"
        )
    source = source.select(cfg.n_snapshots)
    smoothed = smooth(mesh, cfg.smoothing_iterations)
    snaps = source if smoothed is mesh else interpolate(source, smoothed)
    forces = _forces(snaps, cfg)
    gt = target_property(forces, cfg)
    if gt.has_zero():
        raise PropertyError(
            f"ground-truth {gt.kind.value} has a zero entry; choose another property or boundary"
        )
    state = build_state(smoothed, snaps, cfg.window_size, 0, cfg.anchor_tag)
    n_gt = mesh.n_vertices
    logger.debug(
        "Episode start: %d vertices, window %d, target %d removals",
        n_gt,
        cfg.window_size,
        removal_target(n_gt, cfg.removal_fraction),
    )
    return EpisodeState(
        mesh=smoothed,
        snapshots=snaps,
        source=source,
        ground_truth=gt,
        ground_truth_forces=forces,
        n_gt=n_gt,
        removal_target=removal_target(n_gt, cfg.removal_fraction),
        forces=forces,
        state=state,
    )


def reset(
    mesh_path: Path | str,
    snapshot_path: Path | str,
    cfg: EnvConfig,
    physical_tags: Mapping[int, BoundaryTag] | None = None,
) -> EpisodeState:
    mesh = read_msh(mesh_path, physical_tags)
    source = load_snapshots(snapshot_path, mesh, cfg.velocity_order)
    return start_episode(mesh, source, cfg)


def step(ep: EpisodeState, action: int, cfg: EnvConfig) -> tuple[EpisodeState, float, bool]:
    if ep.done or ep.state is None:
        raise EpisodeFinishedError("cannot step a finished episode")
    if not 0 <= action < ep.state.n_actions:
        raise ValueError(f"action {action} outside [0, {ep.state.n_actions})")

    if action == ep.state.no_removal_action:
        value, done = reward(Outcome.ok, ep.error, ep.removals, cfg.reward)
        offset = ep.offset + 1
        state = None if done else _window(ep.mesh, ep.snapshots, offset, cfg)
        done = done or state is None
        nxt = replace(ep, offset=offset, state=state, steps=ep.steps + 1, done=done)
        return nxt, value, done

    vertex = int(ep.state.window[action])
    try:
        mesh = smooth(remove_vertex(ep.mesh, vertex), cfg.smoothing_iterations)
        snaps = interpolate(ep.source, mesh)
        forces = _forces(snaps, cfg)
    except (BrokenMeshError, BrokenInterpolationError) as exc:
        logger.info("Removing vertex %d broke the episode: %s", ep.mesh.vertex_ids[vertex], exc)
        value, _ = reward(Outcome.broken, 0.0, ep.removals, cfg.reward)
        return replace(ep, state=None, steps=ep.steps + 1, done=True), value, True

    error = property_error(ep.ground_truth, target_property(forces, cfg))
    removals = ep.removals + 1
    value, done = reward(Outcome.ok, error, removals, cfg.reward)
    done = done or removals >= ep.removal_target
    state = None if done else _window(mesh, snaps, ep.offset, cfg)
    done = done or state is None
    nxt = replace(
        ep,
        mesh=mesh,
        snapshots=snaps,
        forces=forces,
        state=state,
        error=error,
        removals=removals,
        steps=ep.steps + 1,
        done=done,
    )
    return nxt, value, done


class CoarsenEnv:
    """Stateful wrapper around `start_episode` / `step` for workers and rollouts."""

    def __init__(self, mesh: TriMesh, source: SnapshotSet, cfg: EnvConfig):
        self.mesh = mesh
        self.source = source
        self.cfg = cfg
        self._initial: EpisodeState | None = None
        self.episode: EpisodeState | None = None

    @classmethod
    def from_files(
        cls,
        mesh_path: Path | str,
        snapshot_path: Path | str,
        cfg: EnvConfig,
        physical_tags: Mapping[int, BoundaryTag] | None = None,
    ) -> "CoarsenEnv":
        mesh = read_msh(mesh_path, physical_tags)
        return cls(mesh, load_snapshots(snapshot_path, mesh, cfg.velocity_order), cfg)

    @property
    def n_actions(self) -> int:
        return self.cfg.window_size + 1

    @property
    def n_features(self) -> int:
        return self.cfg.n_features

    def initial_episode(self) -> EpisodeState:
        if self._initial is None:
            self._initial = start_episode(self.mesh, self.source, self.cfg)
        return self._initial

    def reset(self, rng: np.random.Generator | None = None) -> StateGraph:
        # Reset is deterministic; the rng only drives action selection.
        self.episode = self.initial_episode()
        assert self.episode.state is not None
        return self.episode.state

    def step(self, action: int) -> StepResult:
        if self.episode is None:
            raise EpisodeFinishedError("reset() must be called before step()")
        self.episode, value, done = step(self.episode, action, self.cfg)
        return StepResult(self.episode.state, value, done)

    def final_error(self) -> float:
        return 0.0 if self.episode is None else self.episode.error

    def vertices_removed(self) -> int:
        return 0 if self.episode is None else self.episode.removals


def make_environment(cfg):
    """The environment named by `training.environment` in a RunConfig."""
    if cfg.training.environment == "toy":
        return ToyChainEnv()
    if cfg.paths.mesh is None or cfg.paths.snapshots is None:
        raise ConfigError("paths.mesh and paths.snapshots are required for the mesh environment")
    for path in (cfg.paths.mesh, cfg.paths.snapshots):
        if not Path(path).is_file():
            raise ConfigError(f"Input file not found: {path}")
    return CoarsenEnv.from_files(
        cfg.paths.mesh,
        cfg.paths.snapshots,
        EnvConfig.from_run_config(cfg),
        cfg.mesh.physical_tags,
    )
