"""Rollouts: greedy (clone-step-score), random removal, and policy-driven."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from meshdqn.env.environment import EnvConfig, step
from meshdqn.env.models import EpisodeState, TrajectoryRecord
from meshdqn.flow.hooks import RecomputeHook, run_recompute_hook

logger = logging.getLogger(__name__)

NO_REMOVAL_LABEL = "no-removal"
INITIAL_LABEL = "initial"

Chooser = Callable[[EpisodeState], int]


@dataclass
class Rollout:
    episode: EpisodeState
    records: list[TrajectoryRecord] = field(default_factory=list)
    removed_ids: list[int] = field(default_factory=list)

    @property
    def error_trace(self) -> list[float]:
        return [r.error for r in self.records]

    @property
    def steps(self) -> int:
        return len(self.records) - 1


def trajectory_record(
    ep: EpisodeState,
    label: str,
    reward: float,
    cfg: EnvConfig,
    hook: Optional[RecomputeHook] = None,
) -> TrajectoryRecord:
    recomputed: tuple[float, ...] = ()
    if hook is not None:
        values = run_recompute_hook(hook, ep.mesh, cfg.property_kind, len(ep.ground_truth))
        recomputed = tuple(float(v) for v in values.values)
    return TrajectoryRecord(
        step=ep.steps,
        action=label,
        error=ep.error,
        reward=reward,
        n_vertices=ep.mesh.n_vertices,
        drag=tuple(float(v) for v in ep.forces[:, 0]),
        lift=tuple(float(v) for v in ep.forces[:, 1]),
        recomputed=recomputed,
    )


def run_policy(
    ep: EpisodeState,
    cfg: EnvConfig,
    choose: Chooser,
    hook: Optional[RecomputeHook] = None,
) -> Rollout:
    """Step `ep` with `choose` until done. Row 0 of the trajectory is the start state."""
    rollout = Rollout(episode=ep, records=[trajectory_record(ep, INITIAL_LABEL, 0.0, cfg, hook)])
    while not ep.done:
        assert ep.state is not None
        action = choose(ep)
        if action == ep.state.no_removal_action:
            label = NO_REMOVAL_LABEL
        else:
            vertex_id = int(ep.state.window_ids[action])
            label = str(vertex_id)
        nxt, value, _ = step(ep, action, cfg)
        if nxt.removals > ep.removals:
            rollout.removed_ids.append(int(label))
        ep = nxt
        rollout.records.append(trajectory_record(ep, label, value, cfg, hook))
    rollout.episode = ep
    return rollout


def greedy_choice(ep: EpisodeState, cfg: EnvConfig) -> int:
    """
    The window slot whose removal gives the smallest error, lowest slot on
    ties. Removals that break the mesh are skipped; if all do, 'no removal'.
    """
    assert ep.state is not None
    best, best_error = ep.state.no_removal_action, np.inf
    for slot in range(ep.state.size):
        nxt, _, _ = step(ep, slot, cfg)
        if nxt.removals == ep.removals:
            continue
        if nxt.error < best_error:
            best, best_error = slot, nxt.error
    return best


def greedy_rollout(
    ep: EpisodeState, cfg: EnvConfig, hook: Optional[RecomputeHook] = None
) -> Rollout:
    rollout = run_policy(ep, cfg, lambda e: greedy_choice(e, cfg), hook)
    logger.info(
        "Greedy rollout removed %d vertices, final error %.3e",
        rollout.episode.removals,
        rollout.episode.error,
    )
    return rollout


def random_rollout(
    ep: EpisodeState,
    cfg: EnvConfig,
    rng: np.random.Generator,
    hook: Optional[RecomputeHook] = None,
) -> Rollout:
    """Remove uniformly random window vertices until the episode ends."""

    def choose(e: EpisodeState) -> int:
        assert e.state is not None
        return int(rng.integers(e.state.size))

    return run_policy(ep, cfg, choose, hook)
