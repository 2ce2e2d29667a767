from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from meshdqn.agent.dqn import Transition


class WeightSnapshot(BaseModel):
    """Both networks' weights as published by the server; never mutated."""

    model_config = ConfigDict(frozen=True)

    version: int = Field(ge=1)
    role: int = Field(ge=0, le=1)
    payload: bytes


class EpisodeAssignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    episode_id: int
    epsilon: float = Field(ge=0, le=1)
    snapshot: WeightSnapshot


class EpisodeMetrics(BaseModel):
    """One line of the metrics stream."""

    episode_id: int
    worker_id: int
    steps: int
    cumulative_reward: float
    final_error: float
    vertices_removed: int
    loss_mean: Optional[float] = None
    snapshot_version: int
    epsilon: float


class WorkerReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    worker_id: int
    episode_id: int
    snapshot_version: int
    transitions: List[Transition]
    metrics: EpisodeMetrics


class WorkerFailure(BaseModel):
    worker_id: int
    episode_id: int
    error: str


class TrainingResult(BaseModel):
    checkpoint: str
    metrics: str
    summary: str
    episodes: int
    transitions: int
    updates: int
    final_version: int
    restarts: int = 0


class EvaluationSummary(BaseModel):
    """Headline numbers of a rollout, percentages formatted like '5.023%'."""

    n_vertices_initial: int
    n_vertices_final: int
    vertices_removed: int
    vertices_removed_pct: str
    steps: int
    property: str
    final_error: float
    final_error_pct: str
    companion_error_pct: Optional[str] = None
    recomputed_error_pct: Optional[str] = None
