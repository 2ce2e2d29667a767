"""Reward shaping.

A step that keeps the mesh and interpolation sound earns

    R = (2 exp(-K e) - 1) + time_factor * removals

where e is the relative property error and K = -ln(0.5) / zero_reward_error,
so an error of exactly `zero_reward_error` yields a property reward of 0.
A broken mesh or interpolation earns `broken_penalty` and ends the episode.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from meshdqn.errors import ConfigError, PropertyError
from meshdqn.flow.models import PropertyVector

Placement = Literal["full", "half", "quarter"]

_PLACEMENT_FRACTION: dict[str, float] = {"full": 1.0, "half": 0.5, "quarter": 0.25}


class Outcome(str, Enum):
    ok = "ok"
    broken = "broken"


class RewardConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    error_threshold: float = Field(0.001, gt=0)
    zero_reward_error: float = Field(0.0005, gt=0)
    time_factor: float = Field(0.005, ge=0)
    broken_penalty: float = -1.0

    @model_validator(mode="after")
    def _zero_within_threshold(self) -> "RewardConfig":
        if self.zero_reward_error > self.error_threshold:
            raise ValueError(
                f"zero_reward_error {self.zero_reward_error} exceeds "
                f"error_threshold {self.error_threshold}"
            )
        return self

    @property
    def K(self) -> float:
        return -math.log(0.5) / self.zero_reward_error

    @classmethod
    def from_placement(
        cls, error_threshold: float = 0.001, placement: Placement = "half", **kwargs
    ) -> "RewardConfig":
        """Put the zero-reward point at a fraction of the error threshold."""
        zero = error_threshold * _PLACEMENT_FRACTION[placement]
        return cls(error_threshold=error_threshold, zero_reward_error=zero, **kwargs)

    @classmethod
    def from_run_config(cls, cfg) -> "RewardConfig":
        section = cfg.reward
        threshold = cfg.environment.error_threshold
        extra = {"time_factor": section.time_factor, "broken_penalty": section.broken_penalty}
        try:
            if section.placement is not None:
                return cls.from_placement(threshold, section.placement, **extra)
            zero = section.zero_reward_error
            if zero is None:
                return cls.from_placement(threshold, "half", **extra)
            return cls(error_threshold=threshold, zero_reward_error=zero, **extra)
        except ValidationError as exc:
            raise ConfigError(f"Invalid reward settings: {exc}") from exc


def property_error(gt: PropertyVector, new: PropertyVector) -> float:
    """
    Root-mean-square relative error over snapshots: ||(gt - new) / gt||_2 / sqrt(S),
    so a uniform relative error e gives exactly e.
    """
    if len(gt) != len(new):
        raise PropertyError(f"property vectors differ in length ({len(gt)} vs {len(new)})")
    if gt.has_zero():
        raise PropertyError("ground-truth property has a zero entry; relative error undefined")
    rel = (gt.values - new.values) / gt.values
    return float(np.linalg.norm(rel) / math.sqrt(len(gt)))


def property_reward(error: float, cfg: RewardConfig) -> float:
    return 2.0 * math.exp(-cfg.K * error) - 1.0


def time_reward(n_removed: int, cfg: RewardConfig) -> float:
    return cfg.time_factor * n_removed


def reward(
    outcome: Outcome, error: float, n_removed_total: int, cfg: RewardConfig
) -> tuple[float, bool]:
    """(reward, done). Reaching the removal target is checked by the environment."""
    if Outcome(outcome) is Outcome.broken:
        return cfg.broken_penalty, True
    value = property_reward(error, cfg) + time_reward(n_removed_total, cfg)
    return value, error > cfg.error_threshold
