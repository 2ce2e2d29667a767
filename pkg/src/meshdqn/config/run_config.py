"""Run configuration: one YAML document with one section per concern.

Every default reproduces the reference training setup, so an empty file (or
no file) is a valid configuration.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from meshdqn.errors import ConfigError
from meshdqn.flow.models import FluidConstants, PropertyKind
from meshdqn.mesh.models import DEFAULT_PHYSICAL_TAGS, BoundaryTag

logger = logging.getLogger(__name__)


class PathsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mesh: Optional[Path] = None
    snapshots: Optional[Path] = None
    output_dir: Optional[Path] = None


class MeshConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # MSH physical tag -> boundary tag
    physical_tags: Dict[int, BoundaryTag] = Field(
        default_factory=lambda: dict(DEFAULT_PHYSICAL_TAGS)
    )
    # Boundary the state window is measured from
    anchor_tag: BoundaryTag = BoundaryTag.AIRFOIL

    @model_validator(mode="after")
    def _no_interior_tag(self) -> "MeshConfig":
        if BoundaryTag.INTERIOR in self.physical_tags.values():
            raise ValueError("physical tags cannot map to 'interior'")
        return self


class EnvironmentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    window_size: int = Field(180, ge=1)
    removal_fraction: float = Field(0.05, gt=0, le=1)
    error_threshold: float = Field(0.001, gt=0)
    smoothing_iterations: int = Field(50, ge=0)
    n_snapshots: int = Field(5, ge=1)
    velocity_order: Literal[1, 2] = 2


class RewardSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    zero_reward_error: Optional[float] = Field(0.0005, gt=0)
    # Derive zero_reward_error from the error threshold instead
    placement: Optional[Literal["full", "half", "quarter"]] = None
    time_factor: float = Field(0.005, ge=0)
    broken_penalty: float = -1.0


class NetworkConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    width: int = Field(128, ge=1)
    sage_layers: int = Field(3, ge=1)
    gcn_layers: int = Field(3, ge=1)
    topk_ratio: float = Field(0.5, gt=0, le=1)


class TrainingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    environment: Literal["mesh", "toy"] = "mesh"
    backend: Literal["process", "thread"] = "process"
    lr: float = Field(0.0005, gt=0)
    gamma: float = Field(1.0, ge=0, le=1)
    xavier_gain: float = Field(0.9, ge=0)
    workers: int = Field(14, ge=1)
    episodes: int = Field(1000, ge=0)
    seed: int = Field(0, ge=0)
    epsilon_start: float = Field(1.0, ge=0, le=1)
    epsilon_end: float = Field(0.05, ge=0, le=1)
    epsilon_decay_steps: int = Field(10000, ge=1)
    swap_every: int = Field(5, ge=1)
    batch_size: int = Field(32, ge=1)
    replay_capacity: int = Field(50000, ge=1)
    warmup: int = Field(500, ge=0)
    checkpoint_every: int = Field(100, ge=0)
    max_restarts: int = Field(3, ge=0)
    poll_seconds: float = Field(1.0, gt=0)


class PropertyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: PropertyKind = PropertyKind.drag
    # Defaults to the kind's axis (x for drag, y for lift)
    direction: Optional[Tuple[float, float]] = None
    tag: BoundaryTag = BoundaryTag.AIRFOIL
    # Restrict integration to facets whose midpoint lies in (xmin, ymin, xmax, ymax)
    region: Optional[Tuple[float, float, float, float]] = None
    # Dotted module path or .py file exposing recompute(mesh, property_kind)
    recompute_hook: Optional[str] = None

    @model_validator(mode="after")
    def _unit_direction(self) -> "PropertyConfig":
        if self.direction is not None:
            norm = (self.direction[0] ** 2 + self.direction[1] ** 2) ** 0.5
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"direction must be a unit vector, got norm {norm}")
        return self

    @property
    def resolved_direction(self) -> tuple[float, float]:
        return self.direction if self.direction is not None else self.kind.direction


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    paths: PathsConfig = Field(default_factory=PathsConfig)
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    environment: EnvironmentConfig = Field(default_factory=EnvironmentConfig)
    reward: RewardSection = Field(default_factory=RewardSection)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    property: PropertyConfig = Field(default_factory=PropertyConfig)
    fluid: FluidConstants = Field(default_factory=FluidConstants)

    def with_overrides(
        self,
        *,
        seed: int | None = None,
        workers: int | None = None,
        episodes: int | None = None,
        output_dir: Path | None = None,
    ) -> "RunConfig":
        data = self.model_dump()
        if seed is not None:
            data["training"]["seed"] = seed
        if workers is not None:
            data["training"]["workers"] = workers
        if episodes is not None:
            data["training"]["episodes"] = episodes
        if output_dir is not None:
            data["paths"]["output_dir"] = output_dir
        return _validate(data, "overrides")

    def output_dir(self, fallback: str | Path) -> Path:
        return Path(self.paths.output_dir or fallback)


def _format_errors(exc: ValidationError) -> list[str]:
    errors = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        errors.append(f"{loc}: {err['msg']}")
    return errors


def _validate(data: Any, source: str) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        errors = _format_errors(exc)
        raise ConfigError(f"Invalid run config ({source}): " + "; ".join(errors), errors) from exc


def load_run_config(path: Path | str | None = None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        payload = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to read YAML {path}: {e}") from e
    if payload is None:
        payload = {}
    if not isinstance(payload, dict):
        raise ConfigError(f"Config {path} must be a mapping, got {type(payload).__name__}")
    cfg = _validate(payload, str(path))
    logger.debug("Loaded run config from %s", path)
    return cfg


def dump_run_config(cfg: RunConfig, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = cfg.model_dump(mode="json")
    path.write_text(yaml.safe_dump(payload, sort_keys=False), encoding="utf-8")
    return path
