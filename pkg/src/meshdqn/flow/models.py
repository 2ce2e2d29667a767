from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from meshdqn.errors import PropertyError


class PropertyKind(str, Enum):
    drag = "drag"
    lift = "lift"

    @property
    def direction(self) -> tuple[float, float]:
        return (1.0, 0.0) if self is PropertyKind.drag else (0.0, 1.0)

    @property
    def companion(self) -> "PropertyKind":
        return PropertyKind.lift if self is PropertyKind.drag else PropertyKind.drag


class FluidConstants(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    density: float = Field(1.0, gt=0)
    viscosity: float = Field(0.001, gt=0)


@dataclass(frozen=True, eq=False)
class PropertyVector:
    """Per-snapshot values of one target property."""

    values: np.ndarray
    kind: PropertyKind

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise PropertyError(f"{self.kind.value} values are not finite: {values}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", PropertyKind(self.kind))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PropertyVector):
            return NotImplemented
        return self.kind is other.kind and np.array_equal(self.values, other.values)

    __hash__ = object.__hash__

    def has_zero(self, atol: float = 1e-12) -> bool:
        """True when an entry vanishes up to round-off; relative errors are undefined there."""
        return bool(np.any(np.abs(self.values) <= atol))
