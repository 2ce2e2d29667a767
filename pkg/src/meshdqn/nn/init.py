from __future__ import annotations

import math
from typing import Sequence

import torch
from torch import nn

from meshdqn.nn.graph import DTYPE


def _fans(shape: Sequence[int]) -> tuple[int, int]:
    """(fan_in, fan_out) of a (rows, cols) weight; a vector counts as one row."""
    if len(shape) == 1:
        return int(shape[0]), 1
    if len(shape) != 2:
        raise ValueError(f"xavier init needs a 1D or 2D shape, got {tuple(shape)}")
    return int(shape[1]), int(shape[0])


def _generator(seed: int | torch.Generator) -> torch.Generator:
    if isinstance(seed, torch.Generator):
        return seed
    return torch.Generator().manual_seed(int(seed))


def xavier_normal_init(
    shape: Sequence[int], gain: float = 0.9, seed: int | torch.Generator = 0
) -> torch.Tensor:
    """Samples ~ Normal(0, gain^2 * 2 / (fan_in + fan_out)), deterministic per seed."""
    fan_in, fan_out = _fans(shape)
    std = gain * math.sqrt(2.0 / (fan_in + fan_out))
    return torch.randn(tuple(shape), generator=_generator(seed), dtype=DTYPE) * std


def init_module(module: nn.Module, gain: float = 0.9, seed: int | torch.Generator = 0) -> None:
    """Xavier-normal initialise every weight and bias of `module`, in parameter order."""
    generator = _generator(seed)
    with torch.no_grad():
        for param in module.parameters():
            param.copy_(xavier_normal_init(param.shape, gain, generator))
