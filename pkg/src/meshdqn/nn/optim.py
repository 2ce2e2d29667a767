from __future__ import annotations

from typing import Iterable, Sequence

import torch

from meshdqn.errors import NetworkError

DEFAULT_LR = 0.0005
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_EPS = 1e-8


def make_optimizer(
    params: Iterable[torch.nn.Parameter],
    lr: float = DEFAULT_LR,
    betas: tuple[float, float] = DEFAULT_BETAS,
    eps: float = DEFAULT_EPS,
) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=lr, betas=betas, eps=eps, weight_decay=0.0)


def compute_gradients(
    loss: torch.Tensor, params: Sequence[torch.Tensor]
) -> list[torch.Tensor]:
    """Reverse-mode gradients of a scalar `loss` with respect to `params`."""
    if not isinstance(loss, torch.Tensor) or loss.numel() != 1:
        raise NetworkError("loss must be a scalar tensor")
    if not loss.requires_grad:
        raise NetworkError("loss was not recorded for differentiation")
    grads = torch.autograd.grad(loss, list(params), allow_unused=True)
    out = [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]
    check_finite(out)
    return out


def check_finite(grads: Iterable[torch.Tensor | None]) -> None:
    for g in grads:
        if g is not None and not torch.all(torch.isfinite(g)):
            raise NetworkError("non-finite values in gradients")


def adam_step(
    params: Sequence[torch.nn.Parameter],
    grads: Sequence[torch.Tensor],
    optimizer: torch.optim.Adam,
) -> None:
    """Install `grads` on `params` and take one Adam step."""
    if len(params) != len(grads):
        raise NetworkError(f"{len(grads)} gradients for {len(params)} parameters")
    for p, g in zip(params, grads):
        if g.shape != p.shape:
            raise NetworkError(f"gradient shape {tuple(g.shape)} != parameter {tuple(p.shape)}")
        p.grad = g.detach().clone()
    optimizer.step()


def step_count(optimizer: torch.optim.Adam) -> int:
    steps = [int(s["step"]) for s in optimizer.state.values() if "step" in s]
    return max(steps, default=0)
