"""Double DQN: action selection, targets, the training step and the two-network trainer."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from meshdqn.agent.network import QNetwork
from meshdqn.agent.replay import ReplayBuffer
from meshdqn.env.models import Environment, StateGraph
from meshdqn.errors import CheckpointError, NetworkError, ReplayBufferError
from meshdqn.nn.checkpoint import (
    Checkpoint,
    decode_tensors,
    encode_tensors,
    load_optimizer_tensors,
    optimizer_tensors,
)
from meshdqn.nn.optim import adam_step, compute_gradients, make_optimizer

logger = logging.getLogger(__name__)

HUBER_DELTA = 1.0
NET_PREFIXES = ("net_a", "net_b")
OPT_PREFIXES = ("opt_a", "opt_b")


class QFunction(Protocol):
    def q_values(self, states: Sequence[StateGraph]) -> torch.Tensor: ...


@dataclass(frozen=True)
class Transition:
    state: StateGraph
    action: int
    next_state: Optional[StateGraph]
    reward: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.reward):
            raise ValueError(f"transition reward must be finite, got {self.reward}")
        if not 0 <= self.action < self.state.n_actions:
            raise ValueError(f"action {self.action} outside [0, {self.state.n_actions})")

    @property
    def terminal(self) -> bool:
        return self.next_state is None


@dataclass(frozen=True)
class EpisodeStats:
    steps: int
    cumulative_reward: float
    final_error: float
    vertices_removed: int


# ---------------------------------------------------------------------------
# Acting
# ---------------------------------------------------------------------------


def greedy_action(q_values) -> int:
    """Argmax with ties broken towards the lowest index."""
    values = np.asarray(torch.as_tensor(q_values).detach().cpu(), dtype=np.float64).reshape(-1)
    return int(np.argmax(values))


def select_action(
    q: QFunction, state: StateGraph, epsilon: float, rng: np.random.Generator
) -> int:
    """Epsilon-greedy over the window slots plus 'no removal'."""
    if rng.random() < epsilon:
        return int(rng.integers(state.n_actions))
    with torch.no_grad():
        return greedy_action(q.q_values([state])[0])


def linear_epsilon(step: int, start: float, end: float, decay_steps: int) -> float:
    frac = min(1.0, max(0, step) / decay_steps)
    return start + frac * (end - start)


def run_episode(
    env: Environment,
    q: QFunction,
    epsilon: float,
    rng: np.random.Generator,
    max_steps: int | None = None,
) -> tuple[list[Transition], EpisodeStats]:
    state = env.reset(rng)
    transitions: list[Transition] = []
    total = 0.0
    while True:
        action = select_action(q, state, epsilon, rng)
        result = env.step(action)
        done = result.done or (max_steps is not None and len(transitions) + 1 >= max_steps)
        next_state = None if result.done else result.state
        transitions.append(Transition(state, action, next_state, result.reward))
        total += result.reward
        if done:
            break
        state = result.state
    stats = EpisodeStats(
        steps=len(transitions),
        cumulative_reward=total,
        final_error=env.final_error(),
        vertices_removed=env.vertices_removed(),
    )
    return transitions, stats


# ---------------------------------------------------------------------------
# Learning
# ---------------------------------------------------------------------------


def double_dqn_target(
    batch: Sequence[Transition], q_select: QFunction, q_eval: QFunction, gamma: float
) -> torch.Tensor:
    """r for terminal transitions, else r + gamma * Q_eval(s', argmax_a Q_select(s', a))."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    targets = torch.tensor([t.reward for t in batch], dtype=torch.float64)
    live = [i for i, t in enumerate(batch) if not t.terminal]
    if not live or gamma == 0.0:
        return targets
    next_states = [batch[i].next_state for i in live]
    with torch.no_grad():
        chosen = torch.as_tensor(q_select.q_values(next_states)).argmax(dim=1)
        evaluated = torch.as_tensor(q_eval.q_values(next_states), dtype=torch.float64)
        bootstrap = evaluated.gather(1, chosen[:, None]).reshape(-1)
    targets[live] = targets[live] + gamma * bootstrap
    return targets


def td_loss(
    batch: Sequence[Transition], q_select: QNetwork, targets: torch.Tensor
) -> torch.Tensor:
    predicted = q_select.q_values([t.state for t in batch])
    actions = torch.tensor([t.action for t in batch], dtype=torch.long)
    taken = predicted.gather(1, actions[:, None]).reshape(-1)
    return F.huber_loss(taken, targets.to(taken.dtype), delta=HUBER_DELTA)


def train_step(
    buffer: ReplayBuffer[Transition],
    q_select: QNetwork,
    q_eval: QFunction,
    optimizer: torch.optim.Adam,
    batch_size: int,
    gamma: float = 1.0,
) -> float:
    """One Adam step on `q_select` against Double DQN targets; returns the Huber loss."""
    if len(buffer) < batch_size:
        raise ReplayBufferError(
            f"buffer holds {len(buffer)} transitions, batch needs {batch_size}"
        )
    batch = buffer.sample(batch_size)
    targets = double_dqn_target(batch, q_select, q_eval, gamma)
    loss = td_loss(batch, q_select, targets)
    if not torch.isfinite(loss):
        raise NetworkError(f"non-finite TD loss {loss.item()}")
    params = [p for p in q_select.parameters() if p.requires_grad]
    grads = compute_gradients(loss, params)
    adam_step(params, grads, optimizer)
    return float(loss.detach())


class DoubleDQNTrainer:
    """
    Owns both Q-networks and their optimizers. `role` names the network that
    currently selects actions and receives updates; the other evaluates.
    """

    def __init__(
        self,
        net_a: QNetwork,
        net_b: QNetwork,
        lr: float = 0.0005,
        gamma: float = 1.0,
        role: int = 0,
    ):
        if role not in (0, 1):
            raise ValueError(f"role must be 0 or 1, got {role}")
        self.nets = (net_a, net_b)
        self.optimizers = (
            make_optimizer(net_a.parameters(), lr),
            make_optimizer(net_b.parameters(), lr),
        )
        self.gamma = gamma
        self.role = role
        self.updates = 0

    @classmethod
    def from_config(cls, cfg, in_features: int, n_actions: int) -> "DoubleDQNTrainer":
        generator = torch.Generator().manual_seed(cfg.training.seed)
        nets = [
            QNetwork.from_config(in_features, n_actions, cfg.network).initialise(
                cfg.training.xavier_gain, generator
            )
            for _ in range(2)
        ]
        return cls(nets[0], nets[1], lr=cfg.training.lr, gamma=cfg.training.gamma)

    @property
    def q_select(self) -> QNetwork:
        return self.nets[self.role]

    @property
    def q_eval(self) -> QNetwork:
        return self.nets[1 - self.role]

    @property
    def optimizer(self) -> torch.optim.Adam:
        return self.optimizers[self.role]

    def swap_roles(self) -> None:
        self.role = 1 - self.role
        logger.debug("Swapped network roles, updating net %s", NET_PREFIXES[self.role])

    def train(self, buffer: ReplayBuffer[Transition], batch_size: int) -> float:
        loss = train_step(
            buffer, self.q_select, self.q_eval, self.optimizer, batch_size, self.gamma
        )
        self.updates += 1
        return loss

    # -- serialization -------------------------------------------------------

    def weight_tensors(self) -> dict[str, torch.Tensor]:
        out = {}
        for prefix, net in zip(NET_PREFIXES, self.nets):
            for name, value in net.state_dict().items():
                out[f"{prefix}.{name}"] = value.detach().clone()
        return out

    def state_tensors(self) -> dict[str, torch.Tensor]:
        out = self.weight_tensors()
        for prefix, opt in zip(OPT_PREFIXES, self.optimizers):
            out.update(optimizer_tensors(prefix, opt))
        return out

    def load_state_tensors(self, tensors: Mapping[str, torch.Tensor]) -> None:
        for prefix, net in zip(NET_PREFIXES, self.nets):
            load_network_tensors(net, prefix, tensors)
        for prefix, opt in zip(OPT_PREFIXES, self.optimizers):
            load_optimizer_tensors(prefix, opt, tensors)

    def weight_payload(self) -> bytes:
        return encode_tensors(self.weight_tensors())

    def checkpoint(self, seed: int, weight_version: int) -> Checkpoint:
        return Checkpoint(
            tensors=self.state_tensors(), seed=seed, role=self.role, weight_version=weight_version
        )

    def restore(self, ckpt: Checkpoint) -> None:
        self.load_state_tensors(ckpt.tensors)
        self.role = ckpt.role


def load_network_tensors(
    net: QNetwork, prefix: str, tensors: Mapping[str, torch.Tensor]
) -> None:
    start = prefix + "."
    state = {name[len(start) :]: value for name, value in tensors.items() if name.startswith(start)}
    try:
        net.load_state_dict(state, strict=True)
    except RuntimeError as exc:
        raise CheckpointError(f"{prefix} weights do not fit the network: {exc}") from exc


def load_acting_weights(net: QNetwork, payload: bytes, role: int) -> None:
    """Load the selecting network out of a weight payload into `net`."""
    load_network_tensors(net, NET_PREFIXES[role], decode_tensors(payload))
