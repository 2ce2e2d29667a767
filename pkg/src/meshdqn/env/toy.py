"""A five-state deterministic chain with the same interface as the mesh environment.

The agent sits on one of five states (a one-node graph with a one-hot
feature). Action 0 stops and pays `STOP_REWARDS[state]`; action 1 ('no
removal' in mesh terms) moves one state to the right for no reward, and from
the last state ends the episode paying `END_REWARD`.
"""

from __future__ import annotations

import itertools

import numpy as np
import torch

from meshdqn.agent.dqn import greedy_action
from meshdqn.env.models import StateGraph, StepResult
from meshdqn.errors import EpisodeFinishedError

N_STATES = 5
STOP_REWARDS = (0.2, 0.9, 0.2, 0.2, 0.2)
END_REWARD = 0.5
STOP, ADVANCE = 0, 1


def chain_state(position: int) -> StateGraph:
    features = np.zeros((1, N_STATES))
    features[0, position] = 1.0
    return StateGraph(
        window=[position],
        window_ids=[position],
        features=features,
        edge_index=np.zeros((2, 0), dtype=np.int64),
        edge_attr=np.zeros(0),
    )


def transition(position: int, action: int) -> tuple[int | None, float]:
    """(next position or None when the episode ends, reward)."""
    if action == STOP:
        return None, STOP_REWARDS[position]
    if position == N_STATES - 1:
        return None, END_REWARD
    return position + 1, 0.0


def policy_values(policy: tuple[int, ...], gamma: float = 1.0) -> np.ndarray:
    values = np.zeros(N_STATES)
    for start in range(N_STATES):
        position: int | None = start
        discount, total = 1.0, 0.0
        while position is not None:
            position, r = transition(position, policy[position])
            total += discount * r
            discount *= gamma
        values[start] = total
    return values


def optimal_policy(gamma: float = 1.0) -> tuple[int, ...]:
    """Exhaustive search over all deterministic policies."""
    best, best_value = None, -np.inf
    for policy in itertools.product((STOP, ADVANCE), repeat=N_STATES):
        value = policy_values(policy, gamma).sum()
        if value > best_value + 1e-12:
            best, best_value = policy, value
    assert best is not None
    return best


def greedy_policy(q) -> tuple[int, ...]:
    """The greedy action of `q` in every chain state."""
    with torch.no_grad():
        qvals = q.q_values([chain_state(s) for s in range(N_STATES)])
    return tuple(greedy_action(row) for row in qvals)


class ToyChainEnv:
    n_actions = 2
    n_features = N_STATES

    def __init__(self) -> None:
        self.position: int | None = None
        self.steps = 0

    def reset(self, rng: np.random.Generator) -> StateGraph:
        self.position = int(rng.integers(N_STATES))
        self.steps = 0
        return chain_state(self.position)

    def step(self, action: int) -> StepResult:
        if self.position is None:
            raise EpisodeFinishedError("cannot step a finished episode")
        if action not in (STOP, ADVANCE):
            raise ValueError(f"action {action} outside [0, 2)")
        self.position, r = transition(self.position, action)
        self.steps += 1
        if self.position is None:
            return StepResult(None, r, True)
        return StepResult(chain_state(self.position), r, False)

    def final_error(self) -> float:
        return 0.0

    def vertices_removed(self) -> int:
        return 0
