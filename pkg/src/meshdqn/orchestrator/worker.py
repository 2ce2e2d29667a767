from __future__ import annotations

import logging

import numpy as np

from meshdqn.agent.dqn import load_acting_weights, run_episode
from meshdqn.agent.network import QNetwork
from meshdqn.config.run_config import RunConfig
from meshdqn.env.environment import make_environment
from meshdqn.orchestrator.backends import MessageQueue
from meshdqn.orchestrator.models import (
    EpisodeAssignment,
    EpisodeMetrics,
    WorkerFailure,
    WorkerReport,
)

logger = logging.getLogger(__name__)


def episode_rng(seed: int, episode_id: int) -> np.random.Generator:
    return np.random.default_rng([seed, episode_id])


def worker_main(
    worker_id: int, cfg: RunConfig, inbox: MessageQueue, outbox: MessageQueue
) -> None:
    """
    Run assigned episodes until a None assignment arrives. Each assignment
    carries the weights to act with; the episode's transitions go back to the
    server in one report. Any exception is reported as a failure and ends the
    loop, the server decides whether to restart.
    """
    episode_id = -1
    try:
        env = make_environment(cfg)
        net = QNetwork.from_config(env.n_features, env.n_actions, cfg.network)
        while True:
            assignment: EpisodeAssignment | None = inbox.get()
            if assignment is None:
                logger.debug("Worker %d stopping", worker_id)
                return
            episode_id = assignment.episode_id
            snapshot = assignment.snapshot
            load_acting_weights(net, snapshot.payload, snapshot.role)
            transitions, stats = run_episode(
                env, net, assignment.epsilon, episode_rng(cfg.training.seed, episode_id)
            )
            metrics = EpisodeMetrics(
                episode_id=episode_id,
                worker_id=worker_id,
                steps=stats.steps,
                cumulative_reward=stats.cumulative_reward,
                final_error=stats.final_error,
                vertices_removed=stats.vertices_removed,
                snapshot_version=snapshot.version,
                epsilon=assignment.epsilon,
            )
            outbox.put(
                WorkerReport(
                    worker_id=worker_id,
                    episode_id=episode_id,
                    snapshot_version=snapshot.version,
                    transitions=transitions,
                    metrics=metrics,
                )
            )
    except Exception as exc:
        logger.exception("Worker %d failed on episode %d", worker_id, episode_id)
        outbox.put(WorkerFailure(worker_id=worker_id, episode_id=episode_id, error=repr(exc)))
