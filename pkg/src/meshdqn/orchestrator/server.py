"""The parameter server: the only owner of network weights and the replay buffer.

Workers receive one episode assignment at a time (latest weights plus the
exploration rate) and answer with the episode's transitions. Every report
is ingested, trained on once (after warm-up), and answered with a freshly
published weight snapshot, so versions start at 1 and never skip.
"""

from __future__ import annotations

import logging
import queue
from pathlib import Path
from typing import IO, Dict, List, Optional

import numpy as np

from meshdqn.agent.dqn import DoubleDQNTrainer, linear_epsilon
from meshdqn.agent.replay import ReplayBuffer
from meshdqn.config.run_config import RunConfig
from meshdqn.errors import TrainingError
from meshdqn.nn.checkpoint import save_checkpoint
from meshdqn.orchestrator.backends import MessageQueue, WorkerBackend, WorkerHandle
from meshdqn.orchestrator.models import (
    EpisodeAssignment,
    WeightSnapshot,
    WorkerFailure,
    WorkerReport,
)
from meshdqn.orchestrator.worker import worker_main

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.mdqc"
METRICS_NAME = "metrics.jsonl"
STOP_TIMEOUT_SECONDS = 10.0


class ParameterServer:
    def __init__(self, cfg: RunConfig, n_features: int, n_actions: int, output_dir: Path):
        self.cfg = cfg
        t = cfg.training
        self.output_dir = Path(output_dir)
        self.trainer = DoubleDQNTrainer.from_config(cfg, n_features, n_actions)
        self.buffer: ReplayBuffer = ReplayBuffer(
            t.replay_capacity, np.random.default_rng([t.seed, 0x5EED])
        )
        self.version = 0
        self.snapshot: Optional[WeightSnapshot] = None
        self.assigned = 0
        self.completed = 0
        self.total_steps = 0
        self.transitions_received = 0
        self.restarts = 0
        self.versions_seen: Dict[int, List[int]] = {}
        self.losses: List[float] = []
        self.publish()

    # -- weights -------------------------------------------------------------

    def publish(self) -> WeightSnapshot:
        self.version += 1
        self.snapshot = WeightSnapshot(
            version=self.version, role=self.trainer.role, payload=self.trainer.weight_payload()
        )
        logger.debug("Published weight snapshot v%d", self.version)
        return self.snapshot

    def epsilon(self) -> float:
        t = self.cfg.training
        return linear_epsilon(
            self.total_steps, t.epsilon_start, t.epsilon_end, t.epsilon_decay_steps
        )

    def checkpoint_path(self, name: str = CHECKPOINT_NAME) -> Path:
        return self.output_dir / name

    def save(self, name: str = CHECKPOINT_NAME) -> Path:
        ckpt = self.trainer.checkpoint(self.cfg.training.seed, self.version)
        path = save_checkpoint(ckpt, self.checkpoint_path(name))
        logger.info("Checkpoint v%d after %d episodes: %s", self.version, self.completed, path)
        return path

    # -- episodes ------------------------------------------------------------

    def next_assignment(self) -> Optional[EpisodeAssignment]:
        if self.assigned >= self.cfg.training.episodes:
            return None
        assert self.snapshot is not None
        assignment = EpisodeAssignment(
            episode_id=self.assigned, epsilon=self.epsilon(), snapshot=self.snapshot
        )
        self.assigned += 1
        return assignment

    def ingest(self, report: WorkerReport) -> Optional[float]:
        """Store a report's transitions, train once when warm, publish new weights."""
        t = self.cfg.training
        self.versions_seen.setdefault(report.worker_id, []).append(report.snapshot_version)
        self.buffer.extend(report.transitions)
        self.transitions_received += len(report.transitions)
        self.total_steps += report.metrics.steps
        self.completed += 1

        loss = None
        if len(self.buffer) >= max(t.warmup, t.batch_size):
            loss = self.trainer.train(self.buffer, t.batch_size)
            self.losses.append(loss)
        if self.completed % t.swap_every == 0:
            self.trainer.swap_roles()
        self.publish()
        if t.checkpoint_every and self.completed % t.checkpoint_every == 0:
            self.save()
        return loss

    # -- main loop -----------------------------------------------------------

    def run(self, backend: WorkerBackend, metrics: IO[str]) -> None:
        t = self.cfg.training
        n_workers = min(t.workers, t.episodes)
        if n_workers == 0:
            return
        outbox = backend.queue()
        inboxes: Dict[int, MessageQueue] = {w: backend.queue() for w in range(n_workers)}
        handles: Dict[int, WorkerHandle] = {}
        outstanding: Dict[int, EpisodeAssignment] = {}

        def start(w: int) -> None:
            args = (w, self.cfg, inboxes[w], outbox)
            handles[w] = backend.start(worker_main, args, f"worker-{w}")

        def dispatch(w: int) -> None:
            assignment = self.next_assignment()
            inboxes[w].put(assignment)
            if assignment is None:
                outstanding.pop(w, None)
            else:
                outstanding[w] = assignment

        def restart(w: int, reason: str) -> None:
            self.restarts += 1
            if self.restarts > t.max_restarts:
                raise TrainingError(
                    f"worker {w} failed ({reason}); restart budget of {t.max_restarts} exhausted"
                )
            logger.warning("Restarting worker %d (%s), restart %d", w, reason, self.restarts)
            backend.stop(handles[w], STOP_TIMEOUT_SECONDS)
            # A fresh inbox drops the assignment if the dead worker never took it.
            inboxes[w] = backend.queue()
            start(w)
            inboxes[w].put(outstanding[w])

        try:
            for w in range(n_workers):
                start(w)
                dispatch(w)
            while outstanding:
                try:
                    msg = outbox.get(timeout=t.poll_seconds)
                except queue.Empty:
                    for w in list(outstanding):
                        if not handles[w].is_alive():
                            restart(w, "process exited")
                    continue
                if isinstance(msg, WorkerFailure):
                    current = outstanding.get(msg.worker_id)
                    stale = current is None or msg.episode_id not in (-1, current.episode_id)
                    if stale:
                        logger.warning("Ignoring stale failure from worker %d", msg.worker_id)
                        continue
                    restart(msg.worker_id, msg.error)
                    continue
                self.handle_report(msg, metrics)
                dispatch(msg.worker_id)
        finally:
            for inbox in inboxes.values():
                inbox.put(None)
            for handle in handles.values():
                backend.stop(handle, STOP_TIMEOUT_SECONDS)

    def handle_report(self, report: WorkerReport, metrics: IO[str]) -> None:
        if len(report.transitions) != report.metrics.steps:
            raise TrainingError(
                f"episode {report.episode_id}: {len(report.transitions)} transitions "
                f"for {report.metrics.steps} steps"
            )
        loss = self.ingest(report)
        line = report.metrics.model_copy(update={"loss_mean": loss})
        metrics.write(line.model_dump_json() + "\n")
        metrics.flush()
