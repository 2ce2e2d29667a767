from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from meshdqn.agent.dqn import NET_PREFIXES, greedy_action, load_network_tensors
from meshdqn.agent.network import QNetwork
from meshdqn.agent.reward import property_error
from meshdqn.config.run_config import RunConfig, dump_run_config
from meshdqn.config.settings import settings
from meshdqn.env.baselines import Rollout, run_policy
from meshdqn.env.environment import EnvConfig, make_environment, reset
from meshdqn.env.models import EpisodeState
from meshdqn.flow.hooks import RecomputeHook, load_recompute_hook
from meshdqn.flow.models import PropertyKind, PropertyVector
from meshdqn.nn.checkpoint import load_checkpoint
from meshdqn.orchestrator.backends import get_backend
from meshdqn.orchestrator.models import EvaluationSummary, TrainingResult
from meshdqn.orchestrator.server import CHECKPOINT_NAME, METRICS_NAME, ParameterServer

logger = logging.getLogger(__name__)

SUMMARY_NAME = "summary.json"
CONFIG_NAME = "config.yaml"


def run_training(cfg: RunConfig, output_dir: Path | str | None = None) -> TrainingResult:
    """Train with `training.workers` workers for `training.episodes` episodes."""
    out = Path(output_dir) if output_dir is not None else cfg.output_dir(settings.OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    dump_run_config(cfg, out / CONFIG_NAME)

    # Building the environment here surfaces config and input errors before any worker starts.
    env = make_environment(cfg)
    server = ParameterServer(cfg, env.n_features, env.n_actions, out)
    backend = get_backend(cfg.training.backend)
    logger.info(
        "Training %d episodes on %d %s worker(s), output in %s",
        cfg.training.episodes,
        min(cfg.training.workers, cfg.training.episodes),
        backend.name,
        out,
    )
    metrics_path = out / METRICS_NAME
    with metrics_path.open("w", encoding="utf-8") as metrics:
        server.run(backend, metrics)
    checkpoint = server.save(CHECKPOINT_NAME)

    result = TrainingResult(
        checkpoint=str(checkpoint),
        metrics=str(metrics_path),
        summary=str(out / SUMMARY_NAME),
        episodes=server.completed,
        transitions=server.transitions_received,
        updates=server.trainer.updates,
        final_version=server.version,
        restarts=server.restarts,
    )
    (out / SUMMARY_NAME).write_text(result.model_dump_json(indent=2), encoding="utf-8")
    logger.info(
        "Training done: %d episodes, %d transitions, %d updates, weights v%d",
        result.episodes,
        result.transitions,
        result.updates,
        result.final_version,
    )
    return result


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class Evaluation:
    rollout: Rollout
    summary: EvaluationSummary


def percent(value: float) -> str:
    return f"{100.0 * value:.3f}%"


def _relative_error(gt: PropertyVector, new: PropertyVector) -> Optional[float]:
    if gt.has_zero():
        return None
    return property_error(gt, new)


def summarize(rollout: Rollout, cfg: EnvConfig) -> EvaluationSummary:
    ep = rollout.episode
    removed = ep.n_gt - ep.mesh.n_vertices
    companion: PropertyKind = cfg.property_kind.companion
    axis = np.asarray(companion.direction)
    companion_error = _relative_error(
        PropertyVector(ep.ground_truth_forces @ axis, companion),
        PropertyVector(ep.forces @ axis, companion),
    )
    recomputed_error = None
    first, last = rollout.records[0].recomputed, rollout.records[-1].recomputed
    if first:
        recomputed_error = _relative_error(
            PropertyVector(first, cfg.property_kind), PropertyVector(last, cfg.property_kind)
        )
    return EvaluationSummary(
        n_vertices_initial=ep.n_gt,
        n_vertices_final=ep.mesh.n_vertices,
        vertices_removed=removed,
        vertices_removed_pct=percent(removed / ep.n_gt),
        steps=rollout.steps,
        property=cfg.property_kind.value,
        final_error=ep.error,
        final_error_pct=percent(ep.error),
        companion_error_pct=None if companion_error is None else percent(companion_error),
        recomputed_error_pct=None if recomputed_error is None else percent(recomputed_error),
    )


def acting_network(checkpoint: Path | str, n_features: int, n_actions: int, cfg: RunConfig):
    ckpt = load_checkpoint(checkpoint)
    net = QNetwork.from_config(n_features, n_actions, cfg.network)
    load_network_tensors(net, NET_PREFIXES[ckpt.role], ckpt.tensors)
    net.eval()
    return net


def recompute_hook(cfg: RunConfig) -> Optional[RecomputeHook]:
    if cfg.property.recompute_hook is None:
        return None
    return load_recompute_hook(cfg.property.recompute_hook)


def evaluate(
    checkpoint: Path | str,
    mesh_path: Path | str,
    snapshot_path: Path | str,
    cfg: RunConfig,
) -> Evaluation:
    """Greedy rollout of the checkpoint's acting network on one mesh."""
    env_cfg = EnvConfig.from_run_config(cfg)
    ep = reset(mesh_path, snapshot_path, env_cfg, cfg.mesh.physical_tags)
    net = acting_network(checkpoint, env_cfg.n_features, env_cfg.window_size + 1, cfg)

    def choose(e: EpisodeState) -> int:
        with torch.no_grad():
            return greedy_action(net.q_values([e.state])[0])

    rollout = run_policy(ep, env_cfg, choose, recompute_hook(cfg))
    summary = summarize(rollout, env_cfg)
    logger.info(
        "Evaluation: removed %s of vertices, final %s error %s",
        summary.vertices_removed_pct,
        summary.property,
        summary.final_error_pct,
    )
    return Evaluation(rollout=rollout, summary=summary)
