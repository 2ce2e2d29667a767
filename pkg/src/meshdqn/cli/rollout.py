"""Rollout and baseline commands. Both write the same three outputs:

    coarsened.msh      the final mesh
    trajectory.csv     one row per step (initial state first)
    evaluation.json    removal and error percentages
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from meshdqn.cli.common import (
    ConfigOption,
    OutOption,
    SeedOption,
    exit_on_error,
    output_dir,
    require_inputs,
    resolve_config,
)
from meshdqn.config.run_config import RunConfig
from meshdqn.env.baselines import Rollout, greedy_rollout, random_rollout
from meshdqn.env.environment import EnvConfig, reset
from meshdqn.env.export import write_trajectory_csv
from meshdqn.mesh.msh import write_msh
from meshdqn.orchestrator.models import EvaluationSummary
from meshdqn.orchestrator.training import evaluate, recompute_hook, summarize

MESH_NAME = "coarsened.msh"
TRAJECTORY_NAME = "trajectory.csv"
EVALUATION_NAME = "evaluation.json"


class Strategy(str, Enum):
    random = "random"
    greedy = "greedy"


def write_outputs(
    rollout: Rollout, summary: EvaluationSummary, cfg: RunConfig, out: Path
) -> list[Path]:
    mesh_path = write_msh(rollout.episode.mesh, out / MESH_NAME, cfg.mesh.physical_tags)
    csv_path = write_trajectory_csv(rollout.records, out / TRAJECTORY_NAME)
    summary_path = out / EVALUATION_NAME
    summary_path.write_text(summary.model_dump_json(indent=2), encoding="utf-8")
    return [mesh_path, csv_path, summary_path]


def _report(summary: EvaluationSummary, paths: list[Path]) -> None:
    typer.echo(
        f"removed {summary.vertices_removed} of {summary.n_vertices_initial} vertices "
        f"({summary.vertices_removed_pct}), {summary.property} error {summary.final_error_pct}"
    )
    for path in paths:
        typer.echo(f"wrote {path}")


def rollout(
    checkpoint: Path = typer.Argument(
        ..., exists=True, dir_okay=False, readable=True, help="Checkpoint written by train."
    ),
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
) -> None:
    """Greedy rollout of a trained agent on the configured mesh."""
    with exit_on_error():
        cfg = resolve_config(config, out=out)
        mesh_path, snapshot_path = require_inputs(cfg)
        evaluation = evaluate(checkpoint, mesh_path, snapshot_path, cfg)
        paths = write_outputs(evaluation.rollout, evaluation.summary, cfg, output_dir(cfg))
    _report(evaluation.summary, paths)


def baseline(
    strategy: Strategy = typer.Argument(..., help="random or greedy removal."),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
) -> None:
    """Run a non-learning baseline with the same outputs as rollout."""
    with exit_on_error():
        cfg = resolve_config(config, seed=seed, out=out)
        mesh_path, snapshot_path = require_inputs(cfg)
        env_cfg = EnvConfig.from_run_config(cfg)
        ep = reset(mesh_path, snapshot_path, env_cfg, cfg.mesh.physical_tags)
        hook = recompute_hook(cfg)
        if strategy is Strategy.greedy:
            result = greedy_rollout(ep, env_cfg, hook)
        else:
            rng = np.random.default_rng(cfg.training.seed)
            result = random_rollout(ep, env_cfg, rng, hook)
        summary = summarize(result, env_cfg)
        paths = write_outputs(result, summary, cfg, output_dir(cfg))
    _report(summary, paths)
