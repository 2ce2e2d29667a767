from __future__ import annotations

import json

import numpy as np
import pytest

from meshdqn.config.run_config import RunConfig, load_run_config
from meshdqn.env.baselines import INITIAL_LABEL, random_rollout
from meshdqn.env.environment import EnvConfig, start_episode
from meshdqn.errors import ConfigError
from meshdqn.fields.io import load_snapshots, write_snapshots
from meshdqn.flow.analytic import AnalyticParams, analytic_snapshots
from meshdqn.mesh.generate import obstacle_channel_mesh
from meshdqn.mesh.msh import write_msh
from meshdqn.nn.checkpoint import load_checkpoint
from meshdqn.orchestrator.models import EpisodeMetrics, TrainingResult
from meshdqn.orchestrator.training import evaluate, percent, run_training
from meshdqn.orchestrator.worker import episode_rng


def test_percent():
    assert percent(0.05023) == "5.023%"
    assert percent(0.0) == "0.000%"


def test_episode_rng_depends_on_seed_and_episode():
    assert episode_rng(0, 3).integers(1 << 30) == episode_rng(0, 3).integers(1 << 30)
    assert episode_rng(0, 3).integers(1 << 30) != episode_rng(0, 4).integers(1 << 30)


def test_toy_training_writes_outputs(toy_cfg, tmp_path):
    out = tmp_path / "run"
    result = run_training(toy_cfg, out)
    assert result.episodes == 20
    assert result.final_version == 21
    for name in ("config.yaml", "metrics.jsonl", "checkpoint.mdqc", "summary.json"):
        assert (out / name).is_file()
    lines = (out / "metrics.jsonl").read_text().splitlines()
    assert len(lines) == 20
    assert all(EpisodeMetrics.model_validate_json(line) for line in lines)
    assert TrainingResult.model_validate_json((out / "summary.json").read_text()) == result
    assert load_run_config(out / "config.yaml") == toy_cfg
    assert load_checkpoint(result.checkpoint).weight_version == 21


def test_single_worker_runs_are_reproducible(toy_cfg, tmp_path):
    run_training(toy_cfg, tmp_path / "a")
    run_training(toy_cfg, tmp_path / "b")
    a = (tmp_path / "a" / "metrics.jsonl").read_bytes()
    b = (tmp_path / "b" / "metrics.jsonl").read_bytes()
    assert a == b
    ca = load_checkpoint(tmp_path / "a" / "checkpoint.mdqc")
    cb = load_checkpoint(tmp_path / "b" / "checkpoint.mdqc")
    assert ca.tensors.keys() == cb.tensors.keys()
    assert all(ca.tensors[k].equal(cb.tensors[k]) for k in ca.tensors)


def test_zero_episodes_checkpoints_the_initial_weights(toy_cfg, tmp_path):
    result = run_training(toy_cfg.with_overrides(episodes=0), tmp_path / "zero")
    assert result.episodes == 0
    assert result.final_version == 1
    assert (tmp_path / "zero" / "metrics.jsonl").read_text() == ""


def test_missing_inputs_fail_before_workers_start(run_cfg, tmp_path):
    cfg = run_cfg.model_copy(
        update={"paths": run_cfg.paths.model_copy(update={"snapshots": tmp_path / "none"})}
    )
    with pytest.raises(ConfigError, match="not found"):
        run_training(cfg, tmp_path / "bad")


def test_mesh_training_and_evaluation(run_cfg, fixture_files, tmp_path):
    result = run_training(run_cfg)
    out = tmp_path / "out"
    assert result.checkpoint == str(out / "checkpoint.mdqc")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["episodes"] == 2

    mesh_path, snapshots_path = fixture_files
    evaluation = evaluate(result.checkpoint, mesh_path, snapshots_path, run_cfg)
    rollout, headline = evaluation.rollout, evaluation.summary
    assert rollout.records[0].action == INITIAL_LABEL
    assert rollout.episode.done
    assert headline.n_vertices_initial == 106
    assert headline.vertices_removed == 106 - rollout.episode.mesh.n_vertices
    assert headline.property == "drag"
    assert headline.final_error_pct.endswith("%")
    assert headline.steps == rollout.steps


@pytest.mark.slow
def test_trained_agent_beats_random_removal(tmp_path):
    mesh = obstacle_channel_mesh()
    params = AnalyticParams(n_snapshots=2, velocity_order=1)
    mesh_path = write_msh(mesh, tmp_path / "mesh.msh")
    snaps = analytic_snapshots("poiseuille", mesh, params)
    snapshots_path = write_snapshots(snaps, tmp_path / "snapshots.mdqs")
    cfg = RunConfig.model_validate(
        {
            "paths": {"mesh": str(mesh_path), "snapshots": str(snapshots_path)},
            "environment": {"window_size": 40, "n_snapshots": 2, "velocity_order": 1},
            "property": {"tag": "wall"},
            "network": {"width": 32, "sage_layers": 2, "gcn_layers": 2},
            "training": {
                "backend": "thread",
                "workers": 4,
                "episodes": 600,
                "warmup": 200,
                "epsilon_decay_steps": 5000,
                "checkpoint_every": 0,
                "poll_seconds": 0.1,
            },
        }
    )
    result = run_training(cfg, tmp_path / "run")
    evaluation = evaluate(result.checkpoint, mesh_path, snapshots_path, cfg)
    final = evaluation.rollout.episode
    assert final.removals >= 0.05 * mesh.n_vertices
    assert final.error < 0.001

    env_cfg = EnvConfig.from_run_config(cfg)
    start = start_episode(mesh, load_snapshots(snapshots_path, mesh), env_cfg)
    random_errors = [
        random_rollout(start, env_cfg, np.random.default_rng(seed)).episode.error
        for seed in range(20)
    ]
    assert final.error <= float(np.median(random_errors))
