from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from meshdqn.cli.common import (
    ConfigOption,
    EpisodesOption,
    OutOption,
    SeedOption,
    WorkersOption,
    exit_on_error,
    output_dir,
    resolve_config,
)
from meshdqn.orchestrator.training import run_training


def train(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    workers: Optional[int] = WorkersOption,
    episodes: Optional[int] = EpisodesOption,
    out: Optional[Path] = OutOption,
) -> None:
    """Train a Double-DQN agent; writes checkpoint, metrics and summary."""
    with exit_on_error():
        cfg = resolve_config(config, seed=seed, workers=workers, episodes=episodes, out=out)
        result = run_training(cfg, output_dir(cfg))
    typer.echo(f"checkpoint: {result.checkpoint}")
    typer.echo(f"metrics:    {result.metrics}")
    typer.echo(f"summary:    {result.summary}")
