"""Shared CLI plumbing: options, config resolution and error-to-exit-code mapping."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

import typer

from meshdqn.config.run_config import RunConfig, load_run_config
from meshdqn.config.settings import settings
from meshdqn.errors import ConfigError, MeshDQNError

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_RUNTIME = 3

ConfigOption = typer.Option(
    None,
    "--config",
    "-c",
    help="Run configuration YAML; defaults apply for every missing key.",
)
SeedOption = typer.Option(None, "--seed", min=0, help="Override training.seed.")
WorkersOption = typer.Option(None, "--workers", min=1, help="Override training.workers.")
EpisodesOption = typer.Option(None, "--episodes", min=0, help="Override training.episodes.")
OutOption = typer.Option(None, "--out", help="Output directory (overrides paths.output_dir).")


def resolve_config(
    config: Optional[Path],
    *,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    episodes: Optional[int] = None,
    out: Optional[Path] = None,
) -> RunConfig:
    path = config or (Path(settings.CONFIG) if settings.CONFIG else None)
    cfg = load_run_config(path)
    return cfg.with_overrides(seed=seed, workers=workers, episodes=episodes, output_dir=out)


def output_dir(cfg: RunConfig) -> Path:
    out = cfg.output_dir(settings.OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def require_inputs(cfg: RunConfig) -> tuple[Path, Path]:
    if cfg.paths.mesh is None or cfg.paths.snapshots is None:
        raise ConfigError("paths.mesh and paths.snapshots must be set")
    for path in (cfg.paths.mesh, cfg.paths.snapshots):
        if not Path(path).is_file():
            raise ConfigError(f"Input file not found: {path}")
    return Path(cfg.paths.mesh), Path(cfg.paths.snapshots)


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Config and file problems exit 2, every other package error exits 3."""
    try:
        yield
    except ConfigError as exc:
        typer.echo(f"[error] {exc}", err=True)
        for e in exc.errors:
            typer.echo(f"[error] {e}", err=True)
        raise typer.Exit(EXIT_USAGE)
    except OSError as exc:
        typer.echo(f"[error] {exc}", err=True)
        raise typer.Exit(EXIT_USAGE)
    except MeshDQNError as exc:
        logger.debug("Command failed", exc_info=True)
        typer.echo(f"[error] {exc}", err=True)
        raise typer.Exit(EXIT_RUNTIME)
