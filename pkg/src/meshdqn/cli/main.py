from __future__ import annotations

import logging

import typer
from dotenv import load_dotenv

from meshdqn.cli.fixture import fixture
from meshdqn.cli.rollout import baseline, rollout
from meshdqn.cli.train import train
from meshdqn.config.settings import settings


def build_app() -> typer.Typer:
    app = typer.Typer(
        add_completion=True, no_args_is_help=True, help="MeshDQN mesh coarsening CLI"
    )
    app.command("train")(train)
    app.command("rollout")(rollout)
    app.command("baseline")(baseline)
    app.command("fixture")(fixture)
    return app


def create_app():
    load_dotenv()
    logging.basicConfig(
        level=settings.LOG.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    app = build_app()
    app()


if __name__ == "__main__":
    app = create_app()
