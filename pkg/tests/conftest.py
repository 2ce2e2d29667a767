from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from meshdqn.config.run_config import RunConfig, dump_run_config
from meshdqn.config.settings import settings
from meshdqn.env.environment import EnvConfig
from meshdqn.fields.io import write_snapshots
from meshdqn.fields.models import SnapshotSet
from meshdqn.flow.analytic import AnalyticParams, analytic_snapshots
from meshdqn.mesh.generate import gen_channel_mesh
from meshdqn.mesh.models import BoundaryTag, TriMesh
from meshdqn.mesh.msh import write_msh

# 0.5 x 0.5 cells on a 4 x 3 channel with a 1 x 1 block removed in the middle.
OBSTACLE = (3, 2, 5, 4)


def pytest_collection_modifyitems(config, items):
    if settings.RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="set MESHDQN_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def square_mesh() -> TriMesh:
    return gen_channel_mesh(2, 2)


@pytest.fixture
def channel_mesh() -> TriMesh:
    return gen_channel_mesh(5, 5)


@pytest.fixture
def obstacle_mesh() -> TriMesh:
    return gen_channel_mesh(9, 7, length=4.0, height=3.0, obstacle=OBSTACLE)


@pytest.fixture
def flow_params() -> AnalyticParams:
    return AnalyticParams(n_snapshots=2, velocity_order=2)


@pytest.fixture
def obstacle_snapshots(obstacle_mesh: TriMesh, flow_params: AnalyticParams) -> SnapshotSet:
    return analytic_snapshots("poiseuille", obstacle_mesh, flow_params)


@pytest.fixture
def p1_snapshots(obstacle_mesh: TriMesh) -> SnapshotSet:
    """P1 velocity cannot represent the parabola, so removals change the drag."""
    params = AnalyticParams(n_snapshots=2, velocity_order=1)
    return analytic_snapshots("poiseuille", obstacle_mesh, params)


@pytest.fixture
def p1_cfg() -> EnvConfig:
    return EnvConfig(
        window_size=8,
        n_snapshots=2,
        velocity_order=1,
        anchor_tag=BoundaryTag.AIRFOIL,
        property_tag=BoundaryTag.WALL,
    )


@pytest.fixture
def env_cfg() -> EnvConfig:
    return EnvConfig(
        window_size=8,
        n_snapshots=2,
        anchor_tag=BoundaryTag.AIRFOIL,
        property_tag=BoundaryTag.WALL,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def fixture_files(
    tmp_path: Path, obstacle_mesh: TriMesh, obstacle_snapshots: SnapshotSet
) -> tuple[Path, Path]:
    mesh_path = write_msh(obstacle_mesh, tmp_path / "mesh.msh")
    snapshots_path = write_snapshots(obstacle_snapshots, tmp_path / "snapshots.mdqs")
    return mesh_path, snapshots_path


def small_network() -> dict:
    return {"width": 8, "sage_layers": 1, "gcn_layers": 1, "topk_ratio": 0.5}


@pytest.fixture
def run_cfg(tmp_path: Path, fixture_files: tuple[Path, Path]) -> RunConfig:
    """A mesh run small enough to train a few episodes on threads."""
    mesh_path, snapshots_path = fixture_files
    return RunConfig.model_validate(
        {
            "paths": {
                "mesh": str(mesh_path),
                "snapshots": str(snapshots_path),
                "output_dir": str(tmp_path / "out"),
            },
            "environment": {"window_size": 8, "n_snapshots": 2},
            "property": {"tag": "wall"},
            "network": small_network(),
            "training": {
                "backend": "thread",
                "workers": 1,
                "episodes": 2,
                "batch_size": 4,
                "warmup": 4,
                "checkpoint_every": 0,
                "poll_seconds": 0.05,
            },
        }
    )


@pytest.fixture
def toy_cfg(tmp_path: Path) -> RunConfig:
    return RunConfig.model_validate(
        {
            "paths": {"output_dir": str(tmp_path / "toy")},
            "network": small_network(),
            "training": {
                "environment": "toy",
                "backend": "thread",
                "workers": 1,
                "episodes": 20,
                "batch_size": 4,
                "warmup": 4,
                "swap_every": 5,
                "checkpoint_every": 0,
                "poll_seconds": 0.05,
            },
        }
    )


@pytest.fixture
def config_file(tmp_path: Path, run_cfg: RunConfig) -> Path:
    return dump_run_config(run_cfg, tmp_path / "config.yaml")
