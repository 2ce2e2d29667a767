"""Analytic fixture generation.

meshdqn-cli fixture poiseuille --out ./fixture --obstacle 6,4,9,8

Writes mesh.msh, snapshots.mdqs and a config.yaml that points at them, so
`meshdqn-cli train --config ./fixture/config.yaml` runs without edits.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from meshdqn.cli.common import exit_on_error
from meshdqn.config.run_config import RunConfig, dump_run_config
from meshdqn.flow.analytic import AnalyticKind, AnalyticParams, analytic_snapshots
from meshdqn.fields.io import write_snapshots
from meshdqn.mesh.generate import Obstacle, gen_channel_mesh
from meshdqn.mesh.models import BoundaryTag, TriMesh
from meshdqn.mesh.msh import write_msh

MESH_NAME = "mesh.msh"
SNAPSHOTS_NAME = "snapshots.mdqs"
CONFIG_NAME = "config.yaml"


def parse_obstacle(value: Optional[str]) -> Optional[Obstacle]:
    if value is None:
        return None
    try:
        i0, j0, i1, j1 = (int(part) for part in value.split(","))
    except ValueError as e:
        raise typer.BadParameter("expected four integers i0,j0,i1,j1") from e
    return (i0, j0, i1, j1)


def fixture_config(
    mesh: TriMesh,
    mesh_path: Path,
    snapshots_path: Path,
    params: AnalyticParams,
    anchor: BoundaryTag,
) -> RunConfig:
    """Defaults, pointed at the fixture files, with a window the mesh can fill."""
    data = RunConfig().model_dump(mode="json")
    n_interior = int(mesh.interior_mask.sum())
    data["paths"]["mesh"] = str(mesh_path.resolve())
    data["paths"]["snapshots"] = str(snapshots_path.resolve())
    data["mesh"]["anchor_tag"] = anchor.value
    # Closed-form fields are exact flow solutions, so the net force on a closed
    # obstacle vanishes; the channel walls carry the drag instead.
    data["property"]["tag"] = BoundaryTag.WALL.value
    data["environment"]["n_snapshots"] = params.n_snapshots
    data["environment"]["velocity_order"] = params.velocity_order
    data["environment"]["window_size"] = min(
        data["environment"]["window_size"], max(1, n_interior // 2)
    )
    data["fluid"] = params.fluid.model_dump()
    return RunConfig.model_validate(data)


def fixture(
    kind: AnalyticKind = typer.Argument(AnalyticKind.poiseuille, help="Analytic flow field."),
    out: Path = typer.Option(Path("./fixture"), "--out", help="Directory for the fixture files."),
    nx: int = typer.Option(21, "--nx", min=2, help="Grid points along the channel."),
    ny: int = typer.Option(13, "--ny", min=2, help="Grid points across the channel."),
    length: Optional[float] = typer.Option(
        None, "--length", help="Channel length (default keeps square cells)."
    ),
    height: float = typer.Option(2.0, "--height", help="Channel height."),
    obstacle: Optional[str] = typer.Option(
        None, "--obstacle", help="Removed cell block i0,j0,i1,j1, tagged airfoil."
    ),
    u_max: float = typer.Option(1.0, "--u-max", help="Peak (or free-stream) velocity."),
    snapshots: int = typer.Option(5, "--snapshots", min=1, help="Number of snapshots."),
    order: int = typer.Option(2, "--order", min=1, max=2, help="Velocity element order."),
) -> None:
    """Write a channel mesh with closed-form snapshots and a matching config."""
    block = parse_obstacle(obstacle)
    with exit_on_error():
        try:
            mesh = gen_channel_mesh(
                nx,
                ny,
                length=length or height * (nx - 1) / (ny - 1),
                height=height,
                obstacle=block,
            )
        except ValueError as e:
            raise typer.BadParameter(str(e)) from e
        params = AnalyticParams(u_max=u_max, n_snapshots=snapshots, velocity_order=order)
        snaps = analytic_snapshots(kind, mesh, params)
        mesh_path = write_msh(mesh, out / MESH_NAME)
        snapshots_path = write_snapshots(snaps, out / SNAPSHOTS_NAME)
        anchor = BoundaryTag.AIRFOIL if block is not None else BoundaryTag.WALL
        cfg = fixture_config(mesh, mesh_path, snapshots_path, params, anchor)
        config_path = dump_run_config(cfg, out / CONFIG_NAME)
    for path in (mesh_path, snapshots_path, config_path):
        typer.echo(f"wrote {path}")
