"""Snapshot files.

Binary layout, little-endian: magic "MDQS", version u32, n_snapshots u32,
velocity_order u32, n_velocity_dofs u64, n_pressure_dofs u64; then for each
snapshot the x velocities, y velocities and pressures as f64 arrays.

The CSV import takes blocks of `vertex_id,ux,uy,p` rows, one block per
snapshot, separated by blank lines. It yields P1 velocity unless P2 is asked for,
in which case each edge midpoint takes the mean of its endpoints.
"""

from __future__ import annotations

import csv
import io
import logging
import struct
from pathlib import Path

import numpy as np

from meshdqn.errors import SnapshotFormatError
from meshdqn.fields.models import SnapshotSet, n_velocity_dofs
from meshdqn.mesh.models import TriMesh

logger = logging.getLogger(__name__)

MAGIC = b"MDQS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQQ")
_F64 = np.dtype("<f8")


def encode_snapshots(snaps: SnapshotSet) -> bytes:
    out = [
        _HEADER.pack(
            MAGIC,
            VERSION,
            snaps.n_snapshots,
            snaps.velocity_order,
            snaps.n_velocity_dofs,
            snaps.mesh.n_vertices,
        )
    ]
    for s in range(snaps.n_snapshots):
        out.append(snaps.velocity[s, 0].astype(_F64).tobytes())
        out.append(snaps.velocity[s, 1].astype(_F64).tobytes())
        out.append(snaps.pressure[s].astype(_F64).tobytes())
    return b"".join(out)


def decode_snapshots(data: bytes, mesh: TriMesh) -> SnapshotSet:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("snapshot file is shorter than its header")
    magic, version, count, order, nv, np_ = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot file version {version}")
    if count < 1:
        raise SnapshotFormatError("snapshot file holds no snapshots")
    if nv != n_velocity_dofs(mesh, order) or np_ != mesh.n_vertices:
        raise SnapshotFormatError(
            f"snapshot DOF counts ({nv}, {np_}) do not match the mesh "
            f"({n_velocity_dofs(mesh, order)}, {mesh.n_vertices}) for order {order}"
        )
    expected = _HEADER.size + 8 * count * (2 * nv + np_)
    if len(data) != expected:
        raise SnapshotFormatError(f"snapshot file has {len(data)} bytes, expected {expected}")
    body = np.frombuffer(data, dtype=_F64, offset=_HEADER.size).reshape(count, 2 * nv + np_)
    velocity = body[:, : 2 * nv].reshape(count, 2, nv)
    pressure = body[:, 2 * nv :]
    return SnapshotSet(mesh, velocity, pressure, int(order))


def write_snapshots(snaps: SnapshotSet, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshots(snaps))
    return path


def read_snapshots(path: Path | str, mesh: TriMesh) -> SnapshotSet:
    path = Path(path)
    snaps = decode_snapshots(path.read_bytes(), mesh)
    logger.debug(
        "Read %d snapshots (order %d) from %s", snaps.n_snapshots, snaps.velocity_order, path
    )
    return snaps


def parse_snapshots_csv(text: str, mesh: TriMesh, velocity_order: int = 1) -> SnapshotSet:
    if velocity_order not in (1, 2):
        raise SnapshotFormatError(f"unsupported velocity order {velocity_order}")
    index = {int(vid): k for k, vid in enumerate(mesh.vertex_ids)}
    blocks: list[list[tuple[int, list[str]]]] = [[]]
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            if blocks[-1]:
                blocks.append([])
            continue
        if row[0].strip() == "vertex_id":
            continue
        blocks[-1].append((lineno, row))
    if not blocks[-1]:
        blocks.pop()
    if not blocks:
        raise SnapshotFormatError("CSV holds no snapshot rows")

    V = mesh.n_vertices
    velocity = np.full((len(blocks), 2, V), np.nan)
    pressure = np.full((len(blocks), V), np.nan)
    for s, block in enumerate(blocks):
        for lineno, row in block:
            if len(row) != 4:
                raise SnapshotFormatError(f"line {lineno}: expected 4 columns, got {len(row)}")
            try:
                vid = int(row[0])
                ux, uy, p = (float(x) for x in row[1:])
            except ValueError as exc:
                raise SnapshotFormatError(f"line {lineno}: {exc}") from exc
            if vid not in index:
                raise SnapshotFormatError(f"line {lineno}: unknown vertex id {vid}")
            k = index[vid]
            if not np.isnan(pressure[s, k]):
                raise SnapshotFormatError(f"line {lineno}: vertex id {vid} repeated")
            velocity[s, :, k] = (ux, uy)
            pressure[s, k] = p
        missing = np.flatnonzero(np.isnan(pressure[s]))
        if len(missing):
            raise SnapshotFormatError(
                f"snapshot {s}: {len(missing)} vertices without values "
                f"(first id {int(mesh.vertex_ids[missing[0]])})"
            )
    if velocity_order == 2:
        edges = mesh.edges
        midpoints = 0.5 * (velocity[:, :, edges[:, 0]] + velocity[:, :, edges[:, 1]])
        velocity = np.concatenate([velocity, midpoints], axis=2)
    return SnapshotSet(mesh, velocity, pressure, velocity_order=velocity_order)


def read_snapshots_csv(path: Path | str, mesh: TriMesh, velocity_order: int = 1) -> SnapshotSet:
    text = Path(path).read_text(encoding="utf-8")
    return parse_snapshots_csv(text, mesh, velocity_order)


def load_snapshots(
    path: Path | str, mesh: TriMesh, velocity_order: int | None = None
) -> SnapshotSet:
    """
    Binary snapshot file, or CSV when the suffix is .csv. The binary header
    carries its own order; `velocity_order` (default 1) only shapes the CSV import.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_snapshots_csv(path, mesh, velocity_order or 1)
    return read_snapshots(path, mesh)
