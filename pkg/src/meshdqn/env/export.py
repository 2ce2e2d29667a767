from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from meshdqn.env.models import TrajectoryRecord


def trajectory_header(n_snapshots: int, recomputed: bool = False) -> list[str]:
    header = ["step", "action", "error", "reward", "n_vertices"]
    header += [f"drag_{k}" for k in range(1, n_snapshots + 1)]
    header += [f"lift_{k}" for k in range(1, n_snapshots + 1)]
    if recomputed:
        header += [f"recomputed_{k}" for k in range(1, n_snapshots + 1)]
    return header


def trajectory_rows(records: Sequence[TrajectoryRecord]) -> list[list[str]]:
    rows = []
    for r in records:
        row = [str(r.step), r.action, repr(r.error), repr(r.reward), str(r.n_vertices)]
        row += [repr(v) for v in (*r.drag, *r.lift, *r.recomputed)]
        rows.append(row)
    return rows


def write_trajectory_csv(records: Sequence[TrajectoryRecord], path: Path | str) -> Path:
    """One row per step, the initial state first."""
    if not records:
        raise ValueError("no trajectory records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = trajectory_header(len(records[0].drag), bool(records[0].recomputed))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(trajectory_rows(records))
    return path


def read_trajectory_csv(path: Path | str) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
