from meshdqn.fields.interpolate import evaluate, evaluate_many, interpolate, shape_functions
from meshdqn.fields.io import load_snapshots, read_snapshots, write_snapshots
from meshdqn.fields.locate import locate, locate_exhaustive
from meshdqn.fields.models import PointLocation, ScalarField, SnapshotSet

__all__ = [
    "PointLocation",
    "ScalarField",
    "SnapshotSet",
    "evaluate",
    "evaluate_many",
    "interpolate",
    "load_snapshots",
    "locate",
    "locate_exhaustive",
    "read_snapshots",
    "shape_functions",
    "write_snapshots",
]
