from __future__ import annotations


class MeshDQNError(Exception):
    """Root of every error raised by the package."""


class ConfigError(MeshDQNError):
    def __init__(self, message: str, errors: list[str] | None = None):
        super().__init__(message)
        self.errors = list(errors or [])


# ---------------------------------------------------------------------------
# Mesh
# ---------------------------------------------------------------------------


class MeshError(MeshDQNError):
    pass


class MeshParseError(MeshError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class InvalidMeshError(MeshError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors) or "invalid mesh")
        self.errors = list(errors)


class NonRemovableVertexError(MeshError, ValueError):
    """Raised when asked to remove a boundary vertex (or an index out of range)."""


class BrokenMeshError(MeshError):
    """Retriangulation or smoothing produced a degenerate or inverted triangle."""


# ---------------------------------------------------------------------------
# Fields / flow
# ---------------------------------------------------------------------------


class PointOutsideError(MeshDQNError):
    def __init__(self, point):
        super().__init__(f"point ({point[0]!r}, {point[1]!r}) lies outside the mesh")
        self.point = (float(point[0]), float(point[1]))


class BrokenInterpolationError(MeshDQNError):
    """A destination DOF point could not be located in the source mesh."""


class SnapshotFormatError(MeshDQNError):
    pass


class PropertyError(MeshDQNError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Learning
# ---------------------------------------------------------------------------


class NetworkError(MeshDQNError):
    pass


class CheckpointError(MeshDQNError):
    pass


class ReplayBufferError(MeshDQNError):
    pass


class EpisodeFinishedError(MeshDQNError):
    pass


class InsufficientVerticesError(MeshDQNError):
    pass


class TrainingError(MeshDQNError):
    pass
