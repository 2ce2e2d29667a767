from meshdqn.mesh.edit import remove_vertex
from meshdqn.mesh.generate import gen_channel_mesh, obstacle_channel_mesh
from meshdqn.mesh.models import DEFAULT_PHYSICAL_TAGS, BoundaryTag, TriMesh
from meshdqn.mesh.msh import read_msh, write_msh
from meshdqn.mesh.smoothing import smooth

__all__ = [
    "DEFAULT_PHYSICAL_TAGS",
    "BoundaryTag",
    "TriMesh",
    "gen_channel_mesh",
    "obstacle_channel_mesh",
    "read_msh",
    "remove_vertex",
    "smooth",
    "write_msh",
]
