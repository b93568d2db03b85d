"""2D finite elements with adaptively inserted cracking elements.

Linear meshes are upgraded in place: elements that crack receive edge
nodes, a center node carrying the crack-opening unknowns, and an embedded
cohesive discontinuity; partially enriched neighbors are handled by a
virtual-node fold of the quadratic basis.
"""

from .cohesive_law import CrackHistory, Material
from .mesh import Mesh, load_mesh, save_mesh
from .solver import RunResult, Simulation, SolverSettings, schedule_targets

__version__ = "0.1.0"

__all__ = [
    "CrackHistory",
    "Material",
    "Mesh",
    "RunResult",
    "Simulation",
    "SolverSettings",
    "__version__",
    "load_mesh",
    "save_mesh",
    "schedule_targets",
]
