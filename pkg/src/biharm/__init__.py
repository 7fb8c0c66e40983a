"""Adaptive C0 interior penalty solver for fourth-order problems with point loads."""

from .api import AdaptiveC0IPSolver, C0IPSolver
from .assembly import ProblemSpec, assemble_system
from .exceptions import (BiharmError, ConfigurationError, GeometryError, LocationError,
                         MeshError, SearchWindowError, SolverError)
from .mesh import Mesh, bisect, dump_mesh, load_mesh, lshape_mesh, square_mesh, uniform_refine
from .presets import PRESETS, get_preset
from .regularity import singular_exponent
from .space import FeSpace

__all__ = [
    "AdaptiveC0IPSolver", "C0IPSolver", "ProblemSpec", "assemble_system",
    "BiharmError", "ConfigurationError", "GeometryError", "LocationError", "MeshError",
    "SearchWindowError", "SolverError", "Mesh", "bisect", "dump_mesh", "load_mesh",
    "lshape_mesh", "square_mesh", "uniform_refine", "PRESETS", "get_preset",
    "singular_exponent", "FeSpace",
]
__version__ = "0.1.0"
