"""Intrinsic P1 finite elements on triangulated surfaces with boundary."""

from .assembly import OperatorSet, assemble, shifted_pencil, triangle_geometry
from .generators import (
    build_cap_mesh,
    build_disk_mesh,
    build_hyperbolic_ball_mesh,
    build_square_mesh,
)
from .io import load_mesh, load_metric
from .mesh import (
    DiscreteMetric,
    Measures,
    SimplicialMesh,
    TopologyReport,
    measures,
    topology,
    validate_metric,
)

__all__ = [
    "DiscreteMetric",
    "Measures",
    "OperatorSet",
    "SimplicialMesh",
    "TopologyReport",
    "assemble",
    "build_cap_mesh",
    "build_disk_mesh",
    "build_hyperbolic_ball_mesh",
    "build_square_mesh",
    "load_mesh",
    "load_metric",
    "measures",
    "shifted_pencil",
    "topology",
    "triangle_geometry",
    "validate_metric",
]

__version__ = "0.1.0"
