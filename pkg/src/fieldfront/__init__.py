"""fieldfront: surface remeshing by frontal point insertion along direction fields.

Regenerates high-quality triangular (asterisk field) or quad-dominant
(cross field) meshes from an input triangulation: frontal point insertion
steered by the field, Delaunay triangulation, right-angled-quality
optimization, and triangle-pair recombination.
"""

from .errors import (
    ConfigError,
    DegenerateTriangleError,
    FieldConvergenceError,
    MeshError,
    MeshParseError,
    NonManifoldError,
    WalkBoundaryError,
    WalkError,
    WalkStepLimitError,
)
from .estimator import Remesher
from .field import DirectionField, TangentFrames, compute_field, sample_directions
from .frontal import (
    GeneratedPoint,
    GeneratedPoints,
    GenerationStats,
    PointRegistry,
    filter_candidate,
    generate_points,
    intersect_walk,
    seed_boundary,
)
from .io import load_mesh, write_obj, write_vtk
from .mesh import BoundaryLoop, SurfaceMesh, SurfacePoint, make_icosphere
from .quality import (
    optimize_cavities,
    q_alignment,
    q_angle,
    q_edge_ratio,
    radius_ratio,
    right_angled_quality,
)
from .recombine import quad_corner_quality, recombine
from .sizing import SizeField
from .triangulate import OutputMesh, triangulate

__version__ = "0.1.0"

__all__ = [
    "BoundaryLoop",
    "ConfigError",
    "DegenerateTriangleError",
    "DirectionField",
    "FieldConvergenceError",
    "GeneratedPoint",
    "GeneratedPoints",
    "GenerationStats",
    "MeshError",
    "MeshParseError",
    "NonManifoldError",
    "OutputMesh",
    "PointRegistry",
    "Remesher",
    "SizeField",
    "SurfaceMesh",
    "SurfacePoint",
    "TangentFrames",
    "WalkBoundaryError",
    "WalkError",
    "WalkStepLimitError",
    "compute_field",
    "filter_candidate",
    "generate_points",
    "intersect_walk",
    "load_mesh",
    "make_icosphere",
    "optimize_cavities",
    "q_alignment",
    "q_angle",
    "q_edge_ratio",
    "quad_corner_quality",
    "radius_ratio",
    "recombine",
    "right_angled_quality",
    "sample_directions",
    "seed_boundary",
    "triangulate",
    "write_obj",
    "write_vtk",
]
