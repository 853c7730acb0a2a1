"""Target mesh size h(x): constant, or graded away from the boundary."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .mesh import SurfaceMesh, SurfacePoint


@dataclass(frozen=True)
class SizeField:
    """Evaluates the target edge length anywhere on the surface.

    The graded variant grows linearly with the edge-graph distance to the
    boundary: h = min(h_max, h_min + gradation * d), so |dh/dx| <= gradation
    along the surface.
    """

    kind: str  # "constant" | "graded"
    h0: float = 0.0
    h_min: float = 0.0
    h_max: float = 0.0
    gradation: float = 0.0
    boundary_distance: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @classmethod
    def constant(cls, h0: float) -> "SizeField":
        if h0 <= 0:
            raise ValueError("size must be positive")
        return cls(kind="constant", h0=h0, h_min=h0, h_max=h0)

    @classmethod
    def graded(cls, mesh: SurfaceMesh, h_min: float, h_max: float, gradation: float) -> "SizeField":
        if not 0 < h_min <= h_max:
            raise ValueError("need 0 < h_min <= h_max")
        if gradation < 0:
            raise ValueError("gradation must be non-negative")
        dist = boundary_distances(mesh)
        # cap distances so h saturates at h_max without inf arithmetic
        if gradation > 0:
            dist = np.minimum(dist, (h_max - h_min) / gradation + 1.0)
        else:
            dist = np.zeros_like(dist)
        return cls(
            kind="graded", h_min=h_min, h_max=h_max, gradation=gradation,
            boundary_distance=dist,
        )

    def eval(self, mesh: SurfaceMesh, p: SurfacePoint) -> float:
        if self.kind == "constant":
            return self.h0
        d = float(p.bary @ self.boundary_distance[mesh.triangles[p.triangle]])
        return float(min(self.h_max, max(self.h_min, self.h_min + self.gradation * d)))

    def kernel_args(self):
        """(kind, h0, h_min, h_max, gradation, per-vertex distance) for kernels."""
        if self.kind == "constant":
            return 0, self.h0, self.h0, self.h0, 0.0, np.zeros(1)
        return 1, 0.0, self.h_min, self.h_max, self.gradation, self.boundary_distance


def boundary_distances(mesh: SurfaceMesh) -> np.ndarray:
    """Per-vertex multi-source Dijkstra distance to the boundary over mesh edges."""
    sources = mesh.boundary_vertices()
    n = mesh.n_vertices
    if len(sources) == 0:
        return np.full(n, np.inf)
    t = mesh.triangles
    pairs = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    w = np.linalg.norm(mesh.vertices[pairs[:, 0]] - mesh.vertices[pairs[:, 1]], axis=1)
    graph = coo_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return dijkstra(graph, directed=False, indices=sources, min_only=True)
