"""Triangle surface mesh with adjacency, barycentric geometry and boundary walks.

The mesh is stored as flat numpy arrays (vertex positions, vertex-index
triples, per-edge neighbor indices) rather than a half-edge structure: the
algorithms built on top only ever need neighbor-across-edge and vertex
stars, and flat arrays keep the hot loops compilable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTriangleError, MeshError, NonManifoldError

# Edge k of a triangle is the edge opposite local vertex k:
#   edge 0 = (v1, v2), edge 1 = (v2, v0), edge 2 = (v0, v1).
# This pairing is what makes barycentric-sign walking work: a negative
# lambda_k means the query point lies beyond edge k.
EDGE_VERTICES = np.array([[1, 2], [2, 0], [0, 1]], dtype=np.int64)

# Triangles with squared area below this fraction of the squared
# bounding-box diagonal are rejected as degenerate (scale free).
DEGENERATE_AREA_REL = 1e-14

BARY_SUM_TOL = 1e-10
BARY_RANGE_EPS = 1e-9


@dataclass(frozen=True)
class SurfacePoint:
    """A location on the base mesh: triangle index plus barycentric coordinates."""

    triangle: int
    bary: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bary, dtype=np.float64)
        object.__setattr__(self, "bary", b)
        if b.shape != (3,):
            raise ValueError("barycentric coordinates must be a 3-vector")
        if abs(b.sum() - 1.0) > BARY_SUM_TOL:
            raise ValueError(f"barycentric coordinates sum to {b.sum()!r}, not 1")
        if b.min() < -BARY_RANGE_EPS or b.max() > 1.0 + BARY_RANGE_EPS:
            raise ValueError(f"barycentric coordinate out of range: {b!r}")


@dataclass(frozen=True)
class BoundaryLoop:
    """Ordered chain of boundary vertex indices; ``closed`` loops wrap around."""

    vertices: np.ndarray
    closed: bool = True

    def __len__(self):
        return len(self.vertices)


class SurfaceMesh:
    """Orientable 2-manifold triangle mesh with per-edge adjacency.

    Parameters
    ----------
    vertices : (n, 3) array_like
        Vertex positions.
    triangles : (m, 3) array_like
        Counter-clockwise vertex index triples.

    Raises
    ------
    NonManifoldError
        If an edge is incident to more than two triangles.
    DegenerateTriangleError
        If a triangle has repeated vertices or numerically zero area.
    MeshError
        If triangle windings are inconsistent (non-orientable input).
    """

    def __init__(self, vertices, triangles):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (m, 3) array")
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise MeshError("triangle references an out-of-range vertex index")

        self._check_degenerate()
        self.adjacency = self._build_adjacency()
        self._vertex_tri_cache = None
        self._loops_cache = None

    # -- construction helpers -------------------------------------------------

    def _check_degenerate(self):
        t = self.triangles
        if t.size == 0:
            return
        if np.any(t[:, 0] == t[:, 1]) or np.any(t[:, 1] == t[:, 2]) or np.any(t[:, 0] == t[:, 2]):
            raise DegenerateTriangleError("triangle with repeated vertex indices")
        v = self.vertices
        cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        area = 0.5 * np.sqrt(np.einsum("ij,ij->i", cross, cross))
        diag_sq = float(np.sum((v.max(axis=0) - v.min(axis=0)) ** 2)) if len(v) else 0.0
        if np.any(area <= DEGENERATE_AREA_REL * max(diag_sq, np.finfo(float).tiny)):
            bad = int(np.argmin(area))
            raise DegenerateTriangleError(f"triangle {bad} has (near) zero area")

    def _build_adjacency(self):
        m = len(self.triangles)
        adjacency = np.full((m, 3), -1, dtype=np.int64)
        if m == 0:
            return adjacency
        tri = np.repeat(np.arange(m, dtype=np.int64), 3)
        edge = np.tile(np.arange(3, dtype=np.int64), m)
        a = self.triangles[tri, EDGE_VERTICES[edge, 0]]
        b = self.triangles[tri, EDGE_VERTICES[edge, 1]]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        forward = a < b
        order = np.lexsort((hi, lo))
        lo, hi, tri, edge, forward = lo[order], hi[order], tri[order], edge[order], forward[order]

        same = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
        # runs of length >= 3 mean a non-manifold edge
        if np.any(same[1:] & same[:-1]):
            i = int(np.flatnonzero(same[1:] & same[:-1])[0])
            raise NonManifoldError(
                f"edge ({lo[i]}, {hi[i]}) is shared by more than two triangles"
            )
        pair = np.flatnonzero(same)
        if np.any(forward[pair] == forward[pair + 1]):
            raise MeshError("inconsistent triangle winding across a shared edge")
        adjacency[tri[pair], edge[pair]] = tri[pair + 1]
        adjacency[tri[pair + 1], edge[pair + 1]] = tri[pair]
        return adjacency

    # -- basic quantities ------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def triangle_normals(self, normalized=True):
        v = self.vertices
        t = self.triangles
        n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        if normalized:
            n = n / np.linalg.norm(n, axis=1, keepdims=True)
        return n

    def triangle_areas(self):
        n = self.triangle_normals(normalized=False)
        return 0.5 * np.linalg.norm(n, axis=1)

    def bbox_diagonal(self):
        if not len(self.vertices):
            return 0.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def edge_lengths(self):
        """Length of every undirected edge (each counted once)."""
        t = self.triangles
        pairs = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)
        d = self.vertices[pairs[:, 0]] - self.vertices[pairs[:, 1]]
        return np.linalg.norm(d, axis=1)

    def vertex_triangles(self):
        """CSR-style star table: (indptr, tri_indices) of triangles around each vertex."""
        if self._vertex_tri_cache is None:
            flat = self.triangles.ravel()
            order = np.argsort(flat, kind="stable")
            tris = order // 3
            counts = np.bincount(flat, minlength=self.n_vertices)
            indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
            self._vertex_tri_cache = (indptr, tris.astype(np.int64))
        return self._vertex_tri_cache

    def is_closed(self):
        return bool(np.all(self.adjacency >= 0))

    # -- barycentric geometry --------------------------------------------------

    def position_of(self, p: SurfacePoint):
        """3D position of a surface point: ``sum_i lambda_i * v_i``."""
        if not 0 <= p.triangle < self.n_triangles:
            raise IndexError(f"invalid triangle index {p.triangle}")
        tri = self.triangles[p.triangle]
        return p.bary @ self.vertices[tri]

    def barycentric(self, triangle: int, x):
        """Barycentric coordinates of point ``x`` w.r.t. a triangle.

        ``x`` is projected onto the triangle's plane first, so the result
        always sums to one and inverts :meth:`position_of` for in-plane
        points.
        """
        if not 0 <= triangle < self.n_triangles:
            raise IndexError(f"invalid triangle index {triangle}")
        v0, v1, v2 = self.vertices[self.triangles[triangle]]
        e1, e2 = v1 - v0, v2 - v0
        w = np.asarray(x, dtype=np.float64) - v0
        a11, a12, a22 = e1 @ e1, e1 @ e2, e2 @ e2
        det = a11 * a22 - a12 * a12
        if det <= 0.0:
            raise DegenerateTriangleError(f"triangle {triangle} is degenerate")
        b1, b2 = w @ e1, w @ e2
        lam1 = (a22 * b1 - a12 * b2) / det
        lam2 = (a11 * b2 - a12 * b1) / det
        return np.array([1.0 - lam1 - lam2, lam1, lam2])

    def surface_point_at_vertex(self, v: int):
        """SurfacePoint sitting exactly on mesh vertex ``v``."""
        indptr, tris = self.vertex_triangles()
        if indptr[v] == indptr[v + 1]:
            raise MeshError(f"vertex {v} has no incident triangle")
        t = int(tris[indptr[v]])
        bary = np.zeros(3)
        bary[int(np.flatnonzero(self.triangles[t] == v)[0])] = 1.0
        return SurfacePoint(t, bary)

    # -- boundary topology -----------------------------------------------------

    def boundary_edges(self):
        """Directed boundary edges (a, b), interior on the left."""
        t, e = np.nonzero(self.adjacency < 0)
        a = self.triangles[t, EDGE_VERTICES[e, 0]]
        b = self.triangles[t, EDGE_VERTICES[e, 1]]
        return np.stack([a, b], axis=1)

    def boundary_loops(self):
        """Split the boundary into consistently oriented loops.

        Every boundary edge appears in exactly one loop; loop direction
        follows triangle winding so the interior stays on the left.
        """
        if self._loops_cache is not None:
            return self._loops_cache
        edges = self.boundary_edges()
        succ = {}
        for a, b in edges:
            succ.setdefault(int(a), []).append(int(b))
        for v in succ:
            succ[v].sort()  # deterministic pick at (rare) non-manifold vertices
        loops = []
        for start in sorted(succ):
            if not succ[start]:
                continue
            chain = [start]
            cur = start
            while succ.get(cur):
                cur = succ[cur].pop(0)
                if cur == start:
                    loops.append(BoundaryLoop(np.array(chain, dtype=np.int64), closed=True))
                    break
                chain.append(cur)
            else:
                loops.append(BoundaryLoop(np.array(chain, dtype=np.int64), closed=False))
        self._loops_cache = loops
        return loops

    def boundary_vertices(self):
        """Indices of vertices lying on the boundary, in ascending order."""
        edges = self.boundary_edges()
        return np.unique(edges) if len(edges) else np.array([], dtype=np.int64)


def make_icosphere(subdivisions: int, radius: float = 1.0) -> SurfaceMesh:
    """Closed icosphere with ``20 * 4**subdivisions`` triangles."""
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = list(verts / np.linalg.norm(verts[0]))

    def midpoint(cache, i, j):
        key = (i, j) if i < j else (j, i)
        if key not in cache:
            m = verts[i] + verts[j]
            verts.append(m / np.linalg.norm(m))
            cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        cache = {}
        next_faces = []
        for i, j, k in faces:
            ij = midpoint(cache, i, j)
            jk = midpoint(cache, j, k)
            ki = midpoint(cache, k, i)
            next_faces += [(i, ij, ki), (j, jk, ij), (k, ki, jk), (ij, jk, ki)]
        faces = next_faces

    return SurfaceMesh(np.asarray(verts) * radius, np.asarray(faces, dtype=np.int64))
