"""Greedy recombination of adjacent right-angled triangles into quads."""

from __future__ import annotations

import numpy as np

from .errors import MeshError
from .triangulate import OutputMesh

DEFAULT_THRESHOLD = 0.3


def quad_vertices(triangles, t1: int, t2: int):
    """Cyclic vertex order of the quad formed by two edge-adjacent triangles.

    With t1 containing the shared edge as (u, v) and t2 as (v, u), the quad
    cycle is (u, d, v, c) where c and d are the opposite corners; winding
    matches the triangles'.
    """
    a = set(triangles[t1])
    b = set(triangles[t2])
    shared = a & b
    if len(shared) != 2:
        raise MeshError("triangles do not share an edge")
    tri1 = list(triangles[t1])
    for k in range(3):
        if tri1[k] in shared and tri1[(k + 1) % 3] in shared:
            u, v = tri1[k], tri1[(k + 1) % 3]
            c = tri1[(k + 2) % 3]
            break
    d = next(x for x in triangles[t2] if x not in shared)
    return [int(u), int(d), int(v), int(c)]


def quad_corner_quality(positions) -> float:
    """min over the 4 corners of (1 - |pi/2 - angle| / (pi/2)).

    1 iff every corner is a right angle; non-simple (non-convex) quads
    score 0.
    """
    p = np.asarray(positions, dtype=np.float64)
    if p.shape != (4, 3):
        raise ValueError("positions must be (4, 3)")
    if not _is_convex(p):
        return 0.0
    worst = 1.0
    for i in range(4):
        u = p[(i + 1) % 4] - p[i]
        w = p[(i - 1) % 4] - p[i]
        nu, nw = np.linalg.norm(u), np.linalg.norm(w)
        if nu == 0 or nw == 0:
            return 0.0
        theta = float(np.arccos(np.clip(u @ w / (nu * nw), -1.0, 1.0)))
        worst = min(worst, 1.0 - abs(np.pi / 2.0 - theta) / (np.pi / 2.0))
    return worst


def _is_convex(p) -> float:
    n = np.cross(p[2] - p[0], p[3] - p[1])
    nn = np.linalg.norm(n)
    if nn == 0:
        return False
    n = n / nn
    for i in range(4):
        e1 = p[(i + 1) % 4] - p[i]
        e2 = p[(i + 2) % 4] - p[(i + 1) % 4]
        if np.cross(e1, e2) @ n <= 0:
            return False
    return True


def recombine(outmesh: OutputMesh, threshold: float = DEFAULT_THRESHOLD) -> OutputMesh:
    """Greedily pair adjacent triangles into quads, best quality first.

    Pairs scoring below ``threshold`` or touching an already-matched
    triangle are skipped; unmatched triangles survive as triangles.
    Returns a copy with ``quad_pairs`` and ``quad_quality`` filled.
    """
    sm = outmesh.as_surface_mesh()
    candidates = []
    for t in range(sm.n_triangles):
        for o in sm.adjacency[t]:
            if o > t:
                quad = quad_vertices(outmesh.triangles, t, int(o))
                q = quad_corner_quality(outmesh.vertices[quad])
                if q >= threshold:
                    candidates.append((q, t, int(o)))
    candidates.sort(key=lambda x: (-x[0], x[1], x[2]))
    matched = set()
    pairs = []
    quality = []
    for q, t, o in candidates:
        if t in matched or o in matched:
            continue
        matched.update((t, o))
        pairs.append((t, o))
        quality.append(q)
    return OutputMesh(
        vertices=outmesh.vertices.copy(),
        triangles=outmesh.triangles.copy(),
        point_triangle=outmesh.point_triangle.copy(),
        point_bary=outmesh.point_bary.copy(),
        boundary_mask=outmesh.boundary_mask.copy(),
        quad_pairs=np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
        tri_quality=None if outmesh.tri_quality is None else outmesh.tri_quality.copy(),
        quad_quality=np.asarray(quality, dtype=np.float64),
        flip_sweeps=outmesh.flip_sweeps,
        flips_converged=outmesh.flips_converged,
    )
