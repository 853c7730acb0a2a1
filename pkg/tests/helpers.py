"""Shared test utilities: fixture builders and independent brute-force oracles."""

import numpy as np

from fieldfront import SurfaceMesh, domains
from fieldfront import _kernels
from fieldfront.frontal import GeneratedPoints


def locate_points(mesh: SurfaceMesh, positions):
    """(triangle, barycentric) of each position via a projection walk."""
    tris = np.empty(len(positions), np.int64)
    bary = np.empty((len(positions), 3))
    for i, p in enumerate(np.asarray(positions, dtype=float)):
        t, l0, l1, l2, _, _, _ = _kernels.project_to_surface(
            mesh.vertices, mesh.triangles, mesh.adjacency, 0, p[0], p[1], p[2], 5000
        )
        tris[i] = t
        bary[i] = (l0, l1, l2)
    return tris, bary


def points_on_mesh(mesh: SurfaceMesh, interior_positions, h):
    """GeneratedPoints made of the mesh's boundary vertices (as seeds, in
    loop order) plus the given interior positions."""
    seed_verts = np.concatenate([lp.vertices for lp in mesh.boundary_loops()])
    seed_pos = mesh.vertices[seed_verts]
    all_pos = np.vstack([seed_pos, np.asarray(interior_positions, dtype=float)])
    tris, bary = locate_points(mesh, all_pos)
    return GeneratedPoints(
        tris, bary, all_pos, np.full(len(all_pos), float(h)),
        len(seed_verts), seed_verts.astype(np.int64),
    )


def colliding_fronts(n=16):
    """Two axis-aligned point lattices meeting at x=0.5, the right one
    shifted vertically by h/2 (a front-collision interface)."""
    h = 1.0 / n
    base = domains.square_grid(n)
    pts = []
    for j in range(1, n):
        x = j * h
        if x <= 0.5 + 1e-9:
            ys = [i * h for i in range(1, n)]
        else:
            ys = [(i + 0.5) * h for i in range(0, n)]
        pts.extend((x, y, 0.0) for y in ys)
    return base, points_on_mesh(base, np.array(pts), h), h


def brute_force_circle_hit(mesh: SurfaceMesh, origin_pos, direction, normal, h):
    """All intersections of the circle (center, radius h, plane spanned by
    direction and normal) with the whole triangulation; independent of the
    walking implementation."""
    p = np.asarray(origin_pos, float)
    d = np.asarray(direction, float)
    nrm = np.asarray(normal, float)
    hits = []
    for t in range(mesh.n_triangles):
        v0 = mesh.vertices[mesh.triangles[t, 0]]
        tn = np.cross(
            mesh.vertices[mesh.triangles[t, 1]] - v0,
            mesh.vertices[mesh.triangles[t, 2]] - v0,
        )
        tn = tn / np.linalg.norm(tn)
        # N . (p + h cos(phi) d + h sin(phi) nrm - v0) = 0
        A = h * (tn @ d)
        B = h * (tn @ nrm)
        C = tn @ (v0 - p)
        R = np.hypot(A, B)
        if R < abs(C) or R == 0.0:
            continue
        phi0 = np.arctan2(B, A)
        delta = np.arccos(np.clip(C / R, -1.0, 1.0))
        for phi in (phi0 + delta, phi0 - delta):
            x = p + h * np.cos(phi) * d + h * np.sin(phi) * nrm
            lam = mesh.barycentric(t, x)
            if lam.min() >= -1e-9 and abs(tn @ (x - v0)) < 1e-9 * max(h, 1.0):
                hits.append(x)
    return [x for x in hits if (x - p) @ d > 0.0]


def circumcircle_violations(points2d, triangles):
    """Brute-force empty-circumcircle count (O(n * m)), exact predicates."""
    from fieldfront.delaunay import incircle

    viol = 0
    pts = np.asarray(points2d, float)
    for a, b, c in triangles:
        pa, pb, pc = pts[a], pts[b], pts[c]
        for dd in range(len(pts)):
            if dd in (int(a), int(b), int(c)):
                continue
            pd = pts[dd]
            if incircle(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1], pd[0], pd[1]) > 0:
                viol += 1
    return viol


def min_pairwise_distance(positions, norm="linf"):
    from scipy.spatial.distance import pdist

    metric = "chebyshev" if norm == "linf" else "euclidean"
    return float(pdist(np.asarray(positions), metric=metric).min())
