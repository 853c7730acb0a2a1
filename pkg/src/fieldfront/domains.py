"""Synthetic planar base meshes for demos and tests."""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .mesh import SurfaceMesh


def square_grid(nx: int, ny: int | None = None, size: float = 1.0) -> SurfaceMesh:
    """[0, size]^2 in the z=0 plane, nx-by-ny cells split along one diagonal."""
    if ny is None:
        ny = nx
    xs = np.linspace(0.0, size, nx + 1)
    ys = np.linspace(0.0, size, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return SurfaceMesh(vertices, np.asarray(tris, dtype=np.int64))


def _ring_points(r_inner, r_outer, spacing):
    pts = []
    radii = np.arange(r_inner, r_outer + spacing / 2, spacing)
    for k, r in enumerate(radii):
        if r == 0.0:
            pts.append((0.0, 0.0))
            continue
        count = max(6, int(round(2.0 * np.pi * r / spacing)))
        ang = 2.0 * np.pi * np.arange(count) / count
        # stagger alternate rings for better-shaped triangles
        ang += (k % 2) * np.pi / count
        pts.extend(zip(r * np.cos(ang), r * np.sin(ang)))
    return np.asarray(pts)


def _oriented(tris, pts2d):
    a = pts2d[tris[:, 1]] - pts2d[tris[:, 0]]
    b = pts2d[tris[:, 2]] - pts2d[tris[:, 0]]
    flip = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0] < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def unit_disk(spacing: float, radius: float = 1.0) -> SurfaceMesh:
    """Disk of the given radius meshed with roughly uniform triangles."""
    pts = _ring_points(0.0, radius, spacing)
    tris = _oriented(Delaunay(pts).simplices.astype(np.int64), pts)
    vertices = np.column_stack([pts, np.zeros(len(pts))])
    return SurfaceMesh(vertices, tris)


def annulus(r_inner: float, r_outer: float, spacing: float) -> SurfaceMesh:
    """Annulus meshed with roughly uniform triangles (two boundary loops)."""
    pts = _ring_points(r_inner, r_outer, spacing)
    tris = _oriented(Delaunay(pts).simplices.astype(np.int64), pts)
    centroid = pts[tris].mean(axis=1)
    keep = np.linalg.norm(centroid, axis=1) > r_inner
    vertices = np.column_stack([pts, np.zeros(len(pts))])
    return SurfaceMesh(vertices, tris[keep])
