"""Triangle quality scoring and cavity relocation optimization.

The right-angled quality q_t scores how close a triangle is to the ideal
building block for quad recombination: a right isoceles triangle whose legs
follow the local cross directions. Each vertex contributes the product of
three dimensionless factors in [0, 1]:

  q_a: closeness of the corner angle to 90 degrees,
  q_b: alignment of the nearest incident edge with a field direction,
  q_c: length ratio of the two incident edges,

and q_t is the best vertex product. The classic radius ratio (2 r_in /
r_circ) is kept alongside as the isotropic quality measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .field import DirectionField
from .mesh import SurfaceMesh
from .triangulate import OutputMesh

LINE_SEARCH_SAMPLES = 17
DEFAULT_OPT_SWEEPS = 20


@dataclass(frozen=True)
class TriangleQuality:
    q_a: np.ndarray
    q_b: np.ndarray
    q_c: np.ndarray
    q_t: float


def q_angle(theta: float) -> float:
    """1 at a right angle, decaying linearly to 0 at 0 and 180 degrees."""
    if not 0.0 < theta < np.pi:
        raise ValueError("angle must lie strictly between 0 and pi")
    return 1.0 - abs(np.pi / 2.0 - theta) / (np.pi / 2.0)


def q_alignment(edge1, edge2, d1, d2) -> float:
    """max |cos 2*angle| over the four edge/direction pairs.

    Equals 1 when some incident edge is parallel or perpendicular to a
    field direction, 0 when both edges sit at 45 degrees to both.
    """
    best = 0.0
    for e in (np.asarray(edge1, float), np.asarray(edge2, float)):
        e = e / np.linalg.norm(e)
        for d in (np.asarray(d1, float), np.asarray(d2, float)):
            c = float(e @ (d / np.linalg.norm(d)))
            best = max(best, abs(2.0 * c * c - 1.0))
    return best


def q_edge_ratio(e1: float, e2: float) -> float:
    """1 for equal incident edge lengths, min/max ratio otherwise."""
    if e1 <= 0 or e2 <= 0:
        raise ValueError("edge lengths must be positive")
    return 1.0 - abs(e1 - e2) / max(e1, e2)


def right_angled_quality(positions, dirs) -> TriangleQuality:
    """Full q_t evaluation of one triangle.

    ``positions``: (3, 3) vertex positions; ``dirs``: (3, 2, 3) the two
    independent field directions sampled at each vertex.
    """
    p = np.asarray(positions, dtype=np.float64)
    d = np.asarray(dirs, dtype=np.float64)
    qa = np.empty(3)
    qb = np.empty(3)
    qc = np.empty(3)
    for i in range(3):
        ea = p[(i + 1) % 3] - p[i]
        eb = p[(i + 2) % 3] - p[i]
        la, lb = np.linalg.norm(ea), np.linalg.norm(eb)
        theta = float(np.arccos(np.clip(ea @ eb / (la * lb), -1.0, 1.0)))
        qa[i] = q_angle(theta)
        qb[i] = q_alignment(ea, eb, d[i, 0], d[i, 1])
        qc[i] = q_edge_ratio(la, lb)
    qt = float(np.max(qa * qb * qc))
    return TriangleQuality(q_a=qa, q_b=qb, q_c=qc, q_t=qt)


def radius_ratio(positions) -> float:
    """2 * inradius / circumradius; 1 iff equilateral."""
    p = np.asarray(positions, dtype=np.float64)
    a = np.linalg.norm(p[1] - p[2])
    b = np.linalg.norm(p[2] - p[0])
    c = np.linalg.norm(p[0] - p[1])
    area = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
    if area <= 0 or a * b * c == 0:
        raise ValueError("degenerate triangle")
    s = 0.5 * (a + b + c)
    r_in = area / s
    r_circ = a * b * c / (4.0 * area)
    return float(2.0 * r_in / r_circ)


def mesh_radius_ratios(vertices, triangles) -> np.ndarray:
    """Vectorized radius ratio per triangle."""
    v = np.asarray(vertices, dtype=np.float64)
    t = np.asarray(triangles, dtype=np.int64)
    pa, pb, pc = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    a = np.linalg.norm(pb - pc, axis=1)
    b = np.linalg.norm(pc - pa, axis=1)
    c = np.linalg.norm(pa - pb, axis=1)
    area = 0.5 * np.linalg.norm(np.cross(pb - pa, pc - pa), axis=1)
    s = 0.5 * (a + b + c)
    denom = s * a * b * c
    out = np.zeros(len(t))
    ok = denom > 0
    out[ok] = 8.0 * area[ok] ** 2 / denom[ok]
    return out


def _vertex_field_samples(outmesh: OutputMesh, field: DirectionField, basemesh: SurfaceMesh):
    """First two field directions and the normal at every output vertex."""
    nv = outmesh.n_vertices
    d1 = np.empty((nv, 3))
    d2 = np.empty((nv, 3))
    nrm = np.empty((nv, 3))
    dirs = np.empty((field.order, 3))
    for i in range(nv):
        nx, ny, nz = _kernels.sample_field(
            basemesh.triangles, field.order, field.u,
            field.frames.t1, field.frames.t2, field.frames.normal,
            int(outmesh.point_triangle[i]),
            float(outmesh.point_bary[i, 0]),
            float(outmesh.point_bary[i, 1]),
            float(outmesh.point_bary[i, 2]),
            dirs,
        )
        d1[i] = dirs[0]
        d2[i] = dirs[1]
        nrm[i] = (nx, ny, nz)
    return d1, d2, nrm


def mesh_right_angled_quality(
    outmesh: OutputMesh, field: DirectionField, basemesh: SurfaceMesh
) -> np.ndarray:
    """q_t for every triangle of the output mesh."""
    d1, d2, _ = _vertex_field_samples(outmesh, field, basemesh)
    t = outmesh.triangles
    out = np.empty(len(t))
    for i, (a, b, c) in enumerate(t):
        out[i] = _kernels.triangle_qt(
            outmesh.vertices[a], outmesh.vertices[b], outmesh.vertices[c],
            d1[a], d2[a], d1[b], d2[b], d1[c], d2[c],
        )
    return out


@dataclass
class OptimizeReport:
    sweeps: int
    relocations: int
    min_quality_before: np.ndarray  # per relocation
    min_quality_after: np.ndarray


def optimize_cavities(
    outmesh: OutputMesh,
    field: DirectionField,
    basemesh: SurfaceMesh,
    max_sweeps: int = DEFAULT_OPT_SWEEPS,
    samples: int = LINE_SEARCH_SAMPLES,
    centroid_mode: str = "linf",
):
    """Relocate interior vertices to maximize each cavity's worst q_t.

    Sampled line search from the current position toward the cavity center
    (axis-aligned bounding-box center in the local cross frame by default,
    arithmetic ring mean with ``centroid_mode="mean"``); a vertex moves only
    when the minimum quality of its star strictly improves, and is
    re-projected onto the base surface. Returns (relocated copy, report).
    """
    if centroid_mode not in ("linf", "mean"):
        raise ValueError("centroid_mode must be 'linf' or 'mean'")
    sm = outmesh.as_surface_mesh()
    indptr, tris = sm.vertex_triangles()
    interior = ~outmesh.boundary_mask
    d1, d2, nrm = _vertex_field_samples(outmesh, field, basemesh)

    out_pos = outmesh.vertices.copy()
    vert_tri = outmesh.point_triangle.copy()
    vert_bary = outmesh.point_bary.copy()
    log_cap = max(1, int(np.count_nonzero(interior)) * max_sweeps)
    log_before = np.zeros(log_cap)
    log_after = np.zeros(log_cap)

    sweeps, moves, log_len = _kernels.optimize_cavities_kernel(
        out_pos, outmesh.triangles, indptr, tris, interior,
        vert_tri, vert_bary, d1, d2, nrm,
        basemesh.vertices, basemesh.triangles, basemesh.adjacency,
        field.order, field.u, field.frames.t1, field.frames.t2, field.frames.normal,
        0 if centroid_mode == "linf" else 1,
        samples, max_sweeps, log_before, log_after,
    )
    relocated = OutputMesh(
        vertices=out_pos,
        triangles=outmesh.triangles.copy(),
        point_triangle=vert_tri,
        point_bary=vert_bary,
        boundary_mask=outmesh.boundary_mask.copy(),
        quad_pairs=None if outmesh.quad_pairs is None else outmesh.quad_pairs.copy(),
        flip_sweeps=outmesh.flip_sweeps,
        flips_converged=outmesh.flips_converged,
    )
    report = OptimizeReport(
        sweeps=int(sweeps),
        relocations=int(moves),
        min_quality_before=log_before[:log_len].copy(),
        min_quality_after=log_after[:log_len].copy(),
    )
    return relocated, report
