"""Per-vertex direction fields with N-fold rotational symmetry.

A cross field (order 4) or asterisk field (order 6) is stored as one
representative angle per vertex, measured in that vertex's tangent frame.
All consumers respect the quotient: theta and theta + 2*pi/order describe
the same field value. Smoothing follows the representation-vector scheme:
u = (cos(order*theta), sin(order*theta)) is fixed from boundary tangents at
boundary vertices and iteratively averaged (after frame transport) at
interior ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve

from . import _kernels
from .errors import FieldConvergenceError, MeshError
from .mesh import SurfaceMesh, SurfacePoint


@dataclass
class TangentFrames:
    """Orthonormal (t1, t2, normal) triple per vertex."""

    t1: np.ndarray
    t2: np.ndarray
    normal: np.ndarray


@dataclass
class DirectionField:
    """N-fold symmetric direction field sampled at mesh vertices."""

    order: int
    theta: np.ndarray
    u: np.ndarray
    frames: TangentFrames
    residual: float = 0.0
    sweeps: int = 0


def compute_tangent_frames(mesh: SurfaceMesh) -> TangentFrames:
    """Area-weighted vertex normals with a deterministic tangent basis."""
    raw = np.cross(
        mesh.vertices[mesh.triangles[:, 1]] - mesh.vertices[mesh.triangles[:, 0]],
        mesh.vertices[mesh.triangles[:, 2]] - mesh.vertices[mesh.triangles[:, 0]],
    )  # length 2*area: summing these is area weighting
    normal = np.zeros_like(mesh.vertices)
    for c in range(3):
        np.add.at(normal, mesh.triangles[:, c], raw)
    lens = np.linalg.norm(normal, axis=1)
    lens[lens == 0.0] = 1.0
    normal /= lens[:, None]

    # axis of smallest |n| component, as in the kernels
    axis = np.argmin(np.abs(normal), axis=1)
    e = np.zeros_like(normal)
    e[np.arange(len(normal)), axis] = 1.0
    t1 = np.cross(normal, e)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(normal, t1)
    return TangentFrames(t1=t1, t2=t2, normal=normal)


def _vertex_adjacency(mesh: SurfaceMesh):
    """CSR neighbor table over mesh edges."""
    t = mesh.triangles
    pairs = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    both = np.concatenate([pairs, pairs[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=mesh.n_vertices)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return indptr, both[:, 1].astype(np.int64)


def _transport_rotations(frames: TangentFrames, srcs, dsts, order):
    """cos/sin of order * rho for transporting u from dst frames into src frames.

    rho is the angle of the neighbor's first tangent axis measured in the
    receiving vertex's frame.
    """
    t1j = frames.t1[dsts]
    rho = np.arctan2(
        np.einsum("ij,ij->i", t1j, frames.t2[srcs]),
        np.einsum("ij,ij->i", t1j, frames.t1[srcs]),
    )
    return np.cos(order * rho), np.sin(order * rho)


def boundary_tangents(mesh: SurfaceMesh, frames: TangentFrames, order: int):
    """Boundary alignment direction at each boundary vertex.

    The two incident boundary edge directions are averaged in the quotient
    space (as order-fold representation vectors), so a corner whose edges
    are 2*pi/order apart still yields an exactly aligned constraint. When
    the two edges cancel in the quotient (a genuinely incompatible corner)
    the outgoing edge wins. Returns (vertex indices, unit tangents).
    """
    idx = []
    tangents = []
    for loop in mesh.boundary_loops():
        verts = loop.vertices
        pos = mesh.vertices[verts]
        k = len(verts)
        for a in range(k):
            v = int(verts[a])
            n = frames.normal[v]
            t1, t2 = frames.t1[v], frames.t2[v]
            edges = []
            if loop.closed or a > 0:
                edges.append(pos[a] - pos[a - 1])
            if loop.closed:
                edges.append(pos[(a + 1) % k] - pos[a])
            elif a < k - 1:
                edges.append(pos[a + 1] - pos[a])
            acc = np.zeros(2)
            last = None
            for d in edges:
                d = d - (d @ n) * n
                nrm = np.linalg.norm(d)
                if nrm == 0.0:
                    continue
                d /= nrm
                th = np.arctan2(d @ t2, d @ t1)
                last = np.array([np.cos(order * th), np.sin(order * th)])
                acc += last
            if last is None:
                continue
            if np.linalg.norm(acc) < 1e-6:
                acc = last
            rep = np.arctan2(acc[1], acc[0]) / order
            idx.append(v)
            tangents.append(np.cos(rep) * t1 + np.sin(rep) * t2)
    return np.array(idx, dtype=np.int64), np.asarray(tangents, dtype=np.float64)


def _linear_init(u, fixed, indptr, nbrs, srcs, rot_cos, rot_sin):
    """Solve the linearized smoothing system (complex transported Laplace)
    for the free vertices and write the renormalized result into u."""
    free = np.flatnonzero(~fixed)
    if len(free) == 0:
        return
    n = len(u)
    pos = np.full(n, -1, dtype=np.int64)
    pos[free] = np.arange(len(free))
    deg = np.maximum(np.diff(indptr), 1)
    w = (rot_cos + 1j * rot_sin) / deg[srcs]
    zfix = u[:, 0] + 1j * u[:, 1]

    row_free = ~fixed[srcs]
    to_free = row_free & ~fixed[nbrs]
    to_fixed = row_free & fixed[nbrs]
    rows = np.concatenate([pos[srcs[to_free]], np.arange(len(free))])
    cols = np.concatenate([pos[nbrs[to_free]], np.arange(len(free))])
    vals = np.concatenate([-w[to_free], np.ones(len(free), dtype=np.complex128)])
    b = np.zeros(len(free), dtype=np.complex128)
    np.add.at(b, pos[srcs[to_fixed]], w[to_fixed] * zfix[nbrs[to_fixed]])
    A = csr_matrix((vals, (rows, cols)), shape=(len(free), len(free)))
    z = spsolve(A, b)
    mag = np.abs(z)
    ok = mag > 1e-12
    u[free[ok], 0] = np.real(z[ok]) / mag[ok]
    u[free[ok], 1] = np.imag(z[ok]) / mag[ok]
    u[free[~ok]] = np.array([1.0, 0.0])


def compute_field(
    mesh: SurfaceMesh,
    order: int,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
    omega: float = 1.8,
) -> DirectionField:
    """Compute a boundary-aligned order-4 or order-6 direction field.

    Boundary vertices are pinned to the boundary tangent; interior vertices
    converge by nonlinear Gauss-Seidel on representation vectors
    (over-relaxed by ``omega``; the fixed point does not depend on it).
    Raises :class:`FieldConvergenceError` when the residual target is not
    met within ``max_sweeps``.
    """
    if order not in (4, 6):
        raise ValueError("field order must be 4 or 6")
    if mesh.n_vertices == 0 or mesh.n_triangles == 0:
        raise MeshError("cannot compute a direction field on an empty mesh")

    frames = compute_tangent_frames(mesh)
    n = mesh.n_vertices
    u = np.zeros((n, 2))
    fixed = np.zeros(n, dtype=np.bool_)

    bidx, btan = boundary_tangents(mesh, frames, order)
    if len(bidx):
        theta_b = np.arctan2(
            np.einsum("ij,ij->i", btan, frames.t2[bidx]),
            np.einsum("ij,ij->i", btan, frames.t1[bidx]),
        )
        u[bidx, 0] = np.cos(order * theta_b)
        u[bidx, 1] = np.sin(order * theta_b)
        fixed[bidx] = True

    if not fixed.any():
        # closed surface: pin one arbitrary vertex to kill the global
        # rotation mode, mirroring the arbitrary-seed rule for generation
        u[0] = (1.0, 0.0)
        fixed[0] = True

    indptr, nbrs = _vertex_adjacency(mesh)
    srcs = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    rot_cos, rot_sin = _transport_rotations(frames, srcs, nbrs, order)

    # initialize free vertices with the linear transported-Laplace solution;
    # the nonlinear fixed-point sweeps below then only polish locally
    _linear_init(u, fixed, indptr, nbrs, srcs, rot_cos, rot_sin)

    residual, sweeps = _kernels.smooth_field(
        u, fixed, indptr, nbrs, rot_cos, rot_sin, tol, max_sweeps, omega
    )
    if residual >= tol and max_sweeps > 0 and not fixed.all():
        raise FieldConvergenceError(residual, sweeps)

    period = 2.0 * np.pi / order
    theta = np.mod(np.arctan2(u[:, 1], u[:, 0]) / order, period)
    return DirectionField(
        order=order, theta=theta, u=u, frames=frames, residual=residual, sweeps=sweeps
    )


def sample_directions(
    field: DirectionField,
    mesh: SurfaceMesh,
    p: SurfacePoint,
    return_normal: bool = False,
):
    """The order unit tangent directions of the field at a surface point."""
    dirs = np.empty((field.order, 3))
    nx, ny, nz = _kernels.sample_field(
        mesh.triangles,
        field.order,
        field.u,
        field.frames.t1,
        field.frames.t2,
        field.frames.normal,
        int(p.triangle),
        float(p.bary[0]),
        float(p.bary[1]),
        float(p.bary[2]),
        dirs,
    )
    if return_normal:
        return dirs, np.array([nx, ny, nz])
    return dirs


def singularity_indices(field: DirectionField, mesh: SurfaceMesh) -> np.ndarray:
    """Integer singularity index per triangle (in 2*pi/order turns).

    The index of face (i, j, k) is the winding of the representation vector
    around the face, corrected by the face's frame holonomy so the result
    is an integer. Summed over a closed mesh this equals order times the
    Euler characteristic.
    """
    frames = field.frames
    phi = np.arctan2(field.u[:, 1], field.u[:, 0])
    t = mesh.triangles
    total = np.zeros(len(t))
    holonomy = np.zeros(len(t))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        i, j = t[:, a], t[:, b]
        t1j = frames.t1[j]
        omega = np.arctan2(
            np.einsum("ij,ij->i", t1j, frames.t2[i]),
            np.einsum("ij,ij->i", t1j, frames.t1[i]),
        )
        d = phi[j] - phi[i] + field.order * omega
        total += np.mod(d + np.pi, 2.0 * np.pi) - np.pi
        holonomy += omega
    holo = np.mod(holonomy + np.pi, 2.0 * np.pi) - np.pi
    return np.rint((total - field.order * holo) / (2.0 * np.pi)).astype(np.int64)
