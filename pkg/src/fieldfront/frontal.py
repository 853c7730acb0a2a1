"""Frontal point insertion: FIFO propagation of points along field directions.

Boundary points seed a first-in first-out queue; each popped point tries to
spawn one neighbor per field direction at the local target size, the
candidate is located by a walking circle/surface intersection and kept only
if it clears the exclusion zone of every nearby accepted point. Accepted
points are appended to the queue, so fronts advance inward layer by layer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np
from numba import config as numba_config, set_num_threads

from . import _kernels
from .errors import ConfigError, WalkBoundaryError, WalkStepLimitError
from .field import DirectionField, compute_tangent_frames
from .hilbert import hilbert_sort_key
from .mesh import SurfaceMesh, SurfacePoint
from .sizing import SizeField

NORM_CODES = {"linf": _kernels.NORM_LINF, "l2": _kernels.NORM_L2,
              "linf-frame": _kernels.NORM_LINF_FRAME}

DEFAULT_MAX_WALK = 1000
PARALLEL_BATCH = 64


@dataclass(frozen=True)
class GeneratedPoint:
    """An accepted point: its location on the base mesh, cached position,
    and the size-field value at creation."""

    location: SurfacePoint
    position: np.ndarray
    h: float
    base_vertex: int = -1  # boundary seeds remember their base-mesh vertex


class GeneratedPoints:
    """Array-backed sequence of :class:`GeneratedPoint`.

    The first ``n_seeds`` entries are the boundary seeds in queue order;
    ``seed_vertices`` maps them back to base-mesh vertex indices.
    """

    def __init__(self, triangles, bary, positions, h, n_seeds, seed_vertices):
        self.triangles = triangles
        self.bary = bary
        self.positions = positions
        self.h = h
        self.n_seeds = n_seeds
        self.seed_vertices = seed_vertices

    def __len__(self):
        return len(self.triangles)

    def __getitem__(self, i):
        base_vertex = int(self.seed_vertices[i]) if i < self.n_seeds else -1
        return GeneratedPoint(
            location=SurfacePoint(int(self.triangles[i]), self.bary[i].copy()),
            position=self.positions[i].copy(),
            h=float(self.h[i]),
            base_vertex=base_vertex,
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


@dataclass
class GenerationStats:
    n_points: int = 0
    n_seeds: int = 0
    wall_time: float = 0.0
    walks_ok: int = 0
    walks_boundary: int = 0
    walks_pathological: int = 0
    mean_walk_steps: float = 0.0
    rejected: int = 0
    rejection_rate: float = 0.0
    workers: int = 1

    def as_dict(self):
        return dict(self.__dict__)


class PointRegistry:
    """Per-base-triangle buckets over the accepted point array.

    Buckets are intrusive linked lists (head per triangle, next per point),
    so lookups and inserts are O(1) and the structure is shareable with the
    compiled kernels.
    """

    def __init__(self, mesh: SurfaceMesh, capacity: int = 64):
        self.head = np.full(mesh.n_triangles, -1, dtype=np.int64)
        self.next = np.full(capacity, -1, dtype=np.int64)
        self.positions = np.zeros((capacity, 3))
        self.triangle = np.full(capacity, -1, dtype=np.int64)
        self.count = 0

    def __len__(self):
        return self.count

    def insert(self, point: GeneratedPoint) -> int:
        if self.count == len(self.next):
            grow = len(self.next) * 2
            self.next = np.concatenate([self.next, np.full(grow - len(self.next), -1, np.int64)])
            self.positions = np.vstack([self.positions, np.zeros((grow - len(self.positions), 3))])
            self.triangle = np.concatenate([self.triangle, np.full(grow - len(self.triangle), -1, np.int64)])
        i = self.count
        t = int(point.location.triangle)
        self.positions[i] = point.position
        self.triangle[i] = t
        self.next[i] = self.head[t]
        self.head[t] = i
        self.count += 1
        return i

    def bucket(self, triangle: int):
        out = []
        p = self.head[triangle]
        while p >= 0:
            out.append(int(p))
            p = self.next[p]
        return out


@dataclass(frozen=True)
class FilterResult:
    accepted: bool
    blocker: int | None = None

    def __bool__(self):
        return self.accepted


def seed_boundary(mesh: SurfaceMesh, sizefield: SizeField, ordering: str = "topological"):
    """One seed per boundary vertex, in topological (boundary walk) or
    Hilbert-curve order; closed surfaces fall back to a single seed at
    vertex 0."""
    if ordering not in ("topological", "hilbert"):
        raise ConfigError(f"unknown seed ordering {ordering!r}")
    loops = mesh.boundary_loops()
    if loops:
        verts = np.concatenate([lp.vertices for lp in loops])
        if ordering == "hilbert":
            verts = verts[np.argsort(hilbert_sort_key(mesh.vertices[verts]), kind="stable")]
    else:
        verts = np.array([0], dtype=np.int64)
    seeds = []
    for v in verts:
        sp = mesh.surface_point_at_vertex(int(v))
        seeds.append(
            GeneratedPoint(
                location=sp,
                position=mesh.position_of(sp),
                h=sizefield.eval(mesh, sp),
                base_vertex=int(v),
            )
        )
    return seeds


def _interp_vertex_normal(mesh, frames, p: SurfacePoint):
    n = p.bary @ frames.normal[mesh.triangles[p.triangle]]
    nrm = np.linalg.norm(n)
    if nrm == 0.0:
        return frames.normal[mesh.triangles[p.triangle][int(np.argmax(p.bary))]]
    return n / nrm


def intersect_walk(
    mesh: SurfaceMesh,
    origin: SurfacePoint,
    direction,
    h: float,
    normal=None,
    max_steps: int = DEFAULT_MAX_WALK,
):
    """Point at chordal distance ``h`` from ``origin`` along ``direction``.

    The point is the intersection of the surface with the circle of radius
    h around the origin in the plane spanned by the direction and the local
    surface normal, found by walking edge-adjacent triangles.

    Raises :class:`WalkBoundaryError` when the walk leaves the domain and
    :class:`WalkStepLimitError` past the step cap.
    """
    direction = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    if h <= 0:
        raise ValueError("h must be positive")
    if normal is None:
        normal = _interp_vertex_normal(mesh, compute_tangent_frames(mesh), origin)
    pos = mesh.position_of(origin)
    status, t, l0, l1, l2, x, y, z, steps = _kernels.walk_intersect(
        mesh.vertices, mesh.triangles, mesh.adjacency, mesh.triangle_normals(),
        int(origin.triangle), pos[0], pos[1], pos[2],
        direction[0], direction[1], direction[2],
        normal[0], normal[1], normal[2], float(h), max_steps,
    )
    if status == _kernels.WALK_OK:
        return SurfacePoint(int(t), np.array([l0, l1, l2]))
    if status == _kernels.WALK_HIT_BOUNDARY:
        raise WalkBoundaryError(f"walk left the domain after {steps} triangles")
    raise WalkStepLimitError(f"no intersection after {steps} triangles")


def filter_candidate(
    candidate: GeneratedPoint,
    registry: PointRegistry,
    mesh: SurfaceMesh,
    alpha: float,
    norm: str = "linf",
    frame=None,
    collect_factor: float = 1.0,
) -> FilterResult:
    """Exclusion-zone test of a candidate against registered points.

    Accepts iff the chosen-norm distance to every registered point in the
    breadth-first collected triangle set exceeds ``alpha * candidate.h``.
    ``frame`` (3 rows) is required for the cross-frame-aligned norm.
    """
    if not 0 < alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    code = NORM_CODES.get(norm)
    if code is None:
        raise ConfigError(f"unknown filter norm {norm!r}")
    if code == _kernels.NORM_LINF_FRAME:
        if frame is None:
            raise ConfigError("cross-frame norm needs a frame")
        f = np.asarray(frame, dtype=np.float64)
    else:
        f = np.zeros((3, 3))
    visited = np.zeros(mesh.n_triangles, dtype=np.int64)
    bfs = np.empty(mesh.n_triangles, dtype=np.int64)
    pos = candidate.position
    ok, blocker = _kernels.filter_candidate_kernel(
        mesh.vertices, mesh.triangles, mesh.adjacency,
        pos[0], pos[1], pos[2],
        int(candidate.location.triangle), float(candidate.h), float(alpha), code,
        f[0, 0], f[0, 1], f[0, 2], f[1, 0], f[1, 1], f[1, 2], f[2, 0], f[2, 1], f[2, 2],
        collect_factor * float(candidate.h),
        registry.head, registry.next, registry.positions,
        visited, bfs, 1,
    )
    return FilterResult(bool(ok), None if blocker < 0 else int(blocker))


def generate_points(
    mesh: SurfaceMesh,
    field: DirectionField,
    sizefield: SizeField,
    alpha: float = 0.75,
    workers: int = 1,
    norm: str | None = None,
    seed_ordering: str = "topological",
    collect_factor: float = 1.0,
    max_walk: int = DEFAULT_MAX_WALK,
):
    """Run the frontal insertion loop; returns (points, stats).

    ``norm`` defaults to "linf" for cross fields and "l2" for asterisk
    fields. ``workers`` >= 2 splits the seeds into that many FIFO queues
    expanded in parallel batches, with the accept step serialized.
    """
    if not 0 < alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if norm is None:
        norm = "linf" if field.order == 4 else "l2"
    code = NORM_CODES.get(norm)
    if code is None:
        raise ConfigError(f"unknown filter norm {norm!r}")

    seeds = seed_boundary(mesh, sizefield, seed_ordering)
    seed_tri = np.array([s.location.triangle for s in seeds], dtype=np.int64)
    seed_bary = np.array([s.location.bary for s in seeds])
    seed_vertices = np.array([s.base_vertex for s in seeds], dtype=np.int64)

    tri_normals = mesh.triangle_normals()
    size_args = sizefield.kernel_args()
    common = (
        mesh.vertices, mesh.triangles, mesh.adjacency, tri_normals,
        field.order, field.u, field.frames.t1, field.frames.t2, field.frames.normal,
        *size_args,
    )

    t0 = time.perf_counter()
    if workers == 1:
        (pts_tri, pts_bary, pts_pos, pts_h,
         walks_ok, walks_bdry, walks_path, steps_ok, _steps_all, rejected) = (
            _kernels.generate_points_kernel(
                *common, seed_tri, seed_bary,
                float(alpha), code, float(collect_factor), max_walk,
            )
        )
    else:
        (pts_tri, pts_bary, pts_pos, pts_h,
         walks_ok, walks_bdry, walks_path, steps_ok, rejected) = _generate_parallel(
            mesh, common, seed_tri, seed_bary,
            alpha, code, collect_factor, max_walk, workers, field.order,
        )
    wall = time.perf_counter() - t0

    stats = GenerationStats(
        n_points=len(pts_tri),
        n_seeds=len(seeds),
        wall_time=wall,
        walks_ok=int(walks_ok),
        walks_boundary=int(walks_bdry),
        walks_pathological=int(walks_path),
        mean_walk_steps=float(steps_ok) / max(int(walks_ok), 1),
        rejected=int(rejected),
        rejection_rate=float(rejected) / max(int(walks_ok), 1),
        workers=workers,
    )
    points = GeneratedPoints(pts_tri, pts_bary, pts_pos, pts_h, len(seeds), seed_vertices)
    return points, stats


def _generate_parallel(mesh, common, seed_tri, seed_bary, alpha, code,
                       collect_factor, max_walk, workers, order):
    """Batched-round parallel frontal insertion.

    Rounds alternate a parallel expansion phase (walks plus provisional
    filtering against the round's registry snapshot, pure reads) and a
    sequential merge phase that re-checks and inserts survivors: the merge
    is the critical section that makes check-and-insert atomic.
    """
    (vertices, triangles, adjacency, tri_normals,
     _order, v_u, v_t1, v_t2, v_n,
     size_kind, h0, hmin, hmax, grad, v_dist) = common
    m = len(triangles)
    nthreads = max(1, min(workers, numba_config.NUMBA_NUM_THREADS))
    set_num_threads(nthreads)

    nseed = len(seed_tri)
    cap = 1024
    while cap < 4 * nseed:
        cap *= 2
    pts_tri = np.empty(cap, np.int64)
    pts_bary = np.empty((cap, 3))
    pts_pos = np.empty((cap, 3))
    pts_h = np.empty(cap)
    reg_next = np.full(cap, -1, np.int64)
    reg_head = np.full(m, -1, np.int64)

    # seed all queues: contiguous split of the ordered seed list
    tri_v = triangles[seed_tri]
    pos = np.einsum("ij,ijk->ik", seed_bary, vertices[tri_v])
    if size_kind == 0:
        hs = np.full(nseed, h0)
    else:
        d = np.einsum("ij,ij->i", seed_bary, v_dist[tri_v])
        hs = np.clip(hmin + grad * d, hmin, hmax)
    pts_tri[:nseed] = seed_tri
    pts_bary[:nseed] = seed_bary
    pts_pos[:nseed] = pos
    pts_h[:nseed] = hs
    count = 0
    for s in range(nseed):
        t = seed_tri[s]
        reg_next[s] = reg_head[t]
        reg_head[t] = s
        count += 1

    bounds = np.linspace(0, nseed, workers + 1).astype(int)
    queues = [list(range(bounds[w], bounds[w + 1])) for w in range(workers)]
    heads = [0] * workers

    visited_t = np.zeros((nthreads, m), np.int64)
    bfs_t = np.empty((nthreads, m), np.int64)
    stamp_t = np.zeros(nthreads, np.int64)
    visited_m = np.zeros(m, np.int64)
    bfs_m = np.empty(m, np.int64)
    stamp_m = 0

    max_slots = workers * PARALLEL_BATCH * order
    cand_status = np.empty(max_slots, np.int64)
    cand_tri = np.empty(max_slots, np.int64)
    cand_bary = np.empty((max_slots, 3))
    cand_pos = np.empty((max_slots, 3))
    cand_h = np.empty(max_slots)
    cand_frame = np.zeros((max_slots, 9))
    cand_steps = np.zeros(max_slots, np.int64)
    accepted_out = np.empty(max_slots, np.int64)

    walks_ok = walks_bdry = walks_path = steps_ok = rejected = 0

    while True:
        src = []
        owners = []
        for w in range(workers):
            take = min(PARALLEL_BATCH, len(queues[w]) - heads[w])
            if take > 0:
                src.extend(queues[w][heads[w] : heads[w] + take])
                owners.extend([w] * take)
                heads[w] += take
        if not src:
            break
        src_idx = np.asarray(src, dtype=np.int64)
        nb = len(src_idx)
        slots = nb * order

        need = count + slots
        if need > cap:
            newcap = cap
            while newcap < need:
                newcap *= 2
            pts_tri = np.concatenate([pts_tri, np.empty(newcap - cap, np.int64)])
            pts_bary = np.vstack([pts_bary, np.empty((newcap - cap, 3))])
            pts_pos = np.vstack([pts_pos, np.empty((newcap - cap, 3))])
            pts_h = np.concatenate([pts_h, np.empty(newcap - cap)])
            reg_next = np.concatenate([reg_next, np.full(newcap - cap, -1, np.int64)])
            cap = newcap

        _kernels.expand_batch_kernel(
            vertices, triangles, adjacency, tri_normals,
            order, v_u, v_t1, v_t2, v_n,
            size_kind, h0, hmin, hmax, grad, v_dist,
            pts_tri, pts_bary, pts_pos, pts_h,
            src_idx, float(alpha), code, float(collect_factor), max_walk,
            reg_head, reg_next,
            visited_t, bfs_t, stamp_t,
            cand_status[:slots], cand_tri[:slots], cand_bary[:slots],
            cand_pos[:slots], cand_h[:slots], cand_frame[:slots], cand_steps[:slots],
        )
        count, stamp_m, merge_rej = _kernels.merge_batch_kernel(
            vertices, triangles, adjacency,
            cand_status[:slots], cand_tri[:slots], cand_bary[:slots],
            cand_pos[:slots], cand_h[:slots], cand_frame[:slots],
            float(alpha), code, float(collect_factor),
            pts_tri, pts_bary, pts_pos, pts_h, count,
            reg_head, reg_next, visited_m, bfs_m, stamp_m,
            accepted_out[:slots],
        )
        st = cand_status[:slots]
        walks_bdry += int(np.count_nonzero(st == _kernels.CAND_WALK_BOUNDARY))
        walks_path += int(np.count_nonzero(st == _kernels.CAND_WALK_PATHOLOGICAL))
        good = (st == _kernels.CAND_PASS) | (st == _kernels.CAND_FILTERED)
        walks_ok += int(np.count_nonzero(good))
        steps_ok += int(cand_steps[:slots][good].sum())
        rejected += int(np.count_nonzero(st == _kernels.CAND_FILTERED)) + int(merge_rej)
        for slot in range(slots):
            idx = accepted_out[slot]
            if idx >= 0:
                queues[owners[slot // order]].append(int(idx))

    return (
        pts_tri[:count].copy(), pts_bary[:count].copy(), pts_pos[:count].copy(),
        pts_h[:count].copy(), walks_ok, walks_bdry, walks_path, steps_ok, rejected,
    )
