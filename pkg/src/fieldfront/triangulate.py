"""Output triangulation of the generated point set.

Planar domains get an exact 2D constrained Delaunay triangulation of the
points. Curved surfaces are retriangulated in place: the generated points
are inserted into a copy of the base mesh by triangle/edge splits, the
original vertices that are not part of the point set are removed by
ear-clip cavity refills, and edge flips (in-circumcircle in the common
plane of each triangle pair) run to convergence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .delaunay import constrained_delaunay, incircle, orient2d
from .errors import MeshError
from .frontal import GeneratedPoints
from .mesh import SurfaceMesh, SurfacePoint

logger = logging.getLogger(__name__)

FLIP_SWEEP_CAP = 50
SNAP_TOL = 1e-7


@dataclass
class OutputMesh:
    """Final triangulation with back-references onto the base surface.

    ``quad_pairs`` (filled by recombination) lists matched triangle pairs;
    quality arrays are attached by the quality stage.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    point_triangle: np.ndarray  # base-mesh triangle of each vertex
    point_bary: np.ndarray
    boundary_mask: np.ndarray
    quad_pairs: np.ndarray | None = None
    tri_quality: np.ndarray | None = None
    quad_quality: np.ndarray | None = None
    flip_sweeps: int = 0
    flips_converged: bool = True

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def surface_point(self, i: int) -> SurfacePoint:
        return SurfacePoint(int(self.point_triangle[i]), self.point_bary[i].copy())

    def as_surface_mesh(self) -> SurfaceMesh:
        """Re-validate and expose the output as a SurfaceMesh (adjacency built)."""
        return SurfaceMesh(self.vertices, self.triangles)

    def polygons(self):
        """Mixed quad/triangle face list: matched pairs as quads, the rest
        as triangles (for OBJ/VTK export)."""
        if self.quad_pairs is None or len(self.quad_pairs) == 0:
            return [tuple(t) for t in self.triangles]
        from .recombine import quad_vertices  # local import against cycles

        faces = []
        matched = set()
        for t1, t2 in self.quad_pairs:
            faces.append(tuple(quad_vertices(self.triangles, int(t1), int(t2))))
            matched.update((int(t1), int(t2)))
        for t in range(len(self.triangles)):
            if t not in matched:
                faces.append(tuple(self.triangles[t]))
        return faces


def _is_planar(mesh: SurfaceMesh) -> bool:
    n = mesh.triangle_normals()
    return bool(np.all(n @ n[0] > 1.0 - 1e-9))


def triangulate(mesh: SurfaceMesh, points: GeneratedPoints, planar: bool | None = None) -> OutputMesh:
    """Triangulate the generated points on the base surface."""
    if len(points) < 3:
        raise MeshError("need at least 3 generated points to triangulate")
    if planar is None:
        planar = _is_planar(mesh)
    if planar:
        return _planar_triangulate(mesh, points)
    return _surface_triangulate(mesh, points)


# ---------------------------------------------------------------------------
# planar path


def _boundary_chains(mesh: SurfaceMesh, points: GeneratedPoints):
    """Boundary loops of the base mesh expressed as point indices."""
    vert_to_point = {}
    for i in range(points.n_seeds):
        v = int(points.seed_vertices[i])
        if v >= 0:
            vert_to_point[v] = i
    chains = []
    for loop in mesh.boundary_loops():
        try:
            chains.append([vert_to_point[int(v)] for v in loop.vertices])
        except KeyError as exc:
            raise MeshError("boundary vertex missing from the seed set") from exc
    return chains


def _planar_triangulate(mesh: SurfaceMesh, points: GeneratedPoints) -> OutputMesh:
    n0 = mesh.triangle_normals()[0]
    # right-handed in-plane basis so CCW loops stay CCW in 2D
    k = int(np.argmin(np.abs(n0)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = np.cross(n0, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n0, t1)
    origin = mesh.vertices[0]
    pts2d = np.column_stack([(points.positions - origin) @ t1, (points.positions - origin) @ t2])

    chains = _boundary_chains(mesh, points)
    tris = constrained_delaunay(pts2d, chains)
    boundary_mask = np.zeros(len(points), dtype=bool)
    boundary_mask[: points.n_seeds] = True
    return OutputMesh(
        vertices=points.positions.copy(),
        triangles=tris,
        point_triangle=points.triangles.copy(),
        point_bary=points.bary.copy(),
        boundary_mask=boundary_mask,
    )


# ---------------------------------------------------------------------------
# surface path


class _EditableSurface:
    """Index-based editable triangle mesh for on-surface retriangulation."""

    def __init__(self, mesh: SurfaceMesh):
        self.pos = [v.copy() for v in mesh.vertices]
        self.tris = [list(map(int, t)) for t in mesh.triangles]
        self.adj = [list(map(int, a)) for a in mesh.adjacency]
        self.alive = [True] * len(self.tris)
        self.vert2tri = {}
        for t, tri in enumerate(self.tris):
            for v in tri:
                self.vert2tri[v] = t
        # a live descendant of each original base triangle, for walk starts
        self.desc = list(range(len(self.tris)))
        self.orig = list(range(len(self.tris)))

    # -- small helpers -----------------------------------------------------

    def edge_slot(self, t, u, v):
        tri = self.tris[t]
        for k in range(3):
            if {tri[(k + 1) % 3], tri[(k + 2) % 3]} == {u, v}:
                return k
        raise MeshError("edge not in triangle")

    def _replace_neighbor(self, t, old, new):
        if t >= 0:
            for k in range(3):
                if self.adj[t][k] == old:
                    self.adj[t][k] = new
                    return

    def _bary(self, t, x):
        a, b, c = (self.pos[v] for v in self.tris[t])
        e1, e2 = b - a, c - a
        w = x - a
        a11, a12, a22 = e1 @ e1, e1 @ e2, e2 @ e2
        det = a11 * a22 - a12 * a12
        if det <= 0:
            return np.array([1.0, 0.0, 0.0])
        l1 = (a22 * (w @ e1) - a12 * (w @ e2)) / det
        l2 = (a11 * (w @ e2) - a12 * (w @ e1)) / det
        return np.array([1.0 - l1 - l2, l1, l2])

    def normal(self, t):
        a, b, c = (self.pos[v] for v in self.tris[t])
        n = np.cross(b - a, c - a)
        nn = np.linalg.norm(n)
        return n / nn if nn > 0 else n

    def locate(self, start, x, max_steps=500):
        t = start if self.alive[start] else self.tris.index  # fallback below
        if not self.alive[start]:
            t = next(i for i in range(len(self.tris)) if self.alive[i])
        best = (None, None)
        for _ in range(max_steps):
            lam = self._bary(t, x)
            if lam.min() >= -1e-9:
                return t, lam
            k = int(np.argmin(lam))
            nb = self.adj[t][k]
            if nb < 0:
                order = np.argsort(lam)
                nb = self.adj[t][int(order[1])] if lam[order[1]] < 0 else -1
                if nb < 0:
                    best = (t, lam)
                    break
            t = nb
        if best[0] is None:
            best = (t, self._bary(t, x))
        lam = np.clip(best[1], 0.0, None)
        return best[0], lam / lam.sum()

    # -- structural edits ----------------------------------------------------

    def _new_tri(self, tri, adj, orig):
        self.tris.append(list(tri))
        self.adj.append(list(adj))
        self.alive.append(True)
        self.orig.append(orig)
        return len(self.tris) - 1

    def split_triangle(self, t, x):
        w = len(self.pos)
        self.pos.append(np.asarray(x, dtype=np.float64))
        a, b, c = self.tris[t]
        A, B, C = self.adj[t]  # across (b,c), (c,a), (a,b)
        o = self.orig[t]
        t2 = self._new_tri((b, c, w), (-1, -1, -1), o)
        t3 = self._new_tri((c, a, w), (-1, -1, -1), o)
        self.tris[t] = [a, b, w]
        self.adj[t] = [t2, t3, C]
        self.adj[t2] = [t3, t, A]
        self.adj[t3] = [t, t2, B]
        self._replace_neighbor(A, t, t2)
        self._replace_neighbor(B, t, t3)
        for v, tt in ((a, t), (b, t), (c, t2), (w, t)):
            self.vert2tri[v] = tt
        self.desc[o] = t
        return w

    def split_edge(self, t, k, x):
        w = len(self.pos)
        self.pos.append(np.asarray(x, dtype=np.float64))
        c = self.tris[t][k]
        u = self.tris[t][(k + 1) % 3]
        v = self.tris[t][(k + 2) % 3]
        o = self.adj[t][k]
        X = self.adj[t][(k + 1) % 3]  # across (v, c)
        ot = self.orig[t]
        # t becomes (c, u, w); t2 = (c, w, v)
        t2 = self._new_tri((c, w, v), (-1, -1, -1), ot)
        self.tris[t] = [c, u, w]
        adj_cu = self.adj[t][(k + 2) % 3]  # across (c, u)
        if o >= 0:
            oo = self.orig[o]
            ko = next(kk for kk in range(3) if self.adj[o][kk] == t)
            d = self.tris[o][ko]
            # o = (d, v, u) in some rotation; rebuild from labels
            Y = self.adj[o][self.edge_slot(o, d, v)]
            Z = self.adj[o][self.edge_slot(o, d, u)]
            o2 = self._new_tri((d, w, u), (-1, -1, -1), oo)
            self.tris[o] = [d, v, w]
            self.adj[o] = [t2, o2, Y]
            self.adj[o2] = [t, Z, o]
            self.adj[t] = [o2, t2, adj_cu]
            self.adj[t2] = [o, X, t]
            self._replace_neighbor(Z, o, o2)
            self._replace_neighbor(X, t, t2)
            for vv, tt in ((d, o), (v, o), (u, o2), (w, t)):
                self.vert2tri[vv] = tt
            self.desc[oo] = o
        else:
            self.adj[t] = [-1, t2, adj_cu]
            self.adj[t2] = [-1, X, t]
            self._replace_neighbor(X, t, t2)
        for vv, tt in ((c, t), (u, t), (v, t2), (w, t)):
            self.vert2tri[vv] = tt
        self.desc[ot] = t
        return w

    def insert_point(self, start, x):
        t, lam = self.locate(start, x)
        k_max = int(np.argmax(lam))
        if lam[k_max] > 1.0 - SNAP_TOL:
            return self.tris[t][k_max]
        k_min = int(np.argmin(lam))
        if lam[k_min] < SNAP_TOL:
            return self.split_edge(t, k_min, x)
        return self.split_triangle(t, x)

    # -- vertex removal ------------------------------------------------------

    def ring(self, v):
        """Neighbors of v in cyclic (CCW) order; None if v is on a boundary."""
        t0 = self.vert2tri.get(v, -1)
        if t0 < 0 or not self.alive[t0] or v not in self.tris[t0]:
            t0 = -1
            for i in range(len(self.tris)):
                if self.alive[i] and v in self.tris[i]:
                    t0 = i
                    break
            if t0 < 0:
                return None, None
        out_tris = []
        ring = []
        t = t0
        guard = 0
        while guard < 10000:
            guard += 1
            k = self.tris[t].index(v)
            p = self.tris[t][(k + 1) % 3]
            q = self.tris[t][(k + 2) % 3]
            ring.append(p)
            out_tris.append(t)
            nxt = self.adj[t][self.edge_slot(t, v, q)]
            if nxt < 0:
                return None, None  # boundary fan: caller keeps the vertex
            if nxt == t0:
                return ring, out_tris
            t = nxt
        raise MeshError("vertex ring walk stalled")

    def delete_vertex(self, v):
        """Remove an interior vertex and ear-clip the resulting cavity.

        Returns False (leaving the mesh untouched) when the vertex sits on
        a boundary fan or when every ear would duplicate an edge that
        already exists outside the cavity.
        """
        ring, star = self.ring(v)
        if ring is None:
            return False
        # outer neighbors across each ring edge (ring[i], ring[i+1])
        outer = {}
        for t in star:
            k = self.tris[t].index(v)
            p = self.tris[t][(k + 1) % 3]
            q = self.tris[t][(k + 2) % 3]
            outer[(p, q)] = self.adj[t][k]

        # diagonals that would duplicate existing outside edges are illegal
        forbidden = set()
        k_ring = len(ring)
        for i in range(k_ring):
            for j in range(i + 2, k_ring):
                if i == 0 and j == k_ring - 1:
                    continue  # consecutive around the cycle
                if self.has_edge(ring[i], ring[j]):
                    forbidden.add((min(ring[i], ring[j]), max(ring[i], ring[j])))

        # project the ring onto the average star plane for 2D ear tests
        nrm = np.zeros(3)
        for t in star:
            a, b, c = (self.pos[u] for u in self.tris[t])
            nrm += np.cross(b - a, c - a)
        nn = np.linalg.norm(nrm)
        nrm = nrm / nn if nn > 0 else np.array([0.0, 0.0, 1.0])
        kk = int(np.argmin(np.abs(nrm)))
        e = np.zeros(3)
        e[kk] = 1.0
        b1 = np.cross(nrm, e)
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(nrm, b1)
        center = self.pos[v]
        coords = {u: np.array([(self.pos[u] - center) @ b1, (self.pos[u] - center) @ b2]) for u in ring}

        fills = _plan_ear_fill(list(ring), coords, forbidden)
        if fills is None:
            return False

        for t in star:
            self.alive[t] = False
        orig = self.orig[star[0]]

        # stitch the fill: pending maps directed edge -> (tri, slot)
        pending = {}
        k_ring = len(ring)
        for i in range(k_ring):
            p, q = ring[i], ring[(i + 1) % k_ring]
            o = outer[(p, q)]
            if o >= 0:
                pending[(q, p)] = (o, self.edge_slot(o, p, q))
        for a, b, c in fills:
            idx = self._new_tri((a, b, c), (-1, -1, -1), orig)
            for k, (u, w) in enumerate(((b, c), (c, a), (a, b))):
                if (w, u) in pending:
                    ot, ok_ = pending.pop((w, u))
                    self.adj[idx][k] = ot
                    self.adj[ot][ok_] = idx
                else:
                    pending[(u, w)] = (idx, k)
            for u in (a, b, c):
                self.vert2tri[u] = idx
        self.desc[orig] = len(self.tris) - 1
        self.vert2tri.pop(v, None)
        return True

    # -- Delaunay flips --------------------------------------------------------

    def flip_edge(self, t, k):
        o = self.adj[t][k]
        c = self.tris[t][k]
        a = self.tris[t][(k + 1) % 3]
        b = self.tris[t][(k + 2) % 3]
        ko = next(kk for kk in range(3) if self.adj[o][kk] == t)
        d = self.tris[o][ko]
        A = self.adj[t][(k + 1) % 3]
        B = self.adj[t][(k + 2) % 3]
        C = self.adj[o][self.edge_slot(o, a, d)]
        D = self.adj[o][self.edge_slot(o, d, b)]
        self.tris[t] = [a, d, c]
        self.tris[o] = [d, b, c]
        self.adj[t] = [o, B, C]
        self.adj[o] = [A, t, D]
        self._replace_neighbor(C, o, t)
        self._replace_neighbor(A, t, o)
        for v, tt in ((a, t), (d, t), (c, t), (b, o)):
            self.vert2tri[v] = tt

    def has_edge(self, u, v):
        t0 = self.vert2tri.get(u, -1)
        stack = [t0] if t0 >= 0 and self.alive[t0] and u in self.tris[t0] else []
        if not stack:
            for i in range(len(self.tris)):
                if self.alive[i] and u in self.tris[i]:
                    stack = [i]
                    break
        seen = set(stack)
        while stack:
            t = stack.pop()
            if v in self.tris[t]:
                return True
            kk = self.tris[t].index(u)
            for e in ((kk + 1) % 3, (kk + 2) % 3):
                nb = self.adj[t][e]
                if nb >= 0 and nb not in seen and u in self.tris[nb]:
                    seen.add(nb)
                    stack.append(nb)
        return False

    def delaunay_flips(self, max_sweeps=FLIP_SWEEP_CAP):
        """Flip to the empty-circumcircle condition in each pair's common plane."""
        sweeps = 0
        for _ in range(max_sweeps):
            sweeps += 1
            flips = 0
            for t in range(len(self.tris)):
                if not self.alive[t]:
                    continue
                for k in range(3):
                    o = self.adj[t][k]
                    if o <= t:
                        continue
                    if self._should_flip(t, k, o):
                        self.flip_edge(t, k)
                        flips += 1
            if flips == 0:
                return sweeps, True
        return sweeps, False

    def _should_flip(self, t, k, o):
        c = self.tris[t][k]
        a = self.tris[t][(k + 1) % 3]
        b = self.tris[t][(k + 2) % 3]
        ko = next(kk for kk in range(3) if self.adj[o][kk] == t)
        d = self.tris[o][ko]
        if c == d:
            return False
        n = self.normal(t) + self.normal(o)
        nn = np.linalg.norm(n)
        if nn < 0.5:  # nearly opposite normals: fold, leave alone
            return False
        n /= nn
        kk = int(np.argmin(np.abs(n)))
        e = np.zeros(3)
        e[kk] = 1.0
        b1 = np.cross(n, e)
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(n, b1)
        pa = self.pos[a]
        p = {v: np.array([(self.pos[v] - pa) @ b1, (self.pos[v] - pa) @ b2]) for v in (a, b, c, d)}
        scale = max(np.linalg.norm(p[b]), np.linalg.norm(p[c]), np.linalg.norm(p[d]), 1e-300)
        area_eps = 1e-10 * scale * scale

        def cross2(u, w):
            return u[0] * w[1] - u[1] * w[0]

        # the two post-flip triangles must stay CCW (strictly convex quad)
        if (
            cross2(p[d] - p[a], p[c] - p[a]) <= area_eps
            or cross2(p[b] - p[d], p[c] - p[d]) <= area_eps
        ):
            return False
        det = _incircle_float(p[a], p[b], p[c], p[d])
        if det <= 1e-9 * scale**4:  # hysteresis: cocircular quads stay put
            return False
        return not self.has_edge(c, d)

    def compact(self):
        """(vertices, triangles, old-vertex -> new-vertex map)."""
        used = sorted({v for t in range(len(self.tris)) if self.alive[t] for v in self.tris[t]})
        vmap = {v: i for i, v in enumerate(used)}
        vertices = np.array([self.pos[v] for v in used])
        tris = np.array(
            [[vmap[v] for v in self.tris[t]] for t in range(len(self.tris)) if self.alive[t]],
            dtype=np.int64,
        )
        return vertices, tris, vmap


def _plan_ear_fill(poly, coords, forbidden):
    """Ear-clip a closed polygon into triangles; None when every remaining
    ear would create a diagonal from the forbidden set."""
    fills = []
    guard = 0
    while len(poly) > 3 and guard < 10000:
        guard += 1
        best = None
        fallback = None
        for i in range(len(poly)):
            a = poly[i - 1]
            b = poly[i]
            c = poly[(i + 1) % len(poly)]
            if (min(a, c), max(a, c)) in forbidden:
                continue
            pa, pb, pc = coords[a], coords[b], coords[c]
            cr = float((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
            if fallback is None or cr > fallback[0]:
                fallback = (cr, i)
            if orient2d(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1]) <= 0:
                continue
            contained = False
            for u in poly:
                if u in (a, b, c):
                    continue
                pu = coords[u]
                if (
                    orient2d(pa[0], pa[1], pb[0], pb[1], pu[0], pu[1]) >= 0
                    and orient2d(pb[0], pb[1], pc[0], pc[1], pu[0], pu[1]) >= 0
                    and orient2d(pc[0], pc[1], pa[0], pa[1], pu[0], pu[1]) >= 0
                ):
                    contained = True
                    break
            if contained:
                continue
            quality = _min_angle_2d(pa, pb, pc)
            if best is None or quality > best[0]:
                best = (quality, i)
        if best is None:
            # numerically stuck polygon: clip the least-degenerate legal corner
            if fallback is None:
                return None
            best = fallback
        i = best[1]
        fills.append((poly[i - 1], poly[i], poly[(i + 1) % len(poly)]))
        del poly[i]
    fills.append((poly[0], poly[1], poly[2]))
    return fills


def _min_angle_2d(pa, pb, pc):
    angs = []
    for x, y, z in ((pa, pb, pc), (pb, pc, pa), (pc, pa, pb)):
        u, w = y - x, z - x
        nu, nw = np.linalg.norm(u), np.linalg.norm(w)
        if nu == 0 or nw == 0:
            return 0.0
        angs.append(np.arccos(np.clip(u @ w / (nu * nw), -1, 1)))
    return min(angs)


def _incircle_float(pa, pb, pc, pd):
    adx, ady = pa[0] - pd[0], pa[1] - pd[1]
    bdx, bdy = pb[0] - pd[0], pb[1] - pd[1]
    cdx, cdy = pc[0] - pd[0], pc[1] - pd[1]
    return (
        (adx * adx + ady * ady) * (bdx * cdy - bdy * cdx)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - cdy * adx)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - ady * bdx)
    )


def _surface_triangulate(mesh: SurfaceMesh, points: GeneratedPoints) -> OutputMesh:
    es = _EditableSurface(mesh)
    n_base = mesh.n_vertices
    vertex_of_point = np.full(len(points), -1, dtype=np.int64)
    keep_base = set()

    for i in range(points.n_seeds):
        v = int(points.seed_vertices[i])
        vertex_of_point[i] = v
        keep_base.add(v)

    for i in range(points.n_seeds, len(points)):
        start = es.desc[int(points.triangles[i])]
        vid = es.insert_point(start, points.positions[i])
        if vid < n_base:
            keep_base.add(vid)
        vertex_of_point[i] = vid

    pending = [v for v in range(n_base) if v not in keep_base]
    # deletions stuck on duplicate-diagonal cavities usually clear once a
    # neighboring vertex has gone; retry until no progress
    while pending:
        stuck = [v for v in pending if not es.delete_vertex(v)]
        if len(stuck) == len(pending):
            break
        pending = stuck
    if pending:
        raise MeshError(
            f"{len(pending)} base vertices could not be removed from the "
            "surface retriangulation"
        )

    sweeps, converged = es.delaunay_flips()
    if not converged:
        logger.warning("surface Delaunay flips hit the %d-sweep cap", sweeps)

    vertices, tris, vmap = es.compact()
    # back-references: every surviving vertex corresponds to a generated point
    point_of_vertex = {}
    for i in range(len(points)):
        vid = int(vertex_of_point[i])
        if vid in vmap:
            point_of_vertex[vmap[vid]] = i
    nv = len(vertices)
    point_triangle = np.zeros(nv, dtype=np.int64)
    point_bary = np.zeros((nv, 3))
    boundary_mask = np.zeros(nv, dtype=bool)
    has_boundary = len(mesh.boundary_loops()) > 0
    for newv in range(nv):
        i = point_of_vertex.get(newv)
        if i is None:
            raise MeshError("a non-point vertex survived surface retriangulation")
        point_triangle[newv] = points.triangles[i]
        point_bary[newv] = points.bary[i]
        if has_boundary and i < points.n_seeds:
            boundary_mask[newv] = True
    return OutputMesh(
        vertices=vertices,
        triangles=tris,
        point_triangle=point_triangle,
        point_bary=point_bary,
        boundary_mask=boundary_mask,
        flip_sweeps=sweeps,
        flips_converged=converged,
    )
