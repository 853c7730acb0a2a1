"""Planar constrained Delaunay triangulation.

Bowyer-Watson insertion with adaptive predicates: a floating-point filter
falls back to exact rational arithmetic (floats are exact rationals) when
the determinant is too small to trust. Boundary edges are recovered by
flips afterwards and marked immutable; outside regions are removed by a
flood fill that respects constrained edges.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import MeshError

_ORIENT_EPS = 4e-16
_INCIRCLE_EPS = 1e-14


def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of the (b-a) x (c-a) cross product, exact near zero."""
    detleft = (bx - ax) * (cy - ay)
    detright = (by - ay) * (cx - ax)
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _ORIENT_EPS * detsum:
        return -1.0 if det < 0 else 1.0
    if detsum == 0.0:
        return 0.0
    d = (Fraction(bx) - Fraction(ax)) * (Fraction(cy) - Fraction(ay)) - (
        Fraction(by) - Fraction(ay)
    ) * (Fraction(cx) - Fraction(ax))
    return 0.0 if d == 0 else (1.0 if d > 0 else -1.0)


def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """> 0 iff d lies strictly inside the circumcircle of CCW triangle abc."""
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (
        alift * (bdx * cdy - bdy * cdx)
        + blift * (cdx * ady - cdy * adx)
        + clift * (adx * bdy - ady * bdx)
    )
    permanent = (
        alift * (abs(bdx * cdy) + abs(bdy * cdx))
        + blift * (abs(cdx * ady) + abs(cdy * adx))
        + clift * (abs(adx * bdy) + abs(ady * bdx))
    )
    if abs(det) > _INCIRCLE_EPS * permanent:
        return -1.0 if det < 0 else 1.0
    if permanent == 0.0:
        return 0.0
    fa = (Fraction(ax) - Fraction(dx), Fraction(ay) - Fraction(dy))
    fb = (Fraction(bx) - Fraction(dx), Fraction(by) - Fraction(dy))
    fc = (Fraction(cx) - Fraction(dx), Fraction(cy) - Fraction(dy))
    la = fa[0] * fa[0] + fa[1] * fa[1]
    lb = fb[0] * fb[0] + fb[1] * fb[1]
    lc = fc[0] * fc[0] + fc[1] * fc[1]
    d = (
        la * (fb[0] * fc[1] - fb[1] * fc[0])
        + lb * (fc[0] * fa[1] - fc[1] * fa[0])
        + lc * (fa[0] * fb[1] - fa[1] * fb[0])
    )
    return 0.0 if d == 0 else (1.0 if d > 0 else -1.0)


class Triangulation2D:
    """Mutable triangle store for Bowyer-Watson and flip-based recovery.

    Edge k of a triangle is opposite local vertex k; ``adj[t][k]`` is the
    neighbor across it (-1 outside the super-triangle).
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be (n, 2)")
        self.n_input = len(pts)
        lo = pts.min(axis=0) if len(pts) else np.zeros(2)
        hi = pts.max(axis=0) if len(pts) else np.ones(2)
        span = max(float(np.max(hi - lo)), 1.0)
        cx, cy = (lo + hi) / 2.0
        big = 1e4 * span
        super_pts = np.array(
            [[cx - 2 * big, cy - big], [cx + 2 * big, cy - big], [cx, cy + 2 * big]]
        )
        self.points = np.vstack([pts, super_pts])
        s0, s1, s2 = self.n_input, self.n_input + 1, self.n_input + 2
        self.tris = [[s0, s1, s2]]
        self.adj = [[-1, -1, -1]]
        self.alive = [True]
        self.vert2tri = {s0: 0, s1: 0, s2: 0}
        self._last = 0

    # -- helpers ---------------------------------------------------------

    def _orient(self, a, b, c):
        pa, pb, pc = self.points[a], self.points[b], self.points[c]
        return orient2d(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1])

    def _incircle(self, a, b, c, d):
        pa, pb, pc, pd = self.points[a], self.points[b], self.points[c], self.points[d]
        return incircle(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1], pd[0], pd[1])

    def edge_slot(self, t, u, v):
        tri = self.tris[t]
        for k in range(3):
            if {tri[(k + 1) % 3], tri[(k + 2) % 3]} == {u, v}:
                return k
        raise MeshError("edge not found in triangle")

    def _replace_neighbor(self, t, old, new):
        if t < 0:
            return
        for k in range(3):
            if self.adj[t][k] == old:
                self.adj[t][k] = new
                return

    def locate(self, p):
        """Visibility walk to a triangle containing point index p."""
        t = self._last if self.alive[self._last] else next(
            i for i in range(len(self.tris)) if self.alive[i]
        )
        px, py = self.points[p]
        for _ in range(4 * len(self.tris) + 16):
            tri = self.tris[t]
            moved = False
            for k in range(3):
                a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
                pa, pb = self.points[a], self.points[b]
                if orient2d(pa[0], pa[1], pb[0], pb[1], px, py) < 0:
                    nxt = self.adj[t][k]
                    if nxt >= 0:
                        t = nxt
                        moved = True
                        break
            if not moved:
                self._last = t
                return t
        raise MeshError("point location failed")

    # -- Bowyer-Watson ---------------------------------------------------

    def insert(self, p):
        t0 = self.locate(p)
        # cavity of triangles whose circumcircle strictly contains p
        cavity = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            for k in range(3):
                o = self.adj[t][k]
                if o < 0 or o in cavity:
                    continue
                a, b, c = self.tris[o]
                if self._incircle(a, b, c, p) > 0:
                    cavity.add(o)
                    stack.append(o)
        # boundary of the cavity, as directed edges (a, b) with outside tri
        boundary = []
        for t in cavity:
            tri = self.tris[t]
            for k in range(3):
                o = self.adj[t][k]
                if o in cavity:
                    continue
                boundary.append((tri[(k + 1) % 3], tri[(k + 2) % 3], o, t))
        for t in cavity:
            self.alive[t] = False
        fan_of = {}
        created = []
        for a, b, o, t in boundary:
            idx = len(self.tris)
            self.tris.append([a, b, p])
            self.adj.append([-1, -1, -1])
            self.alive.append(True)
            self.adj[idx][2] = o  # edge (a, b) is opposite local vertex 2
            self._replace_neighbor(o, t, idx)
            fan_of[a] = idx
            created.append((idx, a, b))
            self.vert2tri[a] = idx
            self.vert2tri[b] = idx
        for idx, a, b in created:
            nxt = fan_of[b]
            self.adj[idx][0] = nxt  # edge (b, p) opposite local vertex 0 (= a)
            self.adj[nxt][1] = idx  # edge (p, b) in nxt is opposite its vertex 1
        self.vert2tri[p] = created[0][0] if created else self._last
        self._last = self.vert2tri[p]

    # -- vertex fans and flips -------------------------------------------

    def star(self, v):
        """Alive triangles around vertex v (order not guaranteed)."""
        out = []
        seen = set()
        t0 = self.vert2tri.get(v, -1)
        if t0 < 0 or not self.alive[t0] or v not in self.tris[t0]:
            t0 = -1
            for i in range(len(self.tris)):
                if self.alive[i] and v in self.tris[i]:
                    t0 = i
                    break
            if t0 < 0:
                return out
            self.vert2tri[v] = t0
        stack = [t0]
        seen.add(t0)
        while stack:
            t = stack.pop()
            out.append(t)
            k = self.tris[t].index(v)
            for e in ((k + 1) % 3, (k + 2) % 3):
                o = self.adj[t][e]
                if o >= 0 and o not in seen and v in self.tris[o]:
                    seen.add(o)
                    stack.append(o)
        return out

    def edge_triangle(self, u, v):
        """Triangle containing directed edge u->v in CCW order, or -1."""
        for t in self.star(u):
            tri = self.tris[t]
            for k in range(3):
                if tri[k] == u and tri[(k + 1) % 3] == v:
                    return t
        return -1

    def has_edge(self, u, v):
        for t in self.star(u):
            if v in self.tris[t]:
                return True
        return False

    def flip(self, t, k):
        """Flip the edge opposite local vertex k of triangle t."""
        o = self.adj[t][k]
        if o < 0:
            raise MeshError("cannot flip a boundary edge")
        c = self.tris[t][k]
        a = self.tris[t][(k + 1) % 3]
        b = self.tris[t][(k + 2) % 3]
        ko = next(kk for kk in range(3) if self.adj[o][kk] == t)
        d = self.tris[o][ko]
        # outer neighbors
        A = self.adj[t][(k + 1) % 3]  # across (b, c)
        B = self.adj[t][(k + 2) % 3]  # across (c, a)
        ka = self.tris[o].index(a)
        kb = self.tris[o].index(b)
        C = self.adj[o][kb]  # across (a, d)
        D = self.adj[o][ka]  # across (d, b)
        # new triangles: t=(a, d, c), o=(d, b, c)
        self.tris[t] = [a, d, c]
        self.tris[o] = [d, b, c]
        self.adj[t] = [o, B, C]   # opp a=(d,c)->o, opp d=(c,a)->B, opp c=(a,d)->C
        self.adj[o] = [A, t, D]   # opp d=(b,c)->A, opp b=(c,d)->t, opp c=(d,b)->D
        self._replace_neighbor(C, o, t)
        self._replace_neighbor(A, t, o)
        for v, tt in ((a, t), (d, t), (c, t), (b, o)):
            self.vert2tri[v] = tt
        return c, d

    # -- constrained recovery ----------------------------------------------

    def insert_constraint(self, a, b):
        """Recover edge (a, b) by flipping the edges that cross it."""
        if a == b:
            raise MeshError("degenerate constraint edge")
        if self.has_edge(a, b):
            return
        queue = self._collect_crossings(a, b)
        guard = 0
        while queue:
            guard += 1
            if guard > 100 * (len(queue) + 100):
                raise MeshError(f"constraint recovery stalled for edge ({a}, {b})")
            u, v = queue.pop(0)
            t = self.edge_triangle(u, v)
            if t < 0:
                t = self.edge_triangle(v, u)
            if t < 0:
                continue  # edge already flipped away
            k = self.edge_slot(t, u, v)
            o = self.adj[t][k]
            if o < 0:
                raise MeshError("constraint crosses the triangulation boundary")
            ko = next(kk for kk in range(3) if self.adj[o][kk] == t)
            c, d = self.tris[t][k], self.tris[o][ko]
            if self._orient(u, d, c) > 0 and self._orient(d, v, c) > 0:
                self.flip(t, k)
                # the new edge (c, d) may itself cross the segment
                if c != a and c != b and d != a and d != b:
                    sc, sd = self._orient(a, b, c), self._orient(a, b, d)
                    if sc * sd < 0:
                        ta = self._orient(c, d, a)
                        tb = self._orient(c, d, b)
                        if ta * tb < 0:
                            queue.append((c, d))
            else:
                queue.append((u, v))

    def _collect_crossings(self, a, b):
        """Edges strictly crossing segment a-b, walked from a toward b."""
        start = None
        for t in self.star(a):
            k = self.tris[t].index(a)
            # in CCW triangle (a, u, v): u lies right of the ray a->b,
            # v lies left, when the segment exits through edge (u, v)
            u = self.tris[t][(k + 1) % 3]
            v = self.tris[t][(k + 2) % 3]
            if b in (u, v):
                return []
            if self._orient(a, b, v) > 0 > self._orient(a, b, u) and self._orient(u, v, b) < 0:
                start = (t, u, v)
                break
        if start is None:
            raise MeshError(f"no crossing found for constraint ({a}, {b})")
        crossings = []
        t, right, left = start
        guard = 0
        while guard < 10 * len(self.tris) + 100:
            guard += 1
            crossings.append((right, left))
            k = self.edge_slot(t, right, left)
            o = self.adj[t][k]
            if o < 0:
                raise MeshError("constraint crosses the triangulation boundary")
            ko = next(kk for kk in range(3) if self.adj[o][kk] == t)
            d = self.tris[o][ko]
            if d == b:
                return crossings
            side = self._orient(a, b, d)
            if side == 0:
                raise MeshError("constraint passes through a vertex")
            if side > 0:
                left = d
            else:
                right = d
            t = o
        raise MeshError("constraint crossing walk stalled")

    # -- extraction ---------------------------------------------------------

    def finalize(self, constrained=None, outside_seed_edges=None):
        """Remove super-triangle material and flood-marked outside regions.

        ``constrained``: iterable of (a, b) edges the flood cannot cross.
        ``outside_seed_edges``: directed (a, b) edges whose left triangle is
        outside the domain. Returns an (m, 3) int array of triangles.
        """
        constrained_set = set()
        for a, b in constrained or ():
            constrained_set.add((min(a, b), max(a, b)))
        outside = set()
        stack = []
        sverts = {self.n_input, self.n_input + 1, self.n_input + 2}
        for i in range(len(self.tris)):
            if self.alive[i] and sverts.intersection(self.tris[i]):
                outside.add(i)
                if constrained_set:
                    stack.append(i)
        for a, b in outside_seed_edges or ():
            t = self.edge_triangle(a, b)
            if t >= 0 and t not in outside:
                outside.add(t)
                stack.append(t)
        while stack:
            t = stack.pop()
            tri = self.tris[t]
            for k in range(3):
                o = self.adj[t][k]
                if o < 0 or o in outside or not self.alive[o]:
                    continue
                u, v = tri[(k + 1) % 3], tri[(k + 2) % 3]
                if (min(u, v), max(u, v)) in constrained_set:
                    continue
                outside.add(o)
                stack.append(o)
        keep = [
            self.tris[i]
            for i in range(len(self.tris))
            if self.alive[i] and i not in outside
        ]
        return np.asarray(keep, dtype=np.int64).reshape(-1, 3)


def delaunay(points) -> np.ndarray:
    """Unconstrained 2D Delaunay triangles of distinct points."""
    tri = Triangulation2D(points)
    for p in range(tri.n_input):
        tri.insert(p)
    return tri.finalize()


def constrained_delaunay(points, loops) -> np.ndarray:
    """Delaunay triangulation constrained to closed boundary loops.

    ``loops``: sequences of point indices, each directed with the domain
    interior on its left. Triangles outside the loops (and inside holes)
    are removed.
    """
    tri = Triangulation2D(points)
    for p in range(tri.n_input):
        tri.insert(p)
    edges = []
    for loop in loops:
        k = len(loop)
        for i in range(k):
            edges.append((int(loop[i]), int(loop[(i + 1) % k])))
    for a, b in edges:
        tri.insert_constraint(a, b)
    outside_seeds = [(b, a) for a, b in edges]
    return tri.finalize(constrained=edges, outside_seed_edges=outside_seeds)
