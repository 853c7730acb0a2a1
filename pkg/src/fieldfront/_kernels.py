"""Numba-compiled kernels for the hot paths.

Field smoothing and sampling, the walking circle/surface intersection,
exclusion-zone filtering, frontal point generation (sequential and batched
parallel), and the cavity relocation optimizer all live here, operating on
flat float64/int64 arrays. The public modules own conversion between the
dataclass layer and these arrays.
"""

from __future__ import annotations

import numpy as np
from numba import get_thread_id, njit, prange

# walk outcomes
WALK_OK = 0
WALK_HIT_BOUNDARY = 1
WALK_PATHOLOGICAL = 2

# candidate outcomes (parallel expansion)
CAND_PASS = 0
CAND_WALK_BOUNDARY = 1
CAND_WALK_PATHOLOGICAL = 2
CAND_FILTERED = 3

# filter norms
NORM_LINF = 0
NORM_L2 = 1
NORM_LINF_FRAME = 2

BARY_TOL = 1e-10


# ---------------------------------------------------------------------------
# small vector helpers


@njit(cache=True, inline="always")
def _normalize3(x, y, z):
    n = np.sqrt(x * x + y * y + z * z)
    if n < 1e-300:
        return 0.0, 0.0, 0.0, 0.0
    return x / n, y / n, z / n, n


@njit(cache=True, inline="always")
def _frame_from_normal(nx, ny, nz):
    """Deterministic orthonormal tangent pair for a unit normal.

    t1 = normalize(n x e) with e the coordinate axis of smallest |n|
    component, t2 = n x t1.
    """
    ax, ay, az = abs(nx), abs(ny), abs(nz)
    if ax <= ay and ax <= az:
        ex, ey, ez = 1.0, 0.0, 0.0
    elif ay <= az:
        ex, ey, ez = 0.0, 1.0, 0.0
    else:
        ex, ey, ez = 0.0, 0.0, 1.0
    tx = ny * ez - nz * ey
    ty = nz * ex - nx * ez
    tz = nx * ey - ny * ex
    tx, ty, tz, _ = _normalize3(tx, ty, tz)
    sx = ny * tz - nz * ty
    sy = nz * tx - nx * tz
    sz = nx * ty - ny * tx
    return tx, ty, tz, sx, sy, sz


@njit(cache=True, inline="always")
def _barycentric(vertices, triangles, t, px, py, pz):
    """Barycentric coordinates of p w.r.t. triangle t (implicit plane projection)."""
    i0 = triangles[t, 0]
    i1 = triangles[t, 1]
    i2 = triangles[t, 2]
    e1x = vertices[i1, 0] - vertices[i0, 0]
    e1y = vertices[i1, 1] - vertices[i0, 1]
    e1z = vertices[i1, 2] - vertices[i0, 2]
    e2x = vertices[i2, 0] - vertices[i0, 0]
    e2y = vertices[i2, 1] - vertices[i0, 1]
    e2z = vertices[i2, 2] - vertices[i0, 2]
    wx = px - vertices[i0, 0]
    wy = py - vertices[i0, 1]
    wz = pz - vertices[i0, 2]
    a11 = e1x * e1x + e1y * e1y + e1z * e1z
    a12 = e1x * e2x + e1y * e2y + e1z * e2z
    a22 = e2x * e2x + e2y * e2y + e2z * e2z
    det = a11 * a22 - a12 * a12
    if det <= 1e-300:
        return 0.0, 0.0, 0.0, False
    b1 = wx * e1x + wy * e1y + wz * e1z
    b2 = wx * e2x + wy * e2y + wz * e2z
    l1 = (a22 * b1 - a12 * b2) / det
    l2 = (a11 * b2 - a12 * b1) / det
    return 1.0 - l1 - l2, l1, l2, True


# ---------------------------------------------------------------------------
# direction field: Gauss-Seidel smoothing and interpolation


@njit(cache=True)
def smooth_field(u, fixed, indptr, nbrs, rot_cos, rot_sin, tol, max_sweeps, omega):
    """In-place nonlinear Gauss-Seidel on representation vectors.

    The target of each free vertex is the renormalized average of its
    neighbors' representation vectors, transported into its frame by the
    precomputed per-edge rotation; ``omega`` over-relaxes the move toward
    the target (omega=1 reproduces plain averaging and the fixed point is
    the same for any omega). The residual is the largest distance between
    a vertex and its target, i.e. how far u is from being a fixed point.
    Returns (final residual, sweeps used).
    """
    n = u.shape[0]
    resid = 0.0
    for sweep in range(max_sweeps):
        resid = 0.0
        for i in range(n):
            if fixed[i]:
                continue
            sx = 0.0
            sy = 0.0
            for e in range(indptr[i], indptr[i + 1]):
                j = nbrs[e]
                sx += rot_cos[e] * u[j, 0] - rot_sin[e] * u[j, 1]
                sy += rot_sin[e] * u[j, 0] + rot_cos[e] * u[j, 1]
            nrm = np.sqrt(sx * sx + sy * sy)
            if nrm < 1e-30:
                continue
            sx /= nrm
            sy /= nrm
            dx = sx - u[i, 0]
            dy = sy - u[i, 1]
            change = np.sqrt(dx * dx + dy * dy)
            if change > resid:
                resid = change
            if omega == 1.0:
                u[i, 0] = sx
                u[i, 1] = sy
            else:
                dphi = np.arctan2(sy * u[i, 0] - sx * u[i, 1], sx * u[i, 0] + sy * u[i, 1])
                phi = np.arctan2(u[i, 1], u[i, 0]) + omega * dphi
                u[i, 0] = np.cos(phi)
                u[i, 1] = np.sin(phi)
        if resid < tol:
            return resid, sweep + 1
    return resid, max_sweeps


@njit(cache=True, inline="always")
def _interp_normal_frame(triangles, v_n, t, l0, l1, l2):
    i0 = triangles[t, 0]
    i1 = triangles[t, 1]
    i2 = triangles[t, 2]
    nx = l0 * v_n[i0, 0] + l1 * v_n[i1, 0] + l2 * v_n[i2, 0]
    ny = l0 * v_n[i0, 1] + l1 * v_n[i1, 1] + l2 * v_n[i2, 1]
    nz = l0 * v_n[i0, 2] + l1 * v_n[i1, 2] + l2 * v_n[i2, 2]
    nx, ny, nz, nrm = _normalize3(nx, ny, nz)
    if nrm == 0.0:
        # opposing vertex normals; fall back to the dominant vertex
        k = i0
        if l1 >= l0 and l1 >= l2:
            k = i1
        elif l2 >= l0 and l2 >= l1:
            k = i2
        nx, ny, nz = v_n[k, 0], v_n[k, 1], v_n[k, 2]
    return nx, ny, nz


@njit(cache=True)
def sample_field(triangles, order, v_u, v_t1, v_t2, v_n, t, l0, l1, l2, dirs_out):
    """Interpolate the field at a surface point and emit its order directions.

    Representation vectors are transported into the tangent frame of the
    interpolated normal, averaged with barycentric weights and renormalized;
    a vanishing average (field singularity inside the triangle) falls back
    to the dominant vertex. Returns the interpolated unit normal.
    """
    nx, ny, nz = _interp_normal_frame(triangles, v_n, t, l0, l1, l2)
    t1x, t1y, t1z, t2x, t2y, t2z = _frame_from_normal(nx, ny, nz)
    ux = 0.0
    uy = 0.0
    lams = (l0, l1, l2)
    for c in range(3):
        v = triangles[t, c]
        # angle of the vertex frame's first axis inside the sample frame
        px = v_t1[v, 0] * t1x + v_t1[v, 1] * t1y + v_t1[v, 2] * t1z
        py = v_t1[v, 0] * t2x + v_t1[v, 1] * t2y + v_t1[v, 2] * t2z
        rho = np.arctan2(py, px)
        ca = np.cos(order * rho)
        sa = np.sin(order * rho)
        w = lams[c]
        ux += w * (ca * v_u[v, 0] - sa * v_u[v, 1])
        uy += w * (sa * v_u[v, 0] + ca * v_u[v, 1])
    if ux * ux + uy * uy < 1e-24:
        k = 0
        if l1 >= l0 and l1 >= l2:
            k = 1
        elif l2 >= l0 and l2 >= l1:
            k = 2
        v = triangles[t, k]
        px = v_t1[v, 0] * t1x + v_t1[v, 1] * t1y + v_t1[v, 2] * t1z
        py = v_t1[v, 0] * t2x + v_t1[v, 1] * t2y + v_t1[v, 2] * t2z
        rho = np.arctan2(py, px)
        ca = np.cos(order * rho)
        sa = np.sin(order * rho)
        ux = ca * v_u[v, 0] - sa * v_u[v, 1]
        uy = sa * v_u[v, 0] + ca * v_u[v, 1]
    theta = np.arctan2(uy, ux) / order
    step = 2.0 * np.pi / order
    for k in range(order):
        ang = theta + k * step
        c = np.cos(ang)
        s = np.sin(ang)
        dirs_out[k, 0] = c * t1x + s * t2x
        dirs_out[k, 1] = c * t1y + s * t2y
        dirs_out[k, 2] = c * t1z + s * t2z
    return nx, ny, nz


# ---------------------------------------------------------------------------
# walking intersection


@njit(cache=True)
def walk_intersect(
    vertices,
    triangles,
    adjacency,
    tri_normals,
    start_tri,
    px, py, pz,
    dx, dy, dz,
    nx, ny, nz,
    h,
    max_steps,
):
    """Intersect the circle (center p, radius h, plane spanned by d and n)
    with the triangulated surface by walking edge-adjacent triangles.

    The crossing edge at each step is the one opposite the most negative
    barycentric coordinate of the in-plane intersection point. Returns
    (status, triangle, l0, l1, l2, x, y, z, steps).
    """
    mx = dy * nz - dz * ny
    my = dz * nx - dx * nz
    mz = dx * ny - dy * nx
    mx, my, mz, mn = _normalize3(mx, my, mz)
    if mn < 1e-12:
        return WALK_PATHOLOGICAL, -1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0
    t = start_tri
    steps = 0
    while steps < max_steps:
        steps += 1
        tnx = tri_normals[t, 0]
        tny = tri_normals[t, 1]
        tnz = tri_normals[t, 2]
        # line of intersection of the circle plane and the triangle plane
        lx = my * tnz - mz * tny
        ly = mz * tnx - mx * tnz
        lz = mx * tny - my * tnx
        ll = lx * lx + ly * ly + lz * lz
        if ll < 1e-20:
            return WALK_PATHOLOGICAL, t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, steps
        i0 = triangles[t, 0]
        b1 = mx * px + my * py + mz * pz
        b2 = tnx * vertices[i0, 0] + tny * vertices[i0, 1] + tnz * vertices[i0, 2]
        b3 = lx * px + ly * py + lz * pz
        # Cramer's rule on rows (m, n_t, l); det = |l|^2 for unit m, n_t
        x0x = (b1 * (tny * lz - tnz * ly) - my * (b2 * lz - tnz * b3) + mz * (b2 * ly - tny * b3)) / ll
        x0y = (mx * (b2 * lz - tnz * b3) - b1 * (tnx * lz - tnz * lx) + mz * (tnx * b3 - b2 * lx)) / ll
        x0z = (mx * (tny * b3 - b2 * ly) - my * (tnx * b3 - b2 * lx) + b1 * (tnx * ly - tny * lx)) / ll
        lnorm = np.sqrt(ll)
        lhx, lhy, lhz = lx / lnorm, ly / lnorm, lz / lnorm
        wx, wy, wz = x0x - px, x0y - py, x0z - pz
        wl = wx * lhx + wy * lhy + wz * lhz
        disc = wl * wl - (wx * wx + wy * wy + wz * wz - h * h)
        if disc < 0.0:
            return WALK_PATHOLOGICAL, t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, steps
        r = np.sqrt(disc)
        s_a = -wl + r
        s_b = -wl - r
        xax, xay, xaz = x0x + s_a * lhx, x0y + s_a * lhy, x0z + s_a * lhz
        xbx, xby, xbz = x0x + s_b * lhx, x0y + s_b * lhy, x0z + s_b * lhz
        da = (xax - px) * dx + (xay - py) * dy + (xaz - pz) * dz
        db = (xbx - px) * dx + (xby - py) * dy + (xbz - pz) * dz
        if da >= db:
            qx, qy, qz, dd = xax, xay, xaz, da
        else:
            qx, qy, qz, dd = xbx, xby, xbz, db
        if dd <= 0.0:
            return WALK_PATHOLOGICAL, t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, steps
        l0, l1, l2, ok = _barycentric(vertices, triangles, t, qx, qy, qz)
        if not ok:
            return WALK_PATHOLOGICAL, t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, steps
        if l0 >= -BARY_TOL and l1 >= -BARY_TOL and l2 >= -BARY_TOL:
            if l0 < 0.0:
                l0 = 0.0
            if l1 < 0.0:
                l1 = 0.0
            if l2 < 0.0:
                l2 = 0.0
            ssum = l0 + l1 + l2
            l0 /= ssum
            l1 /= ssum
            l2 /= ssum
            return WALK_OK, t, l0, l1, l2, qx, qy, qz, steps
        # cross the edge opposite the most negative coordinate; if that edge
        # is on the boundary, fall back to the other negative edge (walks
        # starting at a vertex may see the target across the fan)
        nb = np.int64(-1)
        lmin = 0.0
        for k in range(3):
            if k == 0:
                lk = l0
            elif k == 1:
                lk = l1
            else:
                lk = l2
            if lk < lmin and adjacency[t, k] >= 0:
                lmin = lk
                nb = adjacency[t, k]
        if nb < 0:
            return WALK_HIT_BOUNDARY, t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, steps
        t = nb
    return WALK_PATHOLOGICAL, t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, max_steps


# ---------------------------------------------------------------------------
# exclusion-zone filtering


@njit(cache=True)
def filter_candidate_kernel(
    vertices,
    triangles,
    adjacency,
    cx, cy, cz,
    cand_tri,
    h,
    alpha,
    norm_kind,
    f1x, f1y, f1z,
    f2x, f2y, f2z,
    f3x, f3y, f3z,
    collect_radius,
    reg_head,
    reg_next,
    pts_pos,
    visited,
    bfs_queue,
    stamp,
):
    """Exclusion-zone check of one candidate against the registry.

    Breadth-first collection of base triangles around the candidate's
    triangle (a triangle is kept when any of its vertices lies within
    ``collect_radius``); every registered point in a kept triangle is
    tested in the chosen norm. Returns (accepted, blocking point index).
    """
    thresh = alpha * h
    rad_sq = collect_radius * collect_radius
    qtail = 0
    bfs_queue[qtail] = cand_tri
    qtail += 1
    visited[cand_tri] = stamp
    qhead = 0
    while qhead < qtail:
        t = bfs_queue[qhead]
        qhead += 1
        if t != cand_tri:
            inside = False
            for c in range(3):
                v = triangles[t, c]
                ddx = vertices[v, 0] - cx
                ddy = vertices[v, 1] - cy
                ddz = vertices[v, 2] - cz
                if ddx * ddx + ddy * ddy + ddz * ddz <= rad_sq:
                    inside = True
                    break
            if not inside:
                continue
        p = reg_head[t]
        while p >= 0:
            ddx = pts_pos[p, 0] - cx
            ddy = pts_pos[p, 1] - cy
            ddz = pts_pos[p, 2] - cz
            if norm_kind == NORM_LINF:
                dist = max(abs(ddx), abs(ddy), abs(ddz))
            elif norm_kind == NORM_L2:
                dist = np.sqrt(ddx * ddx + ddy * ddy + ddz * ddz)
            else:
                u1 = ddx * f1x + ddy * f1y + ddz * f1z
                u2 = ddx * f2x + ddy * f2y + ddz * f2z
                u3 = ddx * f3x + ddy * f3y + ddz * f3z
                dist = max(abs(u1), abs(u2), abs(u3))
            if dist <= thresh:
                return False, p
            p = reg_next[p]
        for e in range(3):
            nb = adjacency[t, e]
            if nb >= 0 and visited[nb] != stamp:
                visited[nb] = stamp
                bfs_queue[qtail] = nb
                qtail += 1
    return True, np.int64(-1)


@njit(cache=True, inline="always")
def _size_eval(size_kind, h0, hmin, hmax, grad, v_dist, triangles, t, l0, l1, l2):
    if size_kind == 0:
        return h0
    d = (
        l0 * v_dist[triangles[t, 0]]
        + l1 * v_dist[triangles[t, 1]]
        + l2 * v_dist[triangles[t, 2]]
    )
    h = hmin + grad * d
    if h > hmax:
        h = hmax
    if h < hmin:
        h = hmin
    return h


# ---------------------------------------------------------------------------
# frontal generation, sequential (the reference Algorithm-1 loop)


@njit(cache=True)
def generate_points_kernel(
    vertices,
    triangles,
    adjacency,
    tri_normals,
    order,
    v_u,
    v_t1,
    v_t2,
    v_n,
    size_kind,
    h0,
    hmin,
    hmax,
    grad,
    v_dist,
    seed_tri,
    seed_bary,
    alpha,
    norm_kind,
    collect_factor,
    max_walk,
):
    """FIFO frontal insertion: pop, spawn order candidates, walk, filter, accept.

    Returns point arrays (sliced to count) and raw statistics counters:
    (walks_ok, walks_boundary, walks_pathological, steps_ok, steps_all,
    rejected).
    """
    m = triangles.shape[0]
    nseed = seed_tri.shape[0]
    cap = 1024
    while cap < 4 * nseed:
        cap *= 2
    pts_tri = np.empty(cap, np.int64)
    pts_bary = np.empty((cap, 3), np.float64)
    pts_pos = np.empty((cap, 3), np.float64)
    pts_h = np.empty(cap, np.float64)
    reg_next = np.full(cap, -1, np.int64)
    queue = np.empty(cap, np.int64)
    reg_head = np.full(m, -1, np.int64)
    visited = np.zeros(m, np.int64)
    bfs_queue = np.empty(m, np.int64)
    stamp = 0
    count = 0
    qhead = 0
    qtail = 0
    dirs = np.empty((order, 3), np.float64)

    walks_ok = 0
    walks_bdry = 0
    walks_path = 0
    steps_ok = 0
    steps_all = 0
    rejected = 0

    for s in range(nseed):
        t = seed_tri[s]
        l0, l1, l2 = seed_bary[s, 0], seed_bary[s, 1], seed_bary[s, 2]
        i0, i1, i2 = triangles[t, 0], triangles[t, 1], triangles[t, 2]
        pts_tri[count] = t
        pts_bary[count, 0] = l0
        pts_bary[count, 1] = l1
        pts_bary[count, 2] = l2
        pts_pos[count, 0] = l0 * vertices[i0, 0] + l1 * vertices[i1, 0] + l2 * vertices[i2, 0]
        pts_pos[count, 1] = l0 * vertices[i0, 1] + l1 * vertices[i1, 1] + l2 * vertices[i2, 1]
        pts_pos[count, 2] = l0 * vertices[i0, 2] + l1 * vertices[i1, 2] + l2 * vertices[i2, 2]
        pts_h[count] = _size_eval(size_kind, h0, hmin, hmax, grad, v_dist, triangles, t, l0, l1, l2)
        reg_next[count] = reg_head[t]
        reg_head[t] = count
        queue[qtail] = count
        qtail += 1
        count += 1

    while qhead < qtail:
        i = queue[qhead]
        qhead += 1
        ti = pts_tri[i]
        bi0, bi1, bi2 = pts_bary[i, 0], pts_bary[i, 1], pts_bary[i, 2]
        nx, ny, nz = sample_field(triangles, order, v_u, v_t1, v_t2, v_n, ti, bi0, bi1, bi2, dirs)
        hi = pts_h[i]
        for j in range(order):
            status, t, l0, l1, l2, qx, qy, qz, steps = walk_intersect(
                vertices, triangles, adjacency, tri_normals,
                ti, pts_pos[i, 0], pts_pos[i, 1], pts_pos[i, 2],
                dirs[j, 0], dirs[j, 1], dirs[j, 2],
                nx, ny, nz, hi, max_walk,
            )
            steps_all += steps
            if status == WALK_HIT_BOUNDARY:
                walks_bdry += 1
                continue
            if status != WALK_OK:
                walks_path += 1
                continue
            walks_ok += 1
            steps_ok += steps
            hc = _size_eval(size_kind, h0, hmin, hmax, grad, v_dist, triangles, t, l0, l1, l2)
            f1x = f1y = f1z = f2x = f2y = f2z = f3x = f3y = f3z = 0.0
            if norm_kind == NORM_LINF_FRAME:
                cdirs = np.empty((order, 3), np.float64)
                f3x, f3y, f3z = sample_field(
                    triangles, order, v_u, v_t1, v_t2, v_n, t, l0, l1, l2, cdirs
                )
                f1x, f1y, f1z = cdirs[0, 0], cdirs[0, 1], cdirs[0, 2]
                f2x, f2y, f2z = cdirs[1, 0], cdirs[1, 1], cdirs[1, 2]
            stamp += 1
            ok, _blk = filter_candidate_kernel(
                vertices, triangles, adjacency,
                qx, qy, qz, t, hc, alpha, norm_kind,
                f1x, f1y, f1z, f2x, f2y, f2z, f3x, f3y, f3z,
                collect_factor * hc,
                reg_head, reg_next, pts_pos,
                visited, bfs_queue, stamp,
            )
            if not ok:
                rejected += 1
                continue
            if count == cap:
                newcap = cap * 2
                npts_tri = np.empty(newcap, np.int64)
                npts_tri[:cap] = pts_tri
                pts_tri = npts_tri
                npts_bary = np.empty((newcap, 3), np.float64)
                npts_bary[:cap] = pts_bary
                pts_bary = npts_bary
                npts_pos = np.empty((newcap, 3), np.float64)
                npts_pos[:cap] = pts_pos
                pts_pos = npts_pos
                npts_h = np.empty(newcap, np.float64)
                npts_h[:cap] = pts_h
                pts_h = npts_h
                nreg_next = np.full(newcap, -1, np.int64)
                nreg_next[:cap] = reg_next
                reg_next = nreg_next
                nqueue = np.empty(newcap, np.int64)
                nqueue[:cap] = queue
                queue = nqueue
                cap = newcap
            pts_tri[count] = t
            pts_bary[count, 0] = l0
            pts_bary[count, 1] = l1
            pts_bary[count, 2] = l2
            pts_pos[count, 0] = qx
            pts_pos[count, 1] = qy
            pts_pos[count, 2] = qz
            pts_h[count] = hc
            reg_next[count] = reg_head[t]
            reg_head[t] = count
            queue[qtail] = count
            qtail += 1
            count += 1

    return (
        pts_tri[:count].copy(),
        pts_bary[:count].copy(),
        pts_pos[:count].copy(),
        pts_h[:count].copy(),
        walks_ok,
        walks_bdry,
        walks_path,
        steps_ok,
        steps_all,
        rejected,
    )


# ---------------------------------------------------------------------------
# frontal generation, parallel (batched rounds; merge is the critical section)


@njit(cache=True, parallel=True)
def expand_batch_kernel(
    vertices,
    triangles,
    adjacency,
    tri_normals,
    order,
    v_u,
    v_t1,
    v_t2,
    v_n,
    size_kind,
    h0,
    hmin,
    hmax,
    grad,
    v_dist,
    pts_tri,
    pts_bary,
    pts_pos,
    pts_h,
    src_idx,
    alpha,
    norm_kind,
    collect_factor,
    max_walk,
    reg_head,
    reg_next,
    visited_t,
    bfs_t,
    stamp_t,
    cand_status,
    cand_tri,
    cand_bary,
    cand_pos,
    cand_h,
    cand_frame,
    cand_steps,
):
    """Expand a batch of front points in parallel against a registry snapshot.

    Pure reads of the shared state; results go to per-candidate slots
    (slot = batch position * order + direction).
    """
    nb = src_idx.shape[0]
    for b in prange(nb):
        tid = get_thread_id()
        i = src_idx[b]
        dirs = np.empty((order, 3), np.float64)
        ti = pts_tri[i]
        nx, ny, nz = sample_field(
            triangles, order, v_u, v_t1, v_t2, v_n,
            ti, pts_bary[i, 0], pts_bary[i, 1], pts_bary[i, 2], dirs,
        )
        hi = pts_h[i]
        for j in range(order):
            slot = b * order + j
            status, t, l0, l1, l2, qx, qy, qz, steps = walk_intersect(
                vertices, triangles, adjacency, tri_normals,
                ti, pts_pos[i, 0], pts_pos[i, 1], pts_pos[i, 2],
                dirs[j, 0], dirs[j, 1], dirs[j, 2],
                nx, ny, nz, hi, max_walk,
            )
            cand_steps[slot] = steps
            if status == WALK_HIT_BOUNDARY:
                cand_status[slot] = CAND_WALK_BOUNDARY
                continue
            if status != WALK_OK:
                cand_status[slot] = CAND_WALK_PATHOLOGICAL
                continue
            hc = _size_eval(size_kind, h0, hmin, hmax, grad, v_dist, triangles, t, l0, l1, l2)
            f1x = f1y = f1z = f2x = f2y = f2z = f3x = f3y = f3z = 0.0
            if norm_kind == NORM_LINF_FRAME:
                cdirs = np.empty((order, 3), np.float64)
                f3x, f3y, f3z = sample_field(
                    triangles, order, v_u, v_t1, v_t2, v_n, t, l0, l1, l2, cdirs
                )
                f1x, f1y, f1z = cdirs[0, 0], cdirs[0, 1], cdirs[0, 2]
                f2x, f2y, f2z = cdirs[1, 0], cdirs[1, 1], cdirs[1, 2]
            cand_frame[slot, 0] = f1x
            cand_frame[slot, 1] = f1y
            cand_frame[slot, 2] = f1z
            cand_frame[slot, 3] = f2x
            cand_frame[slot, 4] = f2y
            cand_frame[slot, 5] = f2z
            cand_frame[slot, 6] = f3x
            cand_frame[slot, 7] = f3y
            cand_frame[slot, 8] = f3z
            stamp_t[tid] += 1
            ok, _blk = filter_candidate_kernel(
                vertices, triangles, adjacency,
                qx, qy, qz, t, hc, alpha, norm_kind,
                f1x, f1y, f1z, f2x, f2y, f2z, f3x, f3y, f3z,
                collect_factor * hc,
                reg_head, reg_next, pts_pos,
                visited_t[tid], bfs_t[tid], stamp_t[tid],
            )
            if not ok:
                cand_status[slot] = CAND_FILTERED
                continue
            cand_status[slot] = CAND_PASS
            cand_tri[slot] = t
            cand_bary[slot, 0] = l0
            cand_bary[slot, 1] = l1
            cand_bary[slot, 2] = l2
            cand_pos[slot, 0] = qx
            cand_pos[slot, 1] = qy
            cand_pos[slot, 2] = qz
            cand_h[slot] = hc


@njit(cache=True)
def merge_batch_kernel(
    vertices,
    triangles,
    adjacency,
    cand_status,
    cand_tri,
    cand_bary,
    cand_pos,
    cand_h,
    cand_frame,
    alpha,
    norm_kind,
    collect_factor,
    pts_tri,
    pts_bary,
    pts_pos,
    pts_h,
    count,
    reg_head,
    reg_next,
    visited,
    bfs_queue,
    stamp,
    accepted_out,
):
    """Atomic accept step: re-check provisional candidates and insert survivors.

    Runs single-threaded between expansion rounds; caller guarantees array
    capacity. Returns (new count, stamp, merge-rejected count).
    """
    nslots = cand_status.shape[0]
    merge_rejected = 0
    for slot in range(nslots):
        accepted_out[slot] = -1
        if cand_status[slot] != CAND_PASS:
            continue
        t = cand_tri[slot]
        hc = cand_h[slot]
        stamp += 1
        ok, _blk = filter_candidate_kernel(
            vertices, triangles, adjacency,
            cand_pos[slot, 0], cand_pos[slot, 1], cand_pos[slot, 2],
            t, hc, alpha, norm_kind,
            cand_frame[slot, 0], cand_frame[slot, 1], cand_frame[slot, 2],
            cand_frame[slot, 3], cand_frame[slot, 4], cand_frame[slot, 5],
            cand_frame[slot, 6], cand_frame[slot, 7], cand_frame[slot, 8],
            collect_factor * hc,
            reg_head, reg_next, pts_pos,
            visited, bfs_queue, stamp,
        )
        if not ok:
            merge_rejected += 1
            continue
        pts_tri[count] = t
        pts_bary[count] = cand_bary[slot]
        pts_pos[count] = cand_pos[slot]
        pts_h[count] = hc
        reg_next[count] = reg_head[t]
        reg_head[t] = count
        accepted_out[slot] = count
        count += 1
    return count, stamp, merge_rejected


# ---------------------------------------------------------------------------
# triangle quality and cavity optimization


@njit(cache=True, inline="always")
def _corner_quality(ax, ay, az, bx, by, bz, d1, d2):
    """(q_angle * q_alignment * q_ratio) for one corner given its two edge
    vectors and the two independent field directions at the corner."""
    la = np.sqrt(ax * ax + ay * ay + az * az)
    lb = np.sqrt(bx * bx + by * by + bz * bz)
    if la < 1e-300 or lb < 1e-300:
        return 0.0
    uax, uay, uaz = ax / la, ay / la, az / la
    ubx, uby, ubz = bx / lb, by / lb, bz / lb
    cosang = uax * ubx + uay * uby + uaz * ubz
    if cosang > 1.0:
        cosang = 1.0
    elif cosang < -1.0:
        cosang = -1.0
    theta = np.arccos(cosang)
    qa = 1.0 - abs(np.pi / 2.0 - theta) / (np.pi / 2.0)
    # |cos 2t| = |2 cos^2 t - 1| without trig
    qb = 0.0
    for e in range(2):
        if e == 0:
            ex, ey, ez = uax, uay, uaz
        else:
            ex, ey, ez = ubx, uby, ubz
        c1 = ex * d1[0] + ey * d1[1] + ez * d1[2]
        c2 = ex * d2[0] + ey * d2[1] + ez * d2[2]
        v1 = abs(2.0 * c1 * c1 - 1.0)
        v2 = abs(2.0 * c2 * c2 - 1.0)
        if v1 > qb:
            qb = v1
        if v2 > qb:
            qb = v2
    mx = la if la > lb else lb
    qc = 1.0 - abs(la - lb) / mx
    return qa * qb * qc


@njit(cache=True)
def triangle_qt(p0, p1, p2, d1_0, d2_0, d1_1, d2_1, d1_2, d2_2):
    """Right-angled quality q_t = max over corners of (q_a q_b q_c)."""
    q0 = _corner_quality(
        p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2],
        p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2],
        d1_0, d2_0,
    )
    q1 = _corner_quality(
        p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2],
        p0[0] - p1[0], p0[1] - p1[1], p0[2] - p1[2],
        d1_1, d2_1,
    )
    q2 = _corner_quality(
        p0[0] - p2[0], p0[1] - p2[1], p0[2] - p2[2],
        p1[0] - p2[0], p1[1] - p2[1], p1[2] - p2[2],
        d1_2, d2_2,
    )
    qt = q0
    if q1 > qt:
        qt = q1
    if q2 > qt:
        qt = q2
    return qt


@njit(cache=True)
def project_to_surface(vertices, triangles, adjacency, start_tri, px, py, pz, max_steps):
    """Locate (approximately) the closest surface point by a barycentric walk.

    Walks toward the query; on boundary exit or step cap the barycentric
    coordinates are clamped to the simplex.
    """
    t = start_tri
    steps = 0
    while True:
        steps += 1
        l0, l1, l2, ok = _barycentric(vertices, triangles, t, px, py, pz)
        if not ok:
            l0, l1, l2 = 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0
        if (l0 >= -BARY_TOL and l1 >= -BARY_TOL and l2 >= -BARY_TOL) or steps >= max_steps:
            break
        k = 0
        lmin = l0
        if l1 < lmin:
            k = 1
            lmin = l1
        if l2 < lmin:
            k = 2
        nb = adjacency[t, k]
        if nb < 0:
            break
        t = nb
    if l0 < 0.0:
        l0 = 0.0
    if l1 < 0.0:
        l1 = 0.0
    if l2 < 0.0:
        l2 = 0.0
    s = l0 + l1 + l2
    l0 /= s
    l1 /= s
    l2 /= s
    i0, i1, i2 = triangles[t, 0], triangles[t, 1], triangles[t, 2]
    qx = l0 * vertices[i0, 0] + l1 * vertices[i1, 0] + l2 * vertices[i2, 0]
    qy = l0 * vertices[i0, 1] + l1 * vertices[i1, 1] + l2 * vertices[i2, 1]
    qz = l0 * vertices[i0, 2] + l1 * vertices[i1, 2] + l2 * vertices[i2, 2]
    return t, l0, l1, l2, qx, qy, qz


@njit(cache=True)
def _cavity_min_qt(v, cav_indptr, cav_tris, out_tri, out_pos, vert_d1, vert_d2, ox, oy, oz, od1, od2):
    """Min q_t over the vertex star, with vertex v overridden to the given
    position and field directions."""
    qmin = 2.0
    p = np.empty((3, 3), np.float64)
    for e in range(cav_indptr[v], cav_indptr[v + 1]):
        tt = cav_tris[e]
        for c in range(3):
            w = out_tri[tt, c]
            if w == v:
                p[c, 0] = ox
                p[c, 1] = oy
                p[c, 2] = oz
            else:
                p[c, 0] = out_pos[w, 0]
                p[c, 1] = out_pos[w, 1]
                p[c, 2] = out_pos[w, 2]
        w0, w1, w2 = out_tri[tt, 0], out_tri[tt, 1], out_tri[tt, 2]
        d1_0 = od1 if w0 == v else vert_d1[w0]
        d2_0 = od2 if w0 == v else vert_d2[w0]
        d1_1 = od1 if w1 == v else vert_d1[w1]
        d2_1 = od2 if w1 == v else vert_d2[w1]
        d1_2 = od1 if w2 == v else vert_d1[w2]
        d2_2 = od2 if w2 == v else vert_d2[w2]
        q = triangle_qt(p[0], p[1], p[2], d1_0, d2_0, d1_1, d2_1, d1_2, d2_2)
        if q < qmin:
            qmin = q
    return qmin


@njit(cache=True)
def optimize_cavities_kernel(
    out_pos,
    out_tri,
    cav_indptr,
    cav_tris,
    interior,
    vert_tri,
    vert_bary,
    vert_d1,
    vert_d2,
    vert_nrm,
    base_vertices,
    base_triangles,
    base_adjacency,
    order,
    v_u,
    v_t1,
    v_t2,
    v_n,
    centroid_mode,
    n_samples,
    max_sweeps,
    log_before,
    log_after,
):
    """Relocate interior vertices toward the cavity center, keeping the
    relocation only when the cavity's min q_t strictly improves.

    centroid_mode 0: center of the cross-frame-aligned bounding box of the
    cavity ring; mode 1: arithmetic mean of the ring. Every relocation is
    logged as (min quality before, after) while log capacity lasts.
    Returns (sweeps used, total relocations, log length).
    """
    nv = out_pos.shape[0]
    log_cap = log_before.shape[0]
    log_len = 0
    total_moves = 0
    sweeps_used = 0
    dirs = np.empty((order, 3), np.float64)
    ring = np.empty(64, np.int64)
    for _sweep in range(max_sweeps):
        sweeps_used += 1
        moves = 0
        for v in range(nv):
            if not interior[v]:
                continue
            nring = 0
            for e in range(cav_indptr[v], cav_indptr[v + 1]):
                tt = cav_tris[e]
                for c in range(3):
                    w = out_tri[tt, c]
                    if w == v:
                        continue
                    seen = False
                    for r in range(nring):
                        if ring[r] == w:
                            seen = True
                            break
                    if not seen and nring < 64:
                        ring[nring] = w
                        nring += 1
            if nring < 3:
                continue
            ox, oy, oz = out_pos[v, 0], out_pos[v, 1], out_pos[v, 2]
            q0 = _cavity_min_qt(
                v, cav_indptr, cav_tris, out_tri, out_pos, vert_d1, vert_d2,
                ox, oy, oz, vert_d1[v], vert_d2[v],
            )
            # target point of the line search
            if centroid_mode == 0:
                d1 = vert_d1[v]
                d2 = vert_d2[v]
                nr = vert_nrm[v]
                lo1 = hi1 = lo2 = hi2 = lo3 = hi3 = 0.0
                first = True
                for r in range(nring):
                    w = ring[r]
                    rx = out_pos[w, 0] - ox
                    ry = out_pos[w, 1] - oy
                    rz = out_pos[w, 2] - oz
                    c1 = rx * d1[0] + ry * d1[1] + rz * d1[2]
                    c2 = rx * d2[0] + ry * d2[1] + rz * d2[2]
                    c3 = rx * nr[0] + ry * nr[1] + rz * nr[2]
                    if first:
                        lo1 = hi1 = c1
                        lo2 = hi2 = c2
                        lo3 = hi3 = c3
                        first = False
                    else:
                        lo1 = min(lo1, c1)
                        hi1 = max(hi1, c1)
                        lo2 = min(lo2, c2)
                        hi2 = max(hi2, c2)
                        lo3 = min(lo3, c3)
                        hi3 = max(hi3, c3)
                m1 = 0.5 * (lo1 + hi1)
                m2 = 0.5 * (lo2 + hi2)
                m3 = 0.5 * (lo3 + hi3)
                gx = ox + m1 * d1[0] + m2 * d2[0] + m3 * nr[0]
                gy = oy + m1 * d1[1] + m2 * d2[1] + m3 * nr[1]
                gz = oz + m1 * d1[2] + m2 * d2[2] + m3 * nr[2]
            else:
                gx = gy = gz = 0.0
                for r in range(nring):
                    w = ring[r]
                    gx += out_pos[w, 0]
                    gy += out_pos[w, 1]
                    gz += out_pos[w, 2]
                gx /= nring
                gy /= nring
                gz /= nring

            best_q = q0
            improved = False
            bx = by = bz = 0.0
            bt = vert_tri[v]
            bl0 = bl1 = bl2 = 0.0
            bd1 = np.zeros(3, np.float64)
            bd2 = np.zeros(3, np.float64)
            bn = np.zeros(3, np.float64)
            for si in range(1, n_samples):
                s = si / (n_samples - 1.0)
                cx = (1.0 - s) * ox + s * gx
                cy = (1.0 - s) * oy + s * gy
                cz = (1.0 - s) * oz + s * gz
                pt, l0, l1, l2, qx, qy, qz = project_to_surface(
                    base_vertices, base_triangles, base_adjacency,
                    vert_tri[v], cx, cy, cz, 128,
                )
                nnx, nny, nnz = sample_field(
                    base_triangles, order, v_u, v_t1, v_t2, v_n, pt, l0, l1, l2, dirs
                )
                q = _cavity_min_qt(
                    v, cav_indptr, cav_tris, out_tri, out_pos, vert_d1, vert_d2,
                    qx, qy, qz, dirs[0], dirs[1],
                )
                if q > best_q + 1e-12:
                    best_q = q
                    improved = True
                    bx, by, bz = qx, qy, qz
                    bt, bl0, bl1, bl2 = pt, l0, l1, l2
                    bd1[0], bd1[1], bd1[2] = dirs[0, 0], dirs[0, 1], dirs[0, 2]
                    bd2[0], bd2[1], bd2[2] = dirs[1, 0], dirs[1, 1], dirs[1, 2]
                    bn[0], bn[1], bn[2] = nnx, nny, nnz
            if improved:
                if log_len < log_cap:
                    log_before[log_len] = q0
                    log_after[log_len] = best_q
                    log_len += 1
                out_pos[v, 0] = bx
                out_pos[v, 1] = by
                out_pos[v, 2] = bz
                vert_tri[v] = bt
                vert_bary[v, 0] = bl0
                vert_bary[v, 1] = bl1
                vert_bary[v, 2] = bl2
                vert_d1[v] = bd1
                vert_d2[v] = bd2
                vert_nrm[v] = bn
                moves += 1
        total_moves += moves
        if moves == 0:
            break
    return sweeps_used, total_moves, log_len
