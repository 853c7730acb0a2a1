import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldfront import SizeField, SurfaceMesh, generate_points, triangulate
from fieldfront import domains
from fieldfront.field import DirectionField, compute_field, compute_tangent_frames
from fieldfront.quality import (
    mesh_right_angled_quality,
    optimize_cavities,
    q_alignment,
    q_angle,
    q_edge_ratio,
    radius_ratio,
    right_angled_quality,
)

from helpers import colliding_fronts, points_on_mesh


def planar_cross_field(mesh, theta0=0.0):
    frames = compute_tangent_frames(mesh)
    t1 = frames.t1[0]
    t2 = frames.t2[0]
    # constant physical direction theta0 (measured from +x) in every frame
    base = np.arctan2(
        np.cos(theta0) * t2[0] + np.sin(theta0) * t2[1],
        np.cos(theta0) * t1[0] + np.sin(theta0) * t1[1],
    )
    theta = np.full(mesh.n_vertices, base % (np.pi / 2))
    u = np.column_stack([np.cos(4 * theta), np.sin(4 * theta)])
    return DirectionField(order=4, theta=theta, u=u, frames=frames)


# ---------------------------------------------------------------------------
# scalar formulas


def test_q_angle_values():
    assert q_angle(np.pi / 2) == pytest.approx(1.0, abs=1e-12)
    assert q_angle(np.pi / 4) == pytest.approx(0.5, abs=1e-12)
    assert q_angle(np.pi / 3) == pytest.approx(2.0 / 3.0, abs=1e-12)
    with pytest.raises(ValueError):
        q_angle(0.0)
    with pytest.raises(ValueError):
        q_angle(np.pi)


def test_q_alignment_values():
    d1, d2 = np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    # an edge parallel to d1
    assert q_alignment([1, 0, 0], [0.6, 0.8, 0], d1, d2) == pytest.approx(1.0, abs=1e-12)
    # both edges at 45 degrees to both directions
    s = np.sqrt(0.5)
    assert q_alignment([s, s, 0], [-s, s, 0], d1, d2) == pytest.approx(0.0, abs=1e-12)
    # nearest angle 30 degrees: |cos 60| = 0.5
    e = np.array([np.cos(np.pi / 6), np.sin(np.pi / 6), 0.0])
    e2 = np.array([np.cos(np.pi / 3), -np.sin(np.pi / 3), 0.0])
    assert q_alignment(e, e2, d1, d2) == pytest.approx(0.5, abs=1e-12)


def test_q_edge_ratio_values():
    assert q_edge_ratio(1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert q_edge_ratio(1.0, 2.0) == pytest.approx(0.5, abs=1e-12)
    assert q_edge_ratio(1.0, 4.0) == pytest.approx(0.25, abs=1e-12)
    assert q_edge_ratio(2.0, 1.0) == q_edge_ratio(1.0, 2.0)
    with pytest.raises(ValueError):
        q_edge_ratio(0.0, 1.0)


def test_radius_ratio_values():
    eq = [[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]]
    assert radius_ratio(eq) == pytest.approx(1.0, abs=1e-12)
    ri = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
    expected = 2.0 * ((2 - np.sqrt(2)) / 2) / (np.sqrt(2) / 2)
    assert radius_ratio(ri) == pytest.approx(expected, abs=1e-12)
    assert radius_ratio(ri) == pytest.approx(0.8284271247461903, abs=1e-12)


def test_radius_ratio_sliver():
    # angles (1, 1, 178) degrees; closed-form gamma = 8 sin(A/2) sin(B/2) sin(C/2)
    a1 = np.deg2rad(1.0)
    c = np.deg2rad(178.0)
    p = [[0, 0, 0], [1, 0, 0], None]
    # place the apex so the base angles are both 1 degree
    x = 0.5
    y = x * np.tan(a1)
    p[2] = [x, y, 0]
    got = radius_ratio(p)
    oracle = 8 * np.sin(a1 / 2) ** 2 * np.sin(c / 2)
    assert got == pytest.approx(oracle, rel=1e-9)
    assert got < 0.05


def test_radius_ratio_degenerate():
    with pytest.raises(ValueError):
        radius_ratio([[0, 0, 0], [1, 0, 0], [2, 0, 0]])


# ---------------------------------------------------------------------------
# full triangle quality


def test_optimal_right_isoceles_scores_one():
    d = [[np.array([1.0, 0, 0]), np.array([0.0, 1, 0])]] * 3
    tri = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
    q = right_angled_quality(tri, d)
    assert q.q_t == pytest.approx(1.0, abs=1e-12)
    # the right-angle corner is perfect on all three measures
    assert q.q_a[0] == q.q_b[0] == q.q_c[0] == pytest.approx(1.0, abs=1e-12)


def test_equilateral_capped_by_angles():
    d = [[np.array([1.0, 0, 0]), np.array([0.0, 1, 0])]] * 3
    tri = [[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]]
    q = right_angled_quality(tri, d)
    assert np.all(q.q_a <= 2.0 / 3.0 + 1e-12)
    assert q.q_t <= 2.0 / 3.0 + 1e-12


def test_rotated_right_isoceles():
    # rotated 45 degrees from the field: the right-angle corner scores 0
    # (its legs are at 45 degrees to both directions), and q_t comes from
    # the 45-degree corners: 0.5 * 1 * (1/sqrt(2))
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    tri = (R @ np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]).T).T
    d = [[np.array([1.0, 0, 0]), np.array([0.0, 1, 0])]] * 3
    q = right_angled_quality(tri, d)
    prod0 = q.q_a[0] * q.q_b[0] * q.q_c[0]
    assert prod0 == pytest.approx(0.0, abs=1e-12)
    assert q.q_t == pytest.approx(0.5 * 1.0 / np.sqrt(2), abs=1e-9)


@given(
    ang=st.floats(0.0, 2 * np.pi),
    px=st.floats(-1.0, 1.0),
    py=st.floats(-1.0, 1.0),
)
@settings(max_examples=60, deadline=None)
def test_qt_rigid_invariance(ang, px, py):
    # rotating triangle and field together leaves q_t unchanged
    base = np.array([[0.0, 0, 0], [1.1, 0, 0], [0.2, 0.8, 0]])
    d1, d2 = np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    c, s = np.cos(ang), np.sin(ang)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    tri2 = (R @ base.T).T + np.array([px, py, 0.0])
    q0 = right_angled_quality(base, [[d1, d2]] * 3)
    q1 = right_angled_quality(tri2, [[R @ d1, R @ d2]] * 3)
    assert q1.q_t == pytest.approx(q0.q_t, abs=1e-9)


@given(
    x2=st.floats(0.2, 2.0), y2=st.floats(0.2, 2.0), x1=st.floats(0.5, 2.0),
    ang=st.floats(0.0, 1.5),
)
@settings(max_examples=60, deadline=None)
def test_quality_ranges(x2, y2, x1, ang):
    tri = np.array([[0.0, 0, 0], [x1, 0, 0], [x2, y2, 0]])
    d1 = np.array([np.cos(ang), np.sin(ang), 0])
    d2 = np.array([-np.sin(ang), np.cos(ang), 0])
    q = right_angled_quality(tri, [[d1, d2]] * 3)
    for arr in (q.q_a, q.q_b, q.q_c):
        assert np.all(arr >= -1e-12) and np.all(arr <= 1 + 1e-12)
    assert 0 <= q.q_t <= 1 + 1e-12
    assert 0 <= radius_ratio(tri) <= 1 + 1e-12


def test_qt_quotient_symmetry():
    tri = np.array([[0.0, 0, 0], [1.3, 0, 0], [0.3, 0.9, 0]])
    d1, d2 = np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    q0 = right_angled_quality(tri, [[d1, d2]] * 3)
    # rotating the cross by 90 degrees relabels d1, d2 -> same value
    q1 = right_angled_quality(tri, [[d2, -d1]] * 3)
    assert q1.q_t == pytest.approx(q0.q_t, abs=1e-12)


# ---------------------------------------------------------------------------
# cavity optimization


def grid_output(n=8):
    base = domains.square_grid(n)
    h = 1.0 / n
    interior = [
        (i * h, j * h, 0.0) for i in range(1, n) for j in range(1, n)
    ]
    pts = points_on_mesh(base, np.array(interior), h)
    field = planar_cross_field(base)
    out = triangulate(base, pts)
    return base, field, out, h


def test_optimal_grid_no_relocations():
    base, field, out, h = grid_output()
    opt, report = optimize_cavities(out, field, base)
    assert report.relocations == 0
    assert np.allclose(opt.vertices, out.vertices)


def test_perturbed_vertex_returns():
    base, field, out, h = grid_output()
    # push one interior vertex off its lattice position
    interior_ids = np.flatnonzero(~out.boundary_mask)
    v = int(interior_ids[len(interior_ids) // 2])
    target = out.vertices[v].copy()
    out.vertices[v] += np.array([0.31 * h, 0.22 * h, 0.0])
    opt, report = optimize_cavities(out, field, base)
    assert report.relocations >= 1
    assert np.linalg.norm(opt.vertices[v] - target) < 0.05 * h


def test_colliding_fronts_improvement():
    base, pts, h = colliding_fronts(16)
    field = planar_cross_field(base)
    out = triangulate(base, pts)
    qt0 = mesh_right_angled_quality(out, field, base)
    band = np.abs(out.vertices[out.triangles].mean(axis=1)[:, 0] - 0.5) < 2 * h
    assert band.sum() > 10
    opt, report = optimize_cavities(out, field, base)
    qt1 = mesh_right_angled_quality(opt, field, base)
    assert qt1[band].mean() > qt0[band].mean()
    # a relocation never lowers the cavity's min quality
    assert np.all(report.min_quality_after >= report.min_quality_before)


def test_optimizer_reprojects_to_surface(sphere2):
    field = compute_field(sphere2, 4)
    h = float(np.median(sphere2.edge_lengths()))
    pts, _ = generate_points(sphere2, field, SizeField.constant(h))
    out = triangulate(sphere2, pts)
    opt, _ = optimize_cavities(out, field, sphere2, max_sweeps=3)
    r = np.linalg.norm(opt.vertices, axis=1)
    assert np.all(np.abs(r - 1.0) <= h * h / 2 + 0.05)


def test_centroid_mode_flag():
    base, field, out, h = grid_output()
    opt, _ = optimize_cavities(out, field, base, centroid_mode="mean")
    assert opt.n_vertices == out.n_vertices
    with pytest.raises(ValueError):
        optimize_cavities(out, field, base, centroid_mode="median")
