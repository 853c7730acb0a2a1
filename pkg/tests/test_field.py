import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldfront import FieldConvergenceError, MeshError, SurfaceMesh, SurfacePoint
from fieldfront import domains
from fieldfront import _kernels
from fieldfront.field import (
    DirectionField,
    boundary_tangents,
    compute_field,
    compute_tangent_frames,
    sample_directions,
    singularity_indices,
)


def quotient_dev(theta, order):
    period = 2 * np.pi / order
    m = np.mod(theta, period)
    return np.minimum(m, period - m)


def test_tangent_frames_orthonormal(sphere2):
    fr = compute_tangent_frames(sphere2)
    for arr in (fr.t1, fr.t2, fr.normal):
        assert np.allclose(np.linalg.norm(arr, axis=1), 1.0, atol=1e-12)
    assert np.allclose(np.einsum("ij,ij->i", fr.t1, fr.t2), 0.0, atol=1e-10)
    assert np.allclose(np.einsum("ij,ij->i", fr.t1, fr.normal), 0.0, atol=1e-10)
    assert np.allclose(np.cross(fr.t1, fr.t2), fr.normal, atol=1e-10)


def test_axis_aligned_square_cross(square10, square10_cross):
    assert quotient_dev(square10_cross.theta, 4).max() < 1e-6


def test_single_constraint_propagates(square10):
    # averaging fixed point: one pinned vertex drives every free vertex
    fr = compute_tangent_frames(square10)
    n = square10.n_vertices
    u = np.zeros((n, 2))
    fixed = np.zeros(n, dtype=np.bool_)
    theta0 = 0.31
    u[7] = (np.cos(4 * theta0), np.sin(4 * theta0))
    fixed[7] = True
    from fieldfront.field import _vertex_adjacency, _transport_rotations

    indptr, nbrs = _vertex_adjacency(square10)
    srcs = np.repeat(np.arange(n), np.diff(indptr))
    rc, rs = _transport_rotations(fr, srcs, nbrs, 4)
    u[~fixed] = (1.0, 0.0)
    resid, _ = _kernels.smooth_field(u, fixed, indptr, nbrs, rc, rs, 1e-12, 10000, 1.0)
    assert resid < 1e-12
    # planar identical frames: all u must equal the pinned value
    assert np.allclose(u, u[7], atol=1e-9)


def test_empty_mesh_rejected():
    with pytest.raises((MeshError, ValueError)):
        compute_field(SurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)), 4)


def test_bad_order_rejected(square10):
    with pytest.raises(ValueError):
        compute_field(square10, 5)


def test_nonconvergence_reported(disk):
    with pytest.raises(FieldConvergenceError) as err:
        compute_field(disk, 6, tol=1e-14, max_sweeps=1)
    assert err.value.sweeps == 1
    assert err.value.residual > 0


def test_sample_constant_cross_planar():
    mesh = SurfaceMesh(
        np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]), np.array([[0, 1, 2]])
    )
    frames = compute_tangent_frames(mesh)
    theta = np.zeros(3)
    u = np.column_stack([np.cos(4 * theta), np.sin(4 * theta)])
    field = DirectionField(order=4, theta=theta, u=u, frames=frames)
    dirs = sample_directions(field, mesh, SurfacePoint(0, np.array([1, 1, 1]) / 3.0))
    # four unit vectors in the plane, 90 degrees apart
    assert dirs.shape == (4, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    assert np.allclose(dirs[:, 2], 0.0, atol=1e-12)
    for k in range(4):
        assert np.allclose(np.cross(dirs[k], dirs[(k + 1) % 4])[2], 1.0, atol=1e-9)
    # the axis-aligned cross contains +x and +y up to relabeling
    found = {tuple(np.round(d, 9)) for d in dirs}
    assert (1.0, 0.0, 0.0) in found and (0.0, 1.0, 0.0) in found


def test_sample_order6_spacing():
    mesh = SurfaceMesh(
        np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]), np.array([[0, 1, 2]])
    )
    frames = compute_tangent_frames(mesh)
    theta = np.zeros(3)
    field = DirectionField(
        order=6, theta=theta,
        u=np.column_stack([np.cos(6 * theta), np.sin(6 * theta)]), frames=frames,
    )
    dirs = sample_directions(field, mesh, SurfacePoint(0, np.array([0.2, 0.5, 0.3])))
    for k in range(6):
        cosang = float(dirs[k] @ dirs[(k + 1) % 6])
        assert abs(cosang - np.cos(np.pi / 3)) < 1e-6


@given(shift=st.integers(min_value=1, max_value=5))
@settings(max_examples=10, deadline=None)
def test_quotient_invariance(shift):
    mesh = SurfaceMesh(
        np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]), np.array([[0, 1, 2]])
    )
    frames = compute_tangent_frames(mesh)
    theta = np.array([0.2, 0.5, 0.9])
    order = 4
    period = 2 * np.pi / order

    def field_for(th):
        return DirectionField(
            order=order, theta=th,
            u=np.column_stack([np.cos(order * th), np.sin(order * th)]),
            frames=frames,
        )

    p = SurfacePoint(0, np.array([0.3, 0.3, 0.4]))
    d0 = sample_directions(field_for(theta), mesh, p)
    d1 = sample_directions(field_for(theta + shift * period), mesh, p)
    # same set of directions up to reordering
    for v in d1:
        assert np.min(np.linalg.norm(d0 - v, axis=1)) < 1e-9


def test_sampled_set_closed_under_rotation(sphere3, sphere3_asterisk, rng):
    field = sphere3_asterisk
    for _ in range(25):
        t = int(rng.integers(sphere3.n_triangles))
        lam = rng.dirichlet((1, 1, 1))
        p = SurfacePoint(t, lam)
        dirs, nrm = sample_directions(field, sphere3, p, return_normal=True)
        assert np.allclose(dirs @ nrm, 0.0, atol=1e-8)
        # rotating any direction by 2*pi/6 about the normal lands on the next
        for k in range(6):
            expected = dirs[(k + 1) % 6]
            c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
            rotated = c * dirs[k] + s * np.cross(nrm, dirs[k])
            assert np.linalg.norm(rotated - expected) < 1e-6


@pytest.mark.parametrize("order", [4, 6])
def test_boundary_alignment(disk, order):
    field = compute_field(disk, order)
    frames = field.frames
    idx, tangents = boundary_tangents(disk, frames, order)
    for v, tan in zip(idx, tangents):
        dirs = sample_directions(
            field, disk, disk.surface_point_at_vertex(int(v))
        )
        ang = np.arccos(np.clip(np.abs(dirs @ tan), -1, 1)).min()
        assert ang < 1e-6


def test_flat_grid_no_singularities(square10, square10_cross):
    si = singularity_indices(square10_cross, square10)
    assert np.count_nonzero(si) == 0


@pytest.mark.parametrize("order,total", [(4, 8), (6, 12)])
def test_sphere_singularity_total(sphere3, order, total):
    # Poincare-Hopf: indices (in 2*pi/order turns) must sum to order * chi
    field = compute_field(sphere3, order)
    si = singularity_indices(field, sphere3)
    assert si.sum() == total
    assert np.count_nonzero(si) > 0
    assert field.residual < 1e-8


def test_field_dump_csv(tmp_path, square10, square10_cross):
    from fieldfront.io import write_field_csv

    path = tmp_path / "field.csv"
    write_field_csv(str(path), square10_cross)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "vertex,theta,order"
    assert len(lines) == square10.n_vertices + 1
    first = lines[1].split(",")
    assert int(first[0]) == 0 and int(first[2]) == 4
