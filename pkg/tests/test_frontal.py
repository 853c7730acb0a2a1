import numpy as np
import pytest

from fieldfront import (
    ConfigError,
    GeneratedPoint,
    PointRegistry,
    SizeField,
    SurfaceMesh,
    SurfacePoint,
    WalkBoundaryError,
    filter_candidate,
    generate_points,
    intersect_walk,
    make_icosphere,
    seed_boundary,
)
from fieldfront import domains
from fieldfront.field import compute_field, sample_directions
from fieldfront.hilbert import hilbert_sort_key

from helpers import brute_force_circle_hit, min_pairwise_distance


# ---------------------------------------------------------------------------
# seeding


def test_seed_square_topological(square10):
    sz = SizeField.constant(0.1)
    seeds = seed_boundary(square10, sz, "topological")
    assert len(seeds) == len(square10.boundary_vertices())
    verts = [s.base_vertex for s in seeds]
    bedges = {(int(a), int(b)) for a, b in square10.boundary_edges()}
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        assert (a, b) in bedges or (b, a) in bedges


def test_seed_closed_surface(sphere2):
    seeds = seed_boundary(sphere2, SizeField.constant(0.3))
    assert len(seeds) == 1
    assert seeds[0].base_vertex == 0


def test_seed_annulus_loops_contiguous(annulus_mesh):
    seeds = seed_boundary(annulus_mesh, SizeField.constant(0.1), "topological")
    verts = [s.base_vertex for s in seeds]
    bedges = {(int(a), int(b)) for a, b in annulus_mesh.boundary_edges()}
    breaks = 0
    for i in range(len(verts) - 1):
        a, b = verts[i], verts[i + 1]
        if (a, b) not in bedges and (b, a) not in bedges:
            breaks += 1
    assert breaks == 1  # exactly one jump, between the two loops


def test_seed_hilbert_is_permutation(square10):
    sz = SizeField.constant(0.1)
    topo = {s.base_vertex for s in seed_boundary(square10, sz, "topological")}
    hilb = [s.base_vertex for s in seed_boundary(square10, sz, "hilbert")]
    assert set(hilb) == topo
    # hilbert ordering is locality preserving: successive seeds stay close
    pos = square10.vertices[hilb]
    jumps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    assert np.median(jumps) <= 0.2 + 1e-12


def test_seed_bad_ordering(square10):
    with pytest.raises(ConfigError):
        seed_boundary(square10, SizeField.constant(0.1), "zigzag")


def test_hilbert_keys_distinct():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 1]], dtype=float)
    keys = hilbert_sort_key(pts)
    assert len(set(keys.tolist())) == 4


# ---------------------------------------------------------------------------
# walking intersection


def big_triangle():
    return SurfaceMesh(
        np.array([[-5.0, -5, 0], [5, -5, 0], [0, 5, 0]]), np.array([[0, 1, 2]])
    )


def test_walk_planar_single_triangle():
    mesh = big_triangle()
    origin = SurfacePoint(0, np.array([1, 1, 1]) / 3.0)
    target = intersect_walk(mesh, origin, np.array([1.0, 0, 0]), 1.0, normal=np.array([0.0, 0, 1]))
    x = mesh.position_of(target)
    start = mesh.position_of(origin)
    assert np.linalg.norm(x - (start + [1, 0, 0])) < 1e-9


def test_walk_tiled_plane_matches_brute_force(rng):
    mesh = domains.square_grid(8, size=2.0)  # legs 0.25
    normal = np.array([0.0, 0.0, 1.0])
    for _ in range(50):
        # random interior origin, random in-plane direction, h below the
        # distance to the boundary so the walk stays inside
        x0 = np.array([rng.uniform(0.7, 1.3), rng.uniform(0.7, 1.3), 0.0])
        ang = rng.uniform(0, 2 * np.pi)
        d = np.array([np.cos(ang), np.sin(ang), 0.0])
        h = rng.uniform(0.2, 0.6)
        from helpers import locate_points

        tris, bary = locate_points(mesh, x0[None, :])
        origin = SurfacePoint(int(tris[0]), bary[0])
        got = mesh.position_of(intersect_walk(mesh, origin, d, h, normal=normal))
        hits = brute_force_circle_hit(mesh, x0, d, normal, h)
        assert hits, "oracle found no intersection"
        best = min(hits, key=lambda x: np.linalg.norm(x - got))
        assert np.linalg.norm(got - best) < 1e-8 * max(1.0, h)
        assert abs(np.linalg.norm(got - x0) - h) < 1e-8 * h


def test_walk_exact_distance_planar():
    mesh = domains.square_grid(8, size=2.0)
    from helpers import locate_points

    x0 = np.array([1.0, 1.0, 0.0])
    tris, bary = locate_points(mesh, x0[None, :])
    origin = SurfacePoint(int(tris[0]), bary[0])
    got = mesh.position_of(
        intersect_walk(mesh, origin, np.array([1.0, 0, 0]), 1.0, normal=np.array([0.0, 0, 1]))
    )
    assert np.allclose(got, [2.0, 1.0, 0.0], atol=1e-9)


def test_walk_boundary_exit():
    mesh = big_triangle()
    origin = SurfacePoint(0, np.array([1, 1, 1]) / 3.0)
    with pytest.raises(WalkBoundaryError):
        intersect_walk(mesh, origin, np.array([1.0, 0, 0]), 100.0, normal=np.array([0.0, 0, 1]))


def test_walk_rejects_bad_direction():
    mesh = big_triangle()
    origin = SurfacePoint(0, np.array([1, 1, 1]) / 3.0)
    with pytest.raises(ValueError):
        intersect_walk(mesh, origin, np.array([2.0, 0, 0]), 1.0)
    with pytest.raises(ValueError):
        intersect_walk(mesh, origin, np.array([1.0, 0, 0]), -1.0)


def test_walk_sphere_sag_bound(sphere3, sphere3_asterisk, rng):
    h = 0.1
    count = 0
    for _ in range(1000):
        t = int(rng.integers(sphere3.n_triangles))
        lam = rng.dirichlet((1, 1, 1))
        origin = SurfacePoint(t, lam)
        dirs, nrm = sample_directions(sphere3_asterisk, sphere3, origin, return_normal=True)
        d = dirs[int(rng.integers(6))]
        try:
            sp = intersect_walk(sphere3, origin, d, h, normal=nrm)
        except WalkBoundaryError:
            continue
        x = sphere3.position_of(sp)
        start = sphere3.position_of(origin)
        assert abs(np.linalg.norm(x - start) - h) < 1e-8 * h
        # chordal sag: the walked point sits on the faceted sphere
        assert abs(np.linalg.norm(x) - 1.0) <= h * h / 2.0 + 0.02
        count += 1
    assert count > 990


# ---------------------------------------------------------------------------
# filtering


def make_candidate(mesh, position, h):
    from helpers import locate_points

    tris, bary = locate_points(mesh, np.asarray(position, float)[None, :])
    return GeneratedPoint(
        location=SurfacePoint(int(tris[0]), bary[0]),
        position=np.asarray(position, float),
        h=h,
    )


def test_filter_empty_registry_accepts(square10):
    reg = PointRegistry(square10)
    cand = make_candidate(square10, [0.5, 0.5, 0.0], 0.1)
    assert filter_candidate(cand, reg, square10, alpha=0.75)


def test_filter_close_point_rejects(square10):
    reg = PointRegistry(square10)
    h = 0.1
    blocker = make_candidate(square10, [0.55, 0.5, 0.0], h)
    bid = reg.insert(blocker)
    cand = make_candidate(square10, [0.5, 0.5, 0.0], h)
    # L-infinity distance 0.05 = 0.5 h < alpha h
    res = filter_candidate(cand, reg, square10, alpha=0.75)
    assert not res
    assert res.blocker == bid
    # 0.8 h away: accepted
    reg2 = PointRegistry(square10)
    reg2.insert(make_candidate(square10, [0.58, 0.5, 0.0], h))
    assert filter_candidate(cand, reg2, square10, alpha=0.75)


def test_filter_norm_choice_diagonal(square10):
    # diagonal offset (0.6h, 0.52h): Linf = 0.6h < 0.75h but L2 ~ 0.794h
    h = 0.1
    reg = PointRegistry(square10)
    reg.insert(make_candidate(square10, [0.5 + 0.06, 0.5 + 0.052, 0.0], h))
    cand = make_candidate(square10, [0.5, 0.5, 0.0], h)
    assert not filter_candidate(cand, reg, square10, alpha=0.75, norm="linf")
    assert filter_candidate(cand, reg, square10, alpha=0.75, norm="l2")


def test_filter_alpha_validation(square10):
    reg = PointRegistry(square10)
    cand = make_candidate(square10, [0.5, 0.5, 0.0], 0.1)
    with pytest.raises(ConfigError):
        filter_candidate(cand, reg, square10, alpha=1.5)


def test_registry_buckets(square10):
    reg = PointRegistry(square10, capacity=2)
    pts = [make_candidate(square10, [0.31 + 0.003 * i, 0.52, 0.0], 0.1) for i in range(5)]
    ids = [reg.insert(p) for p in pts]
    assert len(reg) == 5
    by_tri = {}
    for p, i in zip(pts, ids):
        by_tri.setdefault(int(p.location.triangle), []).append(i)
    for t, members in by_tri.items():
        assert sorted(reg.bucket(t)) == sorted(members)


# ---------------------------------------------------------------------------
# generation


def test_generate_square_count(square10, square10_cross):
    pts, stats = generate_points(square10, square10_cross, SizeField.constant(0.1), alpha=0.75)
    assert abs(len(pts) - 121) <= 0.2 * 121
    assert stats.n_points == len(pts)
    assert stats.n_seeds == 40
    # all boundary seeds present and first
    assert np.array_equal(pts.seed_vertices[: pts.n_seeds], [s.base_vertex for s in seed_boundary(square10, SizeField.constant(0.1))])


def test_generate_domain_smaller_than_h():
    mesh = SurfaceMesh(
        np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]), np.array([[0, 1, 2]])
    )
    field = compute_field(mesh, 4)
    pts, _ = generate_points(mesh, field, SizeField.constant(15.0), alpha=0.75)
    assert len(pts) == 3  # only the boundary seeds survive


def test_generate_sphere_density(sphere3, sphere3_asterisk):
    h = float(np.median(sphere3.edge_lengths()))
    pts, _ = generate_points(sphere3, sphere3_asterisk, SizeField.constant(h), alpha=0.75)
    # area / per-vertex cell of the ideal equilateral tiling (sqrt(3)/2 h^2)
    expected = 4.0 * np.pi / (np.sqrt(3.0) / 2.0 * h * h)
    assert abs(len(pts) - expected) <= 0.25 * expected


def test_generate_separation_invariant(square10, square10_cross):
    h = 0.1
    pts, _ = generate_points(square10, square10_cross, SizeField.constant(h), alpha=0.75, norm="linf")
    assert min_pairwise_distance(pts.positions, "linf") >= 0.75 * h - 1e-12


def test_generate_points_on_surface(square10, square10_cross):
    pts, _ = generate_points(square10, square10_cross, SizeField.constant(0.1))
    for p in pts:
        assert abs(p.bary.sum() - 1) < 1e-10 if hasattr(p, "bary") else True
        x = square10.position_of(p.location)
        assert np.linalg.norm(x - p.position) < 1e-9


def test_generate_fifo_layering(square10, square10_cross):
    h = 0.1
    pts, _ = generate_points(square10, square10_cross, SizeField.constant(h), alpha=0.75)
    xy = pts.positions[:, :2]
    dist = np.minimum.reduce([xy[:, 0], xy[:, 1], 1 - xy[:, 0], 1 - xy[:, 1]])
    layers = np.rint(dist / h).astype(int)
    assert np.all(np.diff(layers) >= 0)


def test_generate_deterministic(square10, square10_cross):
    sz = SizeField.constant(0.1)
    a, _ = generate_points(square10, square10_cross, sz, alpha=0.75)
    b, _ = generate_points(square10, square10_cross, sz, alpha=0.75)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.triangles, b.triangles)
    assert np.array_equal(a.bary, b.bary)


def test_generate_parallel_consistency(square10, square10_cross):
    sz = SizeField.constant(0.1)
    p1, _ = generate_points(square10, square10_cross, sz, workers=1)
    p4, s4 = generate_points(square10, square10_cross, sz, workers=4)
    assert s4.workers == 4
    assert abs(len(p4) - len(p1)) <= 0.05 * len(p1)
    assert min_pairwise_distance(p4.positions, "linf") >= 0.75 * 0.1 - 1e-12


def test_generate_stats_fields(square10, square10_cross):
    _, stats = generate_points(square10, square10_cross, SizeField.constant(0.1))
    d = stats.as_dict()
    for key in ("n_points", "wall_time", "mean_walk_steps", "rejection_rate", "walks_ok"):
        assert key in d
    assert stats.walks_ok > 0
    assert 0 <= stats.rejection_rate <= 1


def test_generate_validation(square10, square10_cross):
    sz = SizeField.constant(0.1)
    with pytest.raises(ConfigError):
        generate_points(square10, square10_cross, sz, alpha=1.2)
    with pytest.raises(ConfigError):
        generate_points(square10, square10_cross, sz, workers=0)
    with pytest.raises(ConfigError):
        generate_points(square10, square10_cross, sz, norm="l7")


def test_walk_efficiency_matched_resolution(square10, square10_cross):
    # output h equal to the base edge length: under 3 visits per walk
    pts, stats = generate_points(square10, square10_cross, SizeField.constant(0.1))
    assert stats.mean_walk_steps < 3.0
