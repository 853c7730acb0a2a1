"""sklearn-style estimator driving the whole remeshing pipeline.

``Remesher.fit`` computes the direction field and size field on the base
mesh; ``transform`` generates the points, triangulates them and runs the
optional quality optimization and quad recombination. All hyperparameters
live on the constructor so the estimator clones, inspects and grid-searches
like any other scikit-learn object.
"""

from __future__ import annotations

import logging
import time

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import quality as quality_mod
from . import recombine as recombine_mod
from .field import compute_field
from .frontal import generate_points
from .triangulate import OutputMesh, triangulate
from .validation import check_mesh, check_run_params, check_size

logger = logging.getLogger(__name__)

QT_HISTOGRAM_BINS = 10


class Remesher(BaseEstimator, TransformerMixin):
    """Field-guided frontal remesher with a fit/transform interface.

    Parameters
    ----------
    order : {4, 6}
        4 builds a cross field (right-angled, quad-ready output); 6 an
        asterisk field (near-equilateral output).
    alpha : float
        Exclusion-zone factor in (0, 1); candidates closer than
        ``alpha * h`` to an accepted point are dropped.
    size : float, (h_min, h_max, gradation) or SizeField
        Target edge length specification.
    norm : {"linf", "l2", "linf-frame"} or None
        Filter distance; None picks "linf" for order 4 and "l2" for 6.
    workers : int
        Number of FIFO front queues expanded in parallel.
    seed_ordering : {"topological", "hilbert"}
        Initial ordering of the boundary seeds.
    optimize : bool or None
        Run cavity relocation; None enables it for order 4 only.
    recombine : bool
        Pair triangles into quads (order 4 only).
    quad_threshold : float
        Minimum quad quality accepted by the greedy matcher.
    opt_sweeps : int
        Cap on optimizer sweeps.
    centroid_mode : {"linf", "mean"}
        Cavity center used by the optimizer's line search.
    """

    def __init__(
        self,
        order=4,
        alpha=0.75,
        size=0.1,
        norm=None,
        workers=1,
        seed_ordering="topological",
        optimize=None,
        recombine=False,
        quad_threshold=0.3,
        opt_sweeps=20,
        centroid_mode="linf",
    ):
        self.order = order
        self.alpha = alpha
        self.size = size
        self.norm = norm
        self.workers = workers
        self.seed_ordering = seed_ordering
        self.optimize = optimize
        self.recombine = recombine
        self.quad_threshold = quad_threshold
        self.opt_sweeps = opt_sweeps
        self.centroid_mode = centroid_mode

    # -- estimator API ---------------------------------------------------

    def fit(self, X, y=None):
        """Validate the base mesh and compute the direction and size fields."""
        check_run_params(
            self.order, self.alpha, self.workers, self.norm,
            self.seed_ordering, self.recombine,
        )
        mesh = check_mesh(X)
        self.mesh_ = mesh
        self.size_field_ = check_size(self.size, mesh)
        median_edge = float(np.median(mesh.edge_lengths()))
        if self.size_field_.h_min < 0.5 * median_edge:
            logger.warning(
                "target size %.3g is well below the base-mesh edge length %.3g; "
                "the base mesh limits the geometric fidelity of the output",
                self.size_field_.h_min, median_edge,
            )
        self.field_ = compute_field(mesh, self.order)
        return self

    def transform(self, X=None) -> OutputMesh:
        """Run generation, triangulation and the optional post passes."""
        if not hasattr(self, "field_"):
            raise RuntimeError("Remesher must be fitted before transform")
        if X is not None:
            mesh = check_mesh(X)
            if mesh is not self.mesh_ and (
                mesh.n_vertices != self.mesh_.n_vertices
                or not np.array_equal(mesh.triangles, self.mesh_.triangles)
            ):
                raise ValueError("transform input differs from the fitted mesh")
        mesh = self.mesh_
        t_start = time.perf_counter()

        points, gen_stats = generate_points(
            mesh, self.field_, self.size_field_,
            alpha=self.alpha, workers=self.workers, norm=self.norm,
            seed_ordering="topological" if self.seed_ordering == "topological" else "hilbert",
        )
        out = triangulate(mesh, points)

        do_optimize = self.optimize if self.optimize is not None else (self.order == 4)
        opt_report = None
        if do_optimize:
            out, opt_report = quality_mod.optimize_cavities(
                out, self.field_, mesh,
                max_sweeps=self.opt_sweeps, centroid_mode=self.centroid_mode,
            )
        out.tri_quality = quality_mod.mesh_right_angled_quality(out, self.field_, mesh)
        if self.recombine:
            out = recombine_mod.recombine(out, threshold=self.quad_threshold)

        self.stats_ = self._collect_stats(
            out, gen_stats, opt_report, time.perf_counter() - t_start
        )
        self.points_ = points
        return out

    # -- reporting ---------------------------------------------------------

    def _collect_stats(self, out: OutputMesh, gen_stats, opt_report, wall_total):
        gammas = quality_mod.mesh_radius_ratios(out.vertices, out.triangles)
        counts, edges = np.histogram(
            out.tri_quality, bins=QT_HISTOGRAM_BINS, range=(0.0, 1.0)
        )
        stats = {
            "points": gen_stats.n_points,
            "seeds": gen_stats.n_seeds,
            "workers": gen_stats.workers,
            "generation_seconds": gen_stats.wall_time,
            "mean_walk_length": gen_stats.mean_walk_steps,
            "rejection_rate": gen_stats.rejection_rate,
            "walks": {
                "ok": gen_stats.walks_ok,
                "boundary": gen_stats.walks_boundary,
                "pathological": gen_stats.walks_pathological,
            },
            "field_sweeps": self.field_.sweeps,
            "field_residual": self.field_.residual,
            "triangles": out.n_triangles,
            "gamma_mean": float(gammas.mean()) if len(gammas) else 0.0,
            "gamma_min": float(gammas.min()) if len(gammas) else 0.0,
            "qt_mean": float(np.mean(out.tri_quality)),
            "qt_histogram": {
                "edges": [float(e) for e in edges],
                "counts": [int(c) for c in counts],
            },
            "flip_sweeps": out.flip_sweeps,
            "wall_seconds_total": wall_total,
        }
        if out.quad_pairs is not None:
            n_quads = len(out.quad_pairs)
            stats["quad_count"] = n_quads
            stats["quad_quality_mean"] = (
                float(out.quad_quality.mean()) if n_quads else 0.0
            )
            stats["leftover_triangles"] = out.n_triangles - 2 * n_quads
            stats["matched_fraction"] = (
                2.0 * n_quads / out.n_triangles if out.n_triangles else 0.0
            )
        if opt_report is not None:
            stats["optimize"] = {
                "sweeps": opt_report.sweeps,
                "relocations": opt_report.relocations,
            }
        return stats
