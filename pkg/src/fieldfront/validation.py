"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .mesh import SurfaceMesh
from .sizing import SizeField


def check_mesh(X) -> SurfaceMesh:
    """Coerce the input into a validated SurfaceMesh.

    Accepts a SurfaceMesh or a (vertices, triangles) pair.
    """
    if isinstance(X, SurfaceMesh):
        return X
    if isinstance(X, (tuple, list)) and len(X) == 2:
        return SurfaceMesh(np.asarray(X[0]), np.asarray(X[1]))
    raise TypeError(
        "expected a SurfaceMesh or a (vertices, triangles) pair, "
        f"got {type(X).__name__}"
    )


def check_size(size, mesh: SurfaceMesh) -> SizeField:
    """Coerce a size specification into a SizeField.

    Accepts a SizeField, a positive number (constant size), or an
    (h_min, h_max, gradation) triple (graded size).
    """
    if isinstance(size, SizeField):
        return size
    try:
        if isinstance(size, (int, float)):
            return SizeField.constant(float(size))
        if isinstance(size, (tuple, list)) and len(size) == 3:
            return SizeField.graded(mesh, float(size[0]), float(size[1]), float(size[2]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(
        "size must be a SizeField, a positive number, or an "
        "(h_min, h_max, gradation) triple"
    )


def check_run_params(order, alpha, workers, norm, seed_ordering, recombine):
    """Cross-field-wide parameter checks; raises ConfigError."""
    if order not in (4, 6):
        raise ConfigError("order must be 4 (cross) or 6 (asterisk)")
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if norm is not None and norm not in ("linf", "l2", "linf-frame"):
        raise ConfigError("norm must be one of linf, l2, linf-frame")
    if seed_ordering not in ("topological", "hilbert"):
        raise ConfigError("seed ordering must be 'topological' or 'hilbert'")
    if recombine and order == 6:
        raise ConfigError("recombination requires a cross field (order 4)")
