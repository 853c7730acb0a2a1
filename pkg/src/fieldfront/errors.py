"""Exception types shared across the package."""


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


class MeshParseError(MeshError):
    """Input file could not be parsed in the declared format."""


class NonManifoldError(MeshError):
    """An edge is shared by more than two triangles."""


class DegenerateTriangleError(MeshError):
    """A triangle has (numerically) zero area."""


class FieldConvergenceError(Exception):
    """Direction field smoothing failed to reach the residual target."""

    def __init__(self, residual, sweeps):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(
            f"field smoothing did not converge: residual {residual:.3e} "
            f"after {sweeps} sweeps"
        )


class WalkError(Exception):
    """Walking intersection failed to produce a point."""


class WalkBoundaryError(WalkError):
    """The walk exited the domain through a boundary edge."""


class WalkStepLimitError(WalkError):
    """The walk exceeded its triangle-visit cap (pathological geometry)."""


class ConfigError(ValueError):
    """Mutually inconsistent or out-of-range run parameters."""
