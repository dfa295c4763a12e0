"""Exception taxonomy shared by all modules.

Everything derives from SlicesurfError so callers (and the CLI) can map the
whole family to a validation exit code, with DivergenceError kept separate
because it signals a numerical failure rather than bad input.
"""


class SlicesurfError(Exception):
    """Base class for all package errors."""


class ShapeError(SlicesurfError, ValueError):
    """Grid specs or array shapes of combined operands do not match."""


class AllFarError(SlicesurfError, ValueError):
    """Distance transform of an empty set: every voxel is infinitely far."""


class DegenerateInputError(SlicesurfError, ValueError):
    """Input set is empty/full, or a slice stack is too small to use."""


class InfeasibleConstraintsError(SlicesurfError, ValueError):
    """Lower obstacle exceeds upper obstacle somewhere: no feasible field."""


class ConfigError(SlicesurfError, ValueError):
    """Invalid solver/geometry configuration value."""


class NonManifoldError(SlicesurfError, ValueError):
    """Mesh has edges shared by more than two triangles."""

    def __init__(self, edges):
        self.edges = list(edges)
        super().__init__(f"non-manifold edges: {self.edges[:10]}"
                         + (" ..." if len(self.edges) > 10 else ""))


class DivergenceError(SlicesurfError, RuntimeError):
    """Solver produced non-finite values."""

    def __init__(self, iteration, message=""):
        self.iteration = iteration
        super().__init__(message or f"non-finite values at iteration {iteration}")
