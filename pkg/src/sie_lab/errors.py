"""Exception types shared across the solver modules."""


class SieLabError(Exception):
    """Base class for all library errors."""


class InputError(SieLabError):
    """Invalid user input (bad node sets, malformed problem data, bad parameters)."""


class InvalidNodeSetError(InputError):
    """Node/sample counts that cannot define a trigonometric interpolant."""


class DomainError(InputError):
    """Evaluation requested outside the representable domain."""


class SingularPanelError(SieLabError):
    """A panel integral was requested with the singular point on a panel endpoint."""


class DivergentKernelError(InputError):
    """Kernel exponent outside the integrable range."""


class SingularSystemError(SieLabError):
    """Dense solve hit a numerically singular matrix."""


class SingularBlockError(SingularSystemError):
    """A diagonal block of a block partition is numerically singular."""

    def __init__(self, block_index, message=None):
        self.block_index = block_index
        super().__init__(message or f"diagonal block {block_index} is numerically singular")


class NonContractionError(SieLabError):
    """An iteration whose contraction estimate is >= 1 was refused or diverged."""


class DivergenceError(SieLabError):
    """An iterative method failed to converge; carries the residual history."""

    def __init__(self, message, history=None):
        self.history = list(history) if history is not None else []
        super().__init__(message)


class StationaryPointError(SieLabError):
    """Gradient-type iteration hit a zero step denominator away from a solution."""


class TuningFailureError(SieLabError):
    """No discretization parameter achieving diagonal dominance was found."""

    def __init__(self, message, best_margin=None):
        self.best_margin = best_margin
        super().__init__(message)


class MeshParameterError(InputError):
    """Mesh parameters violating their stated bounds."""


class GridParameterError(InputError):
    """2-D grid parameters violating their stated bounds."""


class CubatureError(SieLabError):
    """Panel cubature failed to converge under refinement."""


class NonDominantJacobianError(SieLabError):
    """Newton step refused because the Jacobian lost diagonal dominance."""


class FactorizationDomainError(SieLabError):
    """Factorization input vanishes at a node."""


class IndexError2D(SieLabError):
    """Nonzero partial winding numbers; exp-log factorization not applicable."""

    def __init__(self, kappa1, kappa2):
        self.kappa = (kappa1, kappa2)
        super().__init__(f"nonzero partial indices ({kappa1}, {kappa2})")


class AngleConditionError(SieLabError):
    """Sampled symbol values do not admit a contracting complex scaling."""

    def __init__(self, message, center=None, radius=None):
        self.center = center
        self.radius = radius
        super().__init__(message)


class TruncationWidthError(SieLabError):
    """Right-hand-side tail mass beyond the truncation width is too large."""

    def __init__(self, message, tail=None):
        self.tail = tail
        super().__init__(message)
