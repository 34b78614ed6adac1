"""Exception types raised by the solver pipeline."""


class TrigfideError(Exception):
    """Base class for all package-specific errors."""


class CommensurabilityError(TrigfideError, ValueError):
    """Interval endpoints do not land on collocation nodes.

    Carries the offending ratio so callers can see how far off the grid is.
    """

    def __init__(self, name, ratio):
        self.name = name
        self.ratio = ratio
        super().__init__(
            f"{name} = {ratio!r} must be an integer; choose s, e, delta "
            f"commensurate with the grid spacing"
        )


class EvaluationError(TrigfideError, ValueError):
    """A sampled function returned a non-finite value."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)


class ConstructionInconsistencyError(TrigfideError, RuntimeError):
    """The two independent constructions of the derivative matrix disagree."""

    def __init__(self, deviation, entry):
        self.deviation = deviation
        self.entry = entry
        super().__init__(
            f"derivative-matrix constructions disagree by {deviation:.3e} "
            f"(relative) at entry {entry}"
        )


class RepresentationValidationError(TrigfideError, RuntimeError):
    """The affine integral-term map failed its quadrature validation."""

    def __init__(self, deviation, node, tolerance):
        self.deviation = deviation
        self.node = node
        self.tolerance = tolerance
        super().__init__(
            f"integral-term map deviates from quadrature by {deviation:.3e} "
            f"(worst node {node}, tolerance {tolerance:.1e})"
        )


class SingularSystemError(TrigfideError, RuntimeError):
    """The collocation matrix is singular or numerically rank deficient."""


class UndefinedMetricError(TrigfideError, ValueError):
    """Error metric normalizer vanishes on the probe set."""


class ManufactureError(TrigfideError, RuntimeError):
    """Forcing-term quadrature failed while building a benchmark problem."""


class SolveStageError(TrigfideError, RuntimeError):
    """Wraps a failure in one stage of the solve pipeline."""

    def __init__(self, stage, original):
        self.stage = stage
        self.original = original
        super().__init__(f"[{stage}] {original}")
