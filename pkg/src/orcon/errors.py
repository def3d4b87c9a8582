"""Exception hierarchy shared by all orcon modules."""


class OrconError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(OrconError, ValueError):
    pass


class InfeasiblePointError(OrconError, ValueError):
    def __init__(self, max_violation: float, tol: float):
        super().__init__(f"point is infeasible: max violation {max_violation:.3e} > {tol:.1e}")
        self.max_violation = max_violation
        self.tol = tol


class BiactiveOverflowError(OrconError):
    pass


class PointNotInComplementaritySetError(OrconError, ValueError):
    def __init__(self, point):
        super().__init__(f"point {tuple(point)} is not in the complementarity set")
        self.point = point


class InconsistentSignsError(OrconError):
    pass


class EvaluationError(OrconError, FloatingPointError):
    """A user function returned NaN/Inf."""

    def __init__(self, what: str, x):
        super().__init__(f"{what} produced a non-finite value")
        self.what = what
        self.x = x


class InnerSolverError(OrconError):
    def __init__(self, stage: int, cause: Exception):
        super().__init__(f"inner solver failed in stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


class TooLargeError(OrconError, ValueError):
    pass


class InfeasibleResultError(OrconError):
    pass
