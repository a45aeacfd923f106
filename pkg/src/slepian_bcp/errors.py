"""Exception types shared across the package."""


class SlepianError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SlepianError, ValueError):
    """An argument lies outside the domain a function is defined on."""


class NotPositiveDefiniteError(SlepianError):
    """A matrix expected to be positive definite is not.

    For covariance matrices built from process time points this usually
    signals duplicated or out-of-range times.
    """


class DimensionTooLargeError(SlepianError):
    """Deterministic quadrature was requested beyond its dimension cap.

    Use the Monte-Carlo estimator for finer partitions.
    """


class QuadratureNonConvergenceError(SlepianError):
    """Adaptive quadrature exhausted its budget before reaching tolerance.

    Carries the best value obtained and the achieved error bound so the
    caller can decide whether the result is still usable.
    """

    def __init__(self, message: str, value: float, error_bound: float,
                 evaluations: int):
        super().__init__(message)
        self.value = value
        self.error_bound = error_bound
        self.evaluations = evaluations
