"""Exception hierarchy shared across the package."""


class RFieldError(Exception):
    """Base class for all errors raised by :mod:`rfield`."""

    code = "rfield_error"


class KernelError(RFieldError, ValueError):
    code = "kernel_error"


class InfraredDivergenceError(KernelError):
    """A mode variance or spectral integral diverges at k = 0."""

    code = "infrared_divergence"


class NoCrossoverError(KernelError):
    code = "no_crossover"


class QuadratureError(RFieldError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    code = "quadrature_nonconvergence"


class SupportOverflowError(RFieldError, ValueError):
    """A test function's effective support does not fit in the periodic box."""

    code = "support_overflow"


class ObservableMismatchError(RFieldError, ValueError):
    code = "observable_mismatch"


class SingularCovarianceError(RFieldError, ValueError):
    code = "singular_covariance"


class MomentOrderError(RFieldError, ValueError):
    code = "moment_order_exceeded"


class MarginalError(RFieldError, ValueError):
    """Probability tables are malformed (negative entries, bad sums, bad layout)."""

    code = "invalid_marginals"


class NoSignallingError(MarginalError):
    """Single-party marginals depend on the remote setting."""

    code = "no_signalling_violation"
