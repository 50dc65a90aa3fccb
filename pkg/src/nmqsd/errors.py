"""Exception types raised across the package."""


class NMQSDError(Exception):
    """Base class for all package errors."""


class ZeroNorm(NMQSDError, ValueError):
    pass


class DimensionMismatch(NMQSDError, ValueError):
    pass


class TruncationTooSmall(NMQSDError, ValueError):
    pass


class DeltaNotPointwise(NMQSDError, ValueError):
    pass


class NotPositiveSemidefinite(NMQSDError, ValueError):
    pass


class UnsupportedKernel(NMQSDError, TypeError):
    pass


class FDiverged(NMQSDError, ArithmeticError):
    """The Riccati coefficient passed its overflow guard.

    ``time`` carries the estimated divergence time when known.
    """

    def __init__(self, msg, time=None):
        super().__init__(msg)
        self.time = time


class NotSupercritical(NMQSDError, ValueError):
    pass


class InvalidAnsatz(NMQSDError, ValueError):
    pass


class ModelEstimatorMismatch(NMQSDError, ValueError):
    pass


class EmptyEnsemble(NMQSDError, ValueError):
    pass


class InsufficientSamples(NMQSDError, ValueError):
    pass


class EnsembleFailure(NMQSDError, RuntimeError):
    """One or more trajectories failed; ``failures`` maps path index to message."""

    def __init__(self, failures):
        self.failures = dict(failures)
        first = sorted(self.failures.items())[:5]
        super().__init__(
            f"{len(self.failures)} trajectories failed, first: {first}")


class ConfigError(NMQSDError, ValueError):
    pass
