"""Exception hierarchy; the CLI maps each class onto an exit code."""


class SasaSatsumaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SasaSatsumaError, ValueError):
    pass


class NumericalError(SasaSatsumaError, RuntimeError):
    pass


class AccuracyError(NumericalError):
    pass


class ConsistencyError(SasaSatsumaError):
    """A structural invariant (symmetry, determinant) failed beyond tolerance."""


class SpectralSingularityError(SasaSatsumaError):
    """``s33`` (nearly) vanishes on the real line."""


class SolitonsPresentError(SasaSatsumaError):
    """The winding certificate reports zeros of ``s33`` in the upper half-plane."""


class OscillationBudgetError(SasaSatsumaError):
    """The real-line jump oscillates faster than the quadrature can resolve."""


class RangeError(SasaSatsumaError, ValueError):
    pass


class BlowUpError(NumericalError):
    def __init__(self, message, last_stable_time=None):
        super().__init__(message)
        self.last_stable_time = last_stable_time


class BoxTooSmallError(SasaSatsumaError):
    pass
