"""Exception types raised across the package."""


class EETError(Exception):
    """Base class for all eetnet errors."""


class ConfigError(EETError, ValueError):
    """Invalid network, noise or run configuration."""


class DimensionError(EETError, ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(EETError, ValueError):
    """A matrix expected to be Hermitian is not.

    Attributes
    ----------
    max_asymmetry : float
        Largest entry of ``|M - M^dagger|``.
    index : tuple of int
        Position of that entry.
    """

    def __init__(self, max_asymmetry, index):
        self.max_asymmetry = float(max_asymmetry)
        self.index = tuple(int(i) for i in index)
        super().__init__(
            f"matrix is not Hermitian: |M - M^H| = {self.max_asymmetry:.3e} "
            f"at entry {self.index}"
        )


class DarkBlockNotDegenerate(EETError):
    """Dark subspace spans several eigenvalues; the static predictor is invalid."""


class NumericalError(EETError, ArithmeticError):
    """Base class for failures of the time integrator."""


class StepSizeUnderflow(NumericalError):
    """Adaptive step size collapsed; the problem is too stiff for the explicit scheme."""


class InvariantViolation(NumericalError):
    """Trace or positivity drifted beyond the allowed bound during integration."""


class PropagatorTooLarge(EETError):
    """Model dimension exceeds the cap for the dense superoperator exponential."""
