"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible sizes (node counts or state dimensions)."""


class InvalidGraphError(ValueError):
    """Graph construction violated an invariant (self-loop, bad weight, ...)."""


class InvalidLaplacianError(ValueError):
    """Matrix handed to a spectral routine is not a valid Laplacian."""


class NoEquilibriumError(ArithmeticError):
    """The averaged dynamics are singular; no unique consensus point exists."""


class NotApplicableError(ValueError):
    """Preconditions of the requested certificate are not met."""


class TuningInfeasibleError(RuntimeError):
    """Gain tuning cannot certify the system as given."""


class SpecFormatError(ValueError):
    """A network-spec document failed validation.

    Attributes:
        code: short machine-readable failure class, e.g. ``"self-loop"``.
        path: JSON-path-like location of the offending value.
    """

    def __init__(self, code: str, path: str, message: str):
        super().__init__(f"{path}: {message} [{code}]")
        self.code = code
        self.path = path
