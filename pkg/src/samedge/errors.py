"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument violates a documented precondition (shape, sign, range)."""


class DivergedError(FloatingPointError):
    """Parameters or derived quantities are no longer finite."""


class ZeroGradientError(ValueError):
    """The SAM update is undefined because the gradient vanishes."""


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration.

    ``key`` names the offending ``section.key`` when known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
