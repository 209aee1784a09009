"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its documented domain."""


class ShapeError(ValueError):
    """Array dimensions do not agree."""


class NumericError(ValueError):
    """An input contains non-finite values."""


class PosteriorStateError(RuntimeError):
    """Internal invariant violation: posterior precision lost positive definiteness."""


class EmptyArmSetError(ValueError):
    """A selection rule was invoked with no arms to choose from."""


class InfeasibleRoundError(RuntimeError):
    """The mask agent faced a round with an empty allowed set."""


class ConfigurationError(ValueError):
    """An agent or experiment is missing a required piece of configuration."""


class TruncatedRunError(RuntimeError):
    """The environment ran out of contexts before the requested horizon.

    Carries the partial trajectory in ``log``.
    """

    def __init__(self, message, log):
        super().__init__(message)
        self.log = log
