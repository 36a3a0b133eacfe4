"""Exception types shared across the package."""


class MixedStateError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MixedStateError):
    """A value lies outside the state space (bad atom index, point not in G, ...)."""


class ParameterError(MixedStateError):
    """A parameter vector lies outside its admissible set (theta not in Theta,
    gamma on the {0,1} boundary, negative rates, ...)."""


class InadmissibleParameterError(ParameterError):
    """A local natural parameter fell outside Theta at a specific site."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class NonIdentifiableError(MixedStateError):
    """The data cannot identify the parameters (all-atom field, constant field)."""


class FitError(MixedStateError):
    """The optimizer failed irrecoverably (line search exhausted on a non-finite
    objective, too many bootstrap failures, ...)."""


class FormatError(MixedStateError):
    """Malformed serialized input (field file, CSV, model config, PGM)."""
