"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its documented domain."""


class ContractError(ValueError):
    """An input violates a structural requirement (shape, symmetry, range)."""


class ZeroResponseError(ValueError):
    """A trial produced no spikes in the counting window, so the normalized
    response is undefined.  Such trials are rejected, not zero-filled."""


class SingularSystemError(RuntimeError):
    """The unregularized normal equations are singular; rerun with lambda > 0."""


class ParseError(ValueError):
    """A data file failed validation; the message names the offending row."""


class ConfigError(ValueError):
    """An experiment configuration is malformed."""


class DataError(RuntimeError):
    """A pipeline stage ended with too little usable data to continue."""
