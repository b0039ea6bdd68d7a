"""Exception classes shared across the package.

Every error raised on bad user input derives from :class:`ParameterError`,
which is also a :class:`ValueError` so callers that only know about builtin
exceptions still catch it.
"""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class DegenerateInputError(ParameterError):
    """Input carries no usable signal (zero power, zero counts, ...)."""


class ValidationError(ParameterError):
    """A value object violates one of its invariants (e.g. a non-PSD matrix)."""


class EnvelopeTruncationError(ParameterError):
    """The sampling grid is too small for the requested beam."""


class AliasingError(ParameterError):
    """Too much power sits on the grid border for a periodic transform."""


class CompletenessError(ParameterError):
    """A projector set is not informationally complete."""


class ChannelAnnihilationError(ParameterError):
    """The memory channel maps the state to the zero vector."""


class ResolutionError(ParameterError):
    """Solver step sizes do not resolve the fastest rate in the problem."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to meet its convergence gate."""


class ConfigError(ParameterError):
    """Configuration file could not be parsed or validated."""


class ConfigParseError(ConfigError):
    """Configuration text is not valid JSON."""


class UnknownKeyError(ConfigError):
    """Configuration names a section or key that does not exist."""


class ConfigValueError(ConfigError):
    """A configuration value violates a component invariant."""
