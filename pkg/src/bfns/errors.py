"""Exception taxonomy shared across the package."""


class BfnsError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(BfnsError, ValueError):
    """A scalar or configuration parameter is out of its admissible range."""


class InvalidFieldError(BfnsError, ValueError):
    """A spectral field violates a structural invariant (finiteness, shape)."""


class ConfigError(BfnsError, ValueError):
    """A run configuration failed schema validation or semantic checks."""


class BlowUpError(BfnsError, RuntimeError):
    """The integrator produced a non-finite or astronomically large state.

    Carries the time at which divergence was detected and, when available,
    the partial trajectory computed so far.
    """

    def __init__(self, message, time=None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial


class TrajectoryFormatError(BfnsError, ValueError):
    """A trajectory file does not start with the expected magic/layout."""


class TrajectoryVersionError(TrajectoryFormatError):
    """A trajectory file declares an unsupported format version."""


class TrajectoryCorruptionError(BfnsError, ValueError):
    """A trajectory file is truncated or has inconsistent byte counts."""


class TrajectoryIntegrityError(BfnsError, ValueError):
    """Stored field data violates the spectral-field invariants."""
