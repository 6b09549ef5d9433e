"""Exception taxonomy.

The CLI maps these onto exit codes: configuration/usage problems exit 1,
data and capacity problems exit 2, applicability refusals exit 3.
"""


class SamplationError(Exception):
    """Base class for all package errors."""


class ConfigError(SamplationError):
    """Invalid configuration value (bad prevalence vector, fraction, ...)."""


class ParseError(SamplationError):
    """Malformed file content; message carries the offending line number."""


class SchemaError(SamplationError):
    """File structure disagrees with the documented schema."""


class SizeError(SamplationError):
    """A size precondition is violated (sample larger than population, ...)."""


class CapacityError(SamplationError):
    """An allocation asks more from a reserve than it holds."""

    def __init__(self, message: str, group: int | None = None):
        super().__init__(message)
        self.group = group


class GenerationError(SamplationError):
    """Synthetic data cannot be generated (e.g. a group with < 2 seeds)."""

    def __init__(self, message: str, group: int | None = None):
        super().__init__(message)
        self.group = group


class TrainingError(SamplationError):
    """Training diverged or cannot proceed."""


class ApplicabilityError(SamplationError):
    """The applicability audit failed and no override was given."""
