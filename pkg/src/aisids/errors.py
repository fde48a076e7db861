"""Exception hierarchy shared by the engine and the command line tool.

Every error carries an ``exit_code`` so the CLI can map it onto the
process exit status without a lookup table.
"""


class AISError(Exception):
    exit_code = 1


class InputError(AISError):
    """Malformed or unusable input data."""

    exit_code = 2


class SchemaError(InputError):
    pass


class EncodeError(InputError):
    def __init__(self, feature, value):
        super().__init__(f"unknown category {value!r} for feature {feature!r}")
        self.feature = feature
        self.value = value


class AffinityError(AISError):
    exit_code = 2


class DimensionError(AISError):
    exit_code = 2


class ValidationError(InputError):
    pass


class ConfigError(InputError):
    pass


class CoverageError(AISError):
    """No admissible detector could be generated."""

    exit_code = 3

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class SchemaMismatchError(AISError):
    exit_code = 4


class LifecycleError(AISError):
    pass


class PolicyError(AISError):
    pass
