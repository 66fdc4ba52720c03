"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CoreDriftError(Exception):
    exit_code = 1


class ConfigError(CoreDriftError, ValueError):
    exit_code = 2


class InvalidArgumentError(ConfigError):
    """A function argument violates its documented precondition."""


class InvalidProfileError(ConfigError):
    pass


class SchemaError(CoreDriftError, ValueError):
    exit_code = 6


class DatasetIOError(CoreDriftError, OSError):
    exit_code = 3


class MissingArtifactError(DatasetIOError):
    """An upstream stage has not produced the artifact this stage needs."""


class NumericStateError(CoreDriftError, ArithmeticError):
    exit_code = 4


class CalibrationError(CoreDriftError, ValueError):
    exit_code = 4


class UndefinedMetricError(CoreDriftError, ZeroDivisionError):
    exit_code = 4


class ComparabilityError(CoreDriftError):
    exit_code = 5
