"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class SentiPersError(Exception):
    exit_code = 1


class ConfigError(SentiPersError, ValueError):
    """Invalid option, flag combination or config file."""

    exit_code = 2


class DataError(SentiPersError, ValueError):
    """Malformed input data (XML, dataset records, vector files, tables)."""

    exit_code = 3


class NumericError(SentiPersError, ArithmeticError):
    """Non-finite loss or weights during training."""

    exit_code = 4


class ShapeError(ConfigError):
    pass


class StageError(SentiPersError):
    """Failure inside one stage of an experiment run; wraps the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
