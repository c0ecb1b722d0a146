"""Package exception types, mapped to CLI exit codes."""


class CfiddError(Exception):
    """Base class for package errors."""


class ConfigError(CfiddError):
    """Invalid or inconsistent configuration (CLI exit code 1)."""


class NumericalError(CfiddError):
    """Numerical failure such as an ill-conditioned solve (CLI exit code 2)."""


class ConstructionError(CfiddError):
    """Code construction could not satisfy its structural requirements."""
