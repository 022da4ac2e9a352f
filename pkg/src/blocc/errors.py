"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or inconsistent solver settings."""


class ParseError(ValueError):
    """Malformed input file (dataset or network spec)."""


class SolverAbort(RuntimeError):
    """Numerical failure (non-finite iterate or gradient) during a solve."""
