"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, flags, or input files."""


class NumericalAbort(RuntimeError):
    """A NaN/Inf appeared where training requires finite values."""


class CollapseError(NumericalAbort):
    """Center norm and embedding spread degenerated below tolerance together."""
