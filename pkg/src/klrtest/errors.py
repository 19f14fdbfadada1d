"""Exception taxonomy mapped to CLI exit codes."""


class InputError(ValueError):
    """Bad user data: malformed files, dimension mismatches, empty samples. Exit code 2."""


class ConfigError(ValueError):
    """Invalid configuration values or unparseable config keys. Exit code 3."""


class NumericalError(RuntimeError):
    """Numerical breakdown beyond roundoff tolerance (corrupt spectra, failed factorizations). Exit code 4."""
