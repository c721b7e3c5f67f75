"""Error categories used across the package."""


class CgmpinnError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(CgmpinnError):
    """A config value violates a documented constraint."""


class InputError(CgmpinnError):
    """Runtime data handed to an operation is malformed."""


class NumericalError(CgmpinnError):
    """A computation produced a non-finite or otherwise unusable value."""
