"""Exception hierarchy shared by all modules."""


class FedOffloadError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(FedOffloadError, ValueError):
    """Invalid configuration value, unknown key or unparsable config file."""


class DomainError(FedOffloadError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class InfeasibleInputError(DomainError):
    """Input for which the requested quantity is infinite (e.g. zero transmit power)."""


class UsageError(FedOffloadError, RuntimeError):
    """Operation called in a state where it is not allowed."""


class FormatError(FedOffloadError, ValueError):
    """Malformed checkpoint or metrics data."""


class ConfigNotFoundError(ConfigError):
    """Config file does not exist."""


class ConfigParseError(ConfigError):
    """Config file is not valid ``key = value`` text."""


class ConfigValidationError(ConfigError):
    """A config value is out of bounds or a key is unknown."""
