"""Exception types shared across the package."""


class DuoatomError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(DuoatomError):
    """Raised on malformed or invalid configuration input."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = str(path)
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class IntegrationError(DuoatomError):
    """Raised when an ODE integration fails or violates a sanity bound."""


class GridResolutionError(DuoatomError):
    """Raised when a sampling grid is too coarse for the requested analysis."""
