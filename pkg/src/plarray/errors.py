"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all plarray errors."""


class InvalidGeometryError(ToolkitError, ValueError):
    """A facet, environment, or array violates a geometric invariant."""


class ConfigError(ToolkitError, ValueError):
    """A scenario or file configuration is malformed or out of range."""


class DependencyError(ToolkitError, RuntimeError):
    """A pipeline stage was requested before the artifact it depends on exists."""
