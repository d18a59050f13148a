"""Exception types shared across the package."""


class FblinError(Exception):
    """Base class for all package errors."""


class DimensionError(FblinError):
    """Array arguments have incompatible or unsupported shapes."""


class DomainError(FblinError):
    """A system map was evaluated outside its valid domain."""


class SingularityError(FblinError):
    """A matrix equation has no unique solution (shared spectra, etc.)."""


class InvertibilityError(FblinError):
    """A matrix that must be invertible is singular to working precision."""


class NumericalError(FblinError):
    """A numerical procedure failed to meet its accuracy contract."""


class ProtocolError(FblinError):
    """An external black-box process violated the line protocol."""


class ConfigError(FblinError):
    """A run configuration file or value is invalid."""


class ArchitectureMismatchError(FblinError):
    """A parameter snapshot does not match the requested network layout."""
