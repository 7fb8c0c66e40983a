"""Exception hierarchy."""


class BiharmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BiharmError, ValueError):
    """Unsupported degree, missing callback, variant mismatch."""


class MeshError(BiharmError, ValueError):
    """Malformed or non-conforming mesh input."""


class LocationError(BiharmError, ValueError):
    """A point lies outside the meshed domain."""


class GeometryError(BiharmError, ValueError):
    """Meshes are not nested where nestedness is required."""


class SolverError(BiharmError, RuntimeError):
    """Linear solve failed: breakdown, indefiniteness or no convergence."""


class SearchWindowError(BiharmError, RuntimeError):
    """No characteristic root found in the search window."""
