"""Argument checks shared by the estimator classes and the command line."""

import numpy as np

from .assembly import ProblemSpec
from .exceptions import ConfigurationError
from .fe_basis import SUPPORTED_DEGREES
from .mesh import Mesh


def check_degree(degree):
    if degree not in SUPPORTED_DEGREES:
        raise ConfigurationError(f"degree must be one of {SUPPORTED_DEGREES}, got {degree!r}")
    return int(degree)


def check_theta(theta):
    if not 0 < theta <= 1:
        raise ConfigurationError(f"theta must lie in (0, 1], got {theta!r}")
    return float(theta)


def check_beta(beta):
    if beta is not None and not beta > 0:
        raise ConfigurationError(f"beta must be positive, got {beta!r}")
    return beta


def check_mesh(mesh):
    if not isinstance(mesh, Mesh):
        raise ConfigurationError(f"expected a Mesh, got {type(mesh).__name__}")
    return mesh


def check_problem(problem):
    if not isinstance(problem, ProblemSpec):
        raise ConfigurationError(f"expected a ProblemSpec, got {type(problem).__name__}")
    return problem


def check_points(points):
    """Coerce to a finite ``(n, 2)`` float array."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigurationError(f"points must have shape (n, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ConfigurationError("points must be finite")
    return pts
