"""Named benchmark problems with their initial meshes and exact data."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assembly import ProblemSpec
from .exceptions import ConfigurationError
from .mesh import lshape_mesh, square_mesh

TWO_PI = 2 * np.pi

CASE_POINTS = {
    1: (0.0, 0.0),                          # mesh vertex
    2: (-np.sqrt(7.0), -np.pi),             # on an edge from the first refinement on
    3: (np.sqrt(5.0), np.sqrt(8.0)),        # inside a triangle
}


class FundamentalSolution:
    """``u = r^2 ln r / (8 pi)`` with ``r = |x - x0|`` and its derivatives.

    ``Lap^2 u`` is the unit point load at ``x0``.
    """

    def __init__(self, x0):
        self.x0 = np.asarray(x0, dtype=float)

    def _polar(self, x, y):
        dx = np.asarray(x, dtype=float) - self.x0[0]
        dy = np.asarray(y, dtype=float) - self.x0[1]
        r2 = dx * dx + dy * dy
        # log r at the load point is -inf; every caller multiplies it by r^2
        # or integrates it, so a tiny floor keeps values finite
        logr = 0.5 * np.log(np.maximum(r2, 1e-300))
        return dx, dy, r2, logr

    def value(self, x, y):
        _, _, r2, logr = self._polar(x, y)
        return r2 * logr / (8 * np.pi)

    def grad(self, x, y):
        dx, dy, _, logr = self._polar(x, y)
        s = (2 * logr + 1) / (8 * np.pi)
        return np.stack([s * dx, s * dy], axis=-1)

    def hessian(self, x, y):
        dx, dy, r2, logr = self._polar(x, y)
        inv = np.where(r2 > 0, 1.0 / np.where(r2 > 0, r2, 1.0), 0.0)
        diag = 2 * logr + 1
        h = np.empty(np.shape(dx) + (2, 2))
        h[..., 0, 0] = diag + 2 * dx * dx * inv
        h[..., 1, 1] = diag + 2 * dy * dy * inv
        h[..., 0, 1] = h[..., 1, 0] = 2 * dx * dy * inv
        return h / (8 * np.pi)

    def laplacian(self, x, y):
        _, _, _, logr = self._polar(x, y)
        return (logr + 1) / (2 * np.pi)

    def normal_derivative(self, x, y, nx, ny):
        g = self.grad(x, y)
        return g[..., 0] * nx + g[..., 1] * ny


@dataclass
class Preset:
    name: str
    mesh_factory: Callable
    spec_factory: Callable
    exact: Optional[FundamentalSolution] = None
    corner_angle: float = np.pi / 2

    def initial_mesh(self):
        return self.mesh_factory()

    def spec(self, beta=None):
        return self.spec_factory(beta)


def _square():
    return square_mesh(-TWO_PI, TWO_PI, 2, "diagonal")


def _fundamental_spec(bc, sol, mu1=1.0, mu2=1.0):
    def source(x, y):
        return mu2 * sol.value(x, y) - mu1 * sol.laplacian(x, y)

    def make(beta):
        kw = dict(g=sol.value)
        if bc == "dirichlet":
            kw["g_N"] = sol.normal_derivative
        else:
            kw["g_B"] = sol.laplacian
        return ProblemSpec(bc=bc, mu1=mu1, mu2=mu2, f=source,
                           point_loads=[(tuple(sol.x0), 1.0)], beta=beta, **kw)

    return make


def get_preset(name, case=3):
    """Build a preset by name.

    ``lshape-clamped``: pure biharmonic on the L-shaped domain with a unit
    load at (-pi, pi).  ``square-dirichlet`` / ``square-navier``: operator
    with lower-order terms on (-2pi, 2pi)^2 with the fundamental solution
    as exact solution; ``case`` picks the load position.
    ``square-neumann``: loads +1 at (pi, 0) and -1 at (-pi, 0).
    """
    if name == "lshape-clamped":
        return Preset(
            name, lambda: lshape_mesh(2, "crisscross"),
            lambda beta: ProblemSpec(bc="clamped", point_loads=[((-np.pi, np.pi), 1.0)],
                                     beta=beta),
            corner_angle=1.5 * np.pi)
    if name in ("square-dirichlet", "square-navier"):
        if case not in CASE_POINTS:
            raise ConfigurationError(f"case must be one of {sorted(CASE_POINTS)}")
        sol = FundamentalSolution(CASE_POINTS[case])
        bc = name.split("-")[1]
        return Preset(name, _square, _fundamental_spec(bc, sol), exact=sol)
    if name == "square-neumann":
        return Preset(
            name, _square,
            lambda beta: ProblemSpec(bc="neumann",
                                     point_loads=[((np.pi, 0.0), 1.0), ((-np.pi, 0.0), -1.0)],
                                     beta=beta))
    raise ConfigurationError(f"unknown preset {name!r}; expected one of {PRESETS}")


PRESETS = ("lshape-clamped", "square-dirichlet", "square-navier", "square-neumann")
