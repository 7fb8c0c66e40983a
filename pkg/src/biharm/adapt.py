"""Solve, estimate, mark, refine."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import assemble_source_and_boundary, assemble_system
from .delta import assemble_regularized_rhs, project_delta
from .estimator import estimate_primal, estimate_regularized
from .exceptions import BiharmError, ConfigurationError
from .fe_basis import SUPPORTED_DEGREES
from .linsolve import DEFAULT_TOL, solve
from .mesh import bisect
from .space import FeSpace

log = logging.getLogger(__name__)

ESTIMATORS = ("primal", "regularized")


@dataclass
class AdaptConfig:
    degree: int = 3
    theta: float = 0.5
    max_refinements: int = 8
    estimator: str = "primal"
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ConfigurationError("theta must lie in (0, 1]")
        if self.max_refinements < 0:
            raise ConfigurationError("max_refinements must be >= 0")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}")
        if self.degree not in SUPPORTED_DEGREES:
            raise ConfigurationError(f"degree must be one of {SUPPORTED_DEGREES}")


@dataclass
class TraceRow:
    iteration: int
    n_dofs: int
    estimate: float
    energy_error: float
    marked: int
    elements: int


@dataclass
class AdaptResult:
    trace: list
    space: FeSpace
    solution: np.ndarray
    report: object
    error: Optional[Exception] = None
    meshes: list = field(default_factory=list)


def solve_on_mesh(space, spec, regularized=False, tol=DEFAULT_TOL):
    """Discrete solution on ``space``; the zero-mean multiplier is dropped.

    With ``regularized`` the point loads enter through their element-local
    polynomial projections.  Returns ``(u, deltas)``.
    """
    deltas = ()
    rhs = None
    if regularized:
        deltas = tuple(project_delta(space, p, w) for p, w in spec.point_loads)
        rhs = assemble_regularized_rhs(space, deltas) + assemble_source_and_boundary(space, spec)
    system = assemble_system(space, spec, rhs=rhs)
    sol = solve(system, tol=tol).solution
    return sol[:space.n_dofs], deltas


def estimate(space, u, spec, regularized=False, deltas=None):
    if regularized:
        return estimate_regularized(space, u, spec, deltas)
    return estimate_primal(space, u, spec)


def mark(indicators, theta):
    """Smallest set of triangles holding a ``theta^2`` share of the local
    squared indicator mass.

    ``indicators`` is an estimator report or an array of local
    indicators.  Triangles are taken by decreasing indicator, ties by
    increasing id.  The free-standing global point-load term is not part
    of the mass.
    """
    if not 0 < theta <= 1:
        raise ConfigurationError("theta must lie in (0, 1]")
    if hasattr(indicators, "local_squared"):
        loc2 = np.asarray(indicators.local_squared, dtype=float)
    else:
        loc2 = np.asarray(indicators, dtype=float) ** 2
    order = np.lexsort((np.arange(len(loc2)), -loc2))
    cum = np.cumsum(loc2[order])
    if len(cum) == 0 or cum[-1] <= 0:
        return np.zeros(0, dtype=np.int64)
    k = int(np.searchsorted(cum, theta * theta * cum[-1], side="left"))
    return np.sort(order[:min(k, len(cum) - 1) + 1])


def run_adaptive(spec, mesh0, cfg, exact_error: Optional[Callable] = None,
                 keep_meshes=False):
    """Run exactly ``cfg.max_refinements`` refinement rounds.

    ``exact_error(space, u)`` is called each iteration when given.  On a
    solver or estimator failure the partial trace is returned with the
    exception attached.
    """
    regularized = cfg.estimator == "regularized"
    mesh = mesh0
    trace = []
    meshes = []
    space = u = report = None
    for i in range(cfg.max_refinements + 1):
        try:
            space = FeSpace(mesh, cfg.degree)
            u, deltas = solve_on_mesh(space, spec, regularized, cfg.tol)
            report = estimate(space, u, spec, regularized, deltas)
        except BiharmError as exc:
            log.error("adaptive loop aborted at iteration %d: %s", i, exc)
            return AdaptResult(trace, space, u, report, exc, meshes)
        err = exact_error(space, u) if exact_error is not None else float("nan")
        marked = mark(report, cfg.theta) if i < cfg.max_refinements else np.zeros(0, int)
        trace.append(TraceRow(i, space.n_dofs, report.total, err, len(marked),
                              mesh.n_triangles))
        if keep_meshes:
            meshes.append(mesh)
        log.info("iter %d: N=%d estimate=%.4e marked=%d", i, space.n_dofs,
                 report.total, len(marked))
        if i < cfg.max_refinements:
            mesh = bisect(mesh, marked)
    return AdaptResult(trace, space, u, report, None, meshes)
