"""Estimator-style front end.

Hyperparameters go to the constructor; ``fit(mesh, problem)`` solves and
stores fitted attributes with a trailing underscore; ``predict(points)``
evaluates the discrete solution.
"""

from dataclasses import replace

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .adapt import AdaptConfig, estimate, run_adaptive, solve_on_mesh
from .errors import energy_error
from .linsolve import DEFAULT_TOL
from .space import FeSpace
from .validation import (check_beta, check_degree, check_mesh, check_points,
                         check_problem, check_theta)


def _with_beta(problem, beta):
    return problem if beta is None else replace(problem, beta=float(beta))


class _FittedSolution:
    def predict(self, points, kind="value"):
        """Values (or ``grad``, ``hess``, ``lap``) of the discrete solution."""
        check_is_fitted(self, "solution_")
        return self.space_.evaluate(self.solution_, check_points(points), kind)

    def energy_error(self, exact):
        """Energy-norm distance to ``exact`` (an object with ``hessian``,
        ``grad`` and ``x0``)."""
        check_is_fitted(self, "solution_")
        return energy_error(self.space_, self.solution_, exact,
                            self.problem_.beta_for(self.degree),
                            interior_only=self.problem_.bc == "navier")


class C0IPSolver(_FittedSolution, BaseEstimator):
    """Single solve on a fixed mesh, followed by the error indicator.

    Fitted attributes: ``space_``, ``solution_``, ``report_`` (indicator
    breakdown), ``estimate_`` (its global value), ``problem_``.
    """

    def __init__(self, degree=3, beta=None, regularized=False, tol=DEFAULT_TOL):
        self.degree = degree
        self.beta = beta
        self.regularized = regularized
        self.tol = tol

    def fit(self, mesh, problem):
        check_degree(self.degree)
        check_beta(self.beta)
        spec = _with_beta(check_problem(problem), self.beta)
        self.problem_ = spec
        self.space_ = FeSpace(check_mesh(mesh), self.degree)
        self.solution_, deltas = solve_on_mesh(self.space_, spec, self.regularized, self.tol)
        self.report_ = estimate(self.space_, self.solution_, spec, self.regularized, deltas)
        self.estimate_ = self.report_.total
        self.n_dofs_ = self.space_.n_dofs
        return self


class AdaptiveC0IPSolver(_FittedSolution, BaseEstimator):
    """Solve, estimate, mark, refine for ``max_refinements`` rounds.

    Fitted attributes: ``trace_`` (one row per iteration), ``space_``,
    ``solution_`` and ``report_`` on the final mesh, ``meshes_`` when
    ``keep_meshes`` is set, and ``error_`` holding the exception that
    stopped the loop early (else None).
    """

    def __init__(self, degree=3, theta=0.5, max_refinements=8, estimator="primal",
                 beta=None, tol=DEFAULT_TOL, keep_meshes=False):
        self.degree = degree
        self.theta = theta
        self.max_refinements = max_refinements
        self.estimator = estimator
        self.beta = beta
        self.tol = tol
        self.keep_meshes = keep_meshes

    def fit(self, mesh, problem, exact=None):
        check_degree(self.degree)
        check_theta(self.theta)
        check_beta(self.beta)
        spec = _with_beta(check_problem(problem), self.beta)
        cfg = AdaptConfig(self.degree, self.theta, self.max_refinements,
                          self.estimator, self.tol)
        err = None
        if exact is not None:
            beta = spec.beta_for(self.degree)
            navier = spec.bc == "navier"

            def err(space, u):
                return energy_error(space, u, exact, beta, interior_only=navier)

        result = run_adaptive(spec, check_mesh(mesh), cfg, err, self.keep_meshes)
        self.problem_ = spec
        self.trace_ = result.trace
        self.space_ = result.space
        self.solution_ = result.solution
        self.report_ = result.report
        self.meshes_ = result.meshes
        self.error_ = result.error
        return self
