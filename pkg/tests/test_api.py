import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from biharm import AdaptiveC0IPSolver, C0IPSolver, ProblemSpec, get_preset, square_mesh
from biharm.exceptions import ConfigurationError


def test_params_roundtrip():
    est = C0IPSolver(degree=4, beta=200.0)
    assert est.get_params() == {"degree": 4, "beta": 200.0, "regularized": False,
                                "tol": 1e-10}
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    est.set_params(degree=2)
    assert est.degree == 2


def test_fit_predict():
    spec = ProblemSpec(point_loads=[((0.5, 0.5), 1.0)])
    est = C0IPSolver(degree=3).fit(square_mesh(0, 1, 3), spec)
    vals = est.predict([[0.5, 0.5], [0.25, 0.5], [0.0, 0.3]])
    assert vals[0] > vals[1] > 0
    assert vals[2] == pytest.approx(0.0, abs=1e-14)
    assert est.estimate_ > 0
    assert est.n_dofs_ == est.space_.n_dofs


def test_not_fitted():
    with pytest.raises(NotFittedError):
        C0IPSolver().predict([[0.0, 0.0]])


def test_validation_errors():
    spec = ProblemSpec(point_loads=[((0.5, 0.5), 1.0)])
    with pytest.raises(ConfigurationError):
        C0IPSolver(degree=5).fit(square_mesh(0, 1, 1), spec)
    with pytest.raises(ConfigurationError):
        C0IPSolver(beta=-2.0).fit(square_mesh(0, 1, 1), spec)
    with pytest.raises(ConfigurationError):
        C0IPSolver().fit("mesh", spec)
    est = C0IPSolver(degree=2).fit(square_mesh(0, 1, 1), spec)
    with pytest.raises(ConfigurationError):
        est.predict([[0.0, 0.0, 0.0]])
    with pytest.raises(ConfigurationError):
        AdaptiveC0IPSolver(theta=0).fit(square_mesh(0, 1, 1), spec)


def test_primal_and_regularized_estimators_agree_on_solution():
    preset = get_preset("square-dirichlet", case=3)
    mesh = preset.initial_mesh()
    a = C0IPSolver(degree=3).fit(mesh, preset.spec())
    b = C0IPSolver(degree=3, regularized=True).fit(mesh, preset.spec())
    np.testing.assert_allclose(a.solution_, b.solution_, atol=1e-10)
    assert b.estimate_ >= a.estimate_


def test_adaptive_fit():
    preset = get_preset("square-dirichlet", case=3)
    est = AdaptiveC0IPSolver(degree=3, max_refinements=4)
    est.fit(preset.initial_mesh(), preset.spec(), exact=preset.exact)
    assert len(est.trace_) == 5
    assert est.error_ is None
    assert est.energy_error(preset.exact) == pytest.approx(est.trace_[-1].energy_error)
    assert np.isfinite(est.predict([[0.0, 0.0]])[0])
