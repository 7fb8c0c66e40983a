import numpy as np
import pytest
import scipy.sparse as sp

from biharm.assembly import LinearSystem, ProblemSpec, assemble_system
from biharm.exceptions import SolverError
from biharm.linsolve import extended_residual, pcg, rounding_floor, solve
from biharm.mesh import square_mesh
from biharm.space import FeSpace


def test_identity():
    b = np.array([1.0, -2.0, 3.5])
    rep = solve(LinearSystem(sp.identity(3, format="csr"), b))
    np.testing.assert_array_equal(rep.solution, b)
    assert rep.residual == 0.0


def test_two_by_two():
    A = sp.csr_matrix([[4.0, 1.0], [1.0, 3.0]])
    rep = solve(LinearSystem(A, np.array([1.0, 2.0])))
    np.testing.assert_allclose(rep.solution, [1 / 11, 7 / 11], rtol=1e-14)


@pytest.mark.parametrize("method", ["cholesky", "ilu", "sgs"])
def test_methods_agree(method):
    space = FeSpace(square_mesh(0, 1, 2), 2)
    sys_ = assemble_system(space, ProblemSpec(point_loads=[((0.3, 0.4), 1.0)]))
    ref = solve(sys_).solution
    rep = solve(sys_, method=method)
    assert rep.residual <= max(1e-10, rep.target)
    np.testing.assert_allclose(rep.solution, ref, atol=1e-8 * np.abs(ref).max())


def test_small_beta_is_diagnosed():
    space = FeSpace(square_mesh(0, 1, 2), 2)
    sys_ = assemble_system(space, ProblemSpec(point_loads=[((0.3, 0.4), 1.0)], beta=0.01))
    A = sys_.matrix.toarray()
    assert np.linalg.eigvalsh(A).min() < 0
    with pytest.raises(SolverError, match="beta"):
        solve(sys_)


def test_bad_tolerance():
    with pytest.raises(ValueError):
        solve(LinearSystem(sp.identity(2, format="csr"), np.ones(2)), tol=1e-3)


def test_deterministic():
    space = FeSpace(square_mesh(0, 1, 3), 3)
    sys_ = assemble_system(space, ProblemSpec(point_loads=[((0.3, 0.4), 1.0)]))
    a = solve(sys_).solution
    b = solve(sys_).solution
    np.testing.assert_array_equal(a, b)


def test_pcg_breakdown_on_indefinite():
    A = sp.csr_matrix(np.diag([1.0, -1.0]))
    with pytest.raises(SolverError):
        pcg(A, np.array([1.0, 1.0]), lambda r: r)


def test_extended_residual_and_floor():
    A = sp.csr_matrix([[1e8, 1.0], [1.0, 1e-8]])
    x = np.array([1.0, -3.0])
    b = A @ x
    r = extended_residual(A, x, b)
    assert np.abs(r).max() <= 1e-7
    assert rounding_floor(A, x, b) > 0
    assert rounding_floor(A, x, np.zeros(2)) == 0.0
