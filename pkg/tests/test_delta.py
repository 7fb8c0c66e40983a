import numpy as np
import pytest

from biharm.assembly import ProblemSpec, assemble_point_loads
from biharm.delta import assemble_regularized_rhs, local_mass_matrix, moments, project_delta
from biharm.fe_basis import triangle_rule
from biharm.mesh import square_mesh, uniform_refine
from biharm.space import FeSpace

POINT = (0.3712, 0.6451)


def _exact_moments(space, d, funcs):
    """Integrals of d * f over its triangle with a rule exact for the product."""
    rule = triangle_rule(2 * space.degree)
    x = space.amap(rule.points)[d.element]
    dv = space.basis.eval(rule.points, 0) @ d.coefficients
    return [space.detJ[d.element] * rule.weights @ (dv * f(x[:, 0], x[:, 1])) for f in funcs]


@pytest.mark.parametrize("m", [2, 3, 4])
def test_moments_reproduce_point_values(m):
    space = FeSpace(square_mesh(0, 1, 2), m)
    d = project_delta(space, POINT)
    tri = d.element
    bary = space.mesh.barycentric([tri], np.array([POINT]))[0]
    phi0 = space.basis.eval(bary[None, 1:], 0)[0]
    assert np.abs(moments(space, d) - phi0).max() <= 1e-12
    zeroth, first_x, first_y = _exact_moments(
        space, d, [lambda x, y: 1 + 0 * x, lambda x, y: x, lambda x, y: y])
    assert zeroth == pytest.approx(1.0, abs=1e-12)
    assert first_x == pytest.approx(POINT[0], abs=1e-12)
    assert first_y == pytest.approx(POINT[1], abs=1e-12)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_regularized_rhs_equals_point_load_rhs(m):
    space = FeSpace(square_mesh(0, 1, 3), m)
    d = project_delta(space, POINT, 2.0)
    b_reg = assemble_regularized_rhs(space, d)
    b_pt = assemble_point_loads(space, ProblemSpec(point_loads=[(POINT, 2.0)]))
    assert np.abs(b_reg - b_pt).max() <= 1e-12
    assert b_reg.sum() == pytest.approx(2.0, abs=1e-12)
    off = np.setdiff1d(np.arange(space.n_dofs), space.cell_dofs[d.element])
    assert np.all(b_reg[off] == 0)


def test_mass_matrix_is_spd():
    space = FeSpace(square_mesh(0, 1, 1), 4)
    M = local_mass_matrix(space, 0)
    np.testing.assert_allclose(M, M.T, rtol=0, atol=1e-15 * np.abs(M).max())
    assert np.linalg.eigvalsh(M).min() > 0
    assert M.sum() == pytest.approx(space.mesh.areas[0], rel=1e-13)


def test_l2_norm_scales_like_inverse_h():
    # keep the load at a fixed barycentric position inside nested triangles
    mesh = square_mesh(0, 1, 1)
    p = (0.23, 0.11)
    norms = []
    for _ in range(4):
        space = FeSpace(mesh, 3)
        d = project_delta(space, p)
        M = local_mass_matrix(space, d.element)
        norms.append(np.sqrt(d.coefficients @ M @ d.coefficients))
        mesh = uniform_refine(mesh)
        p = (p[0] / 2, p[1] / 2)
    # the square corner at the origin is a fixed point of the halving
    ratios = np.array(norms[1:]) / np.array(norms[:-1])
    np.testing.assert_allclose(ratios, 2.0, atol=0.01)
