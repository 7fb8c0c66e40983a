from math import factorial

import numpy as np
import pytest

from biharm.exceptions import ConfigurationError
from biharm.fe_basis import (AffineMap, basis_eval, lattice_nodes, push_forward,
                             reference_basis, segment_rule, triangle_rule)

DEGREES = (2, 3, 4)


def monomial_integral(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_reference_area():
    assert triangle_rule(1).weights.sum() == pytest.approx(0.5, abs=1e-15)


def test_x2y2():
    rule = triangle_rule(4)
    x, y = rule.points.T
    assert rule.weights @ (x ** 2 * y ** 2) == pytest.approx(1 / 180, abs=1e-15)


@pytest.mark.parametrize("degree", range(1, 15))
def test_triangle_rule_factorial_formula(degree):
    rule = triangle_rule(degree)
    x, y = rule.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = monomial_integral(a, b)
            got = rule.weights @ (x ** a * y ** b)
            assert abs(got - exact) <= 1e-13 * max(exact, 1e-300) + 1e-16


def test_triangle_rule_out_of_range():
    with pytest.raises(ConfigurationError):
        triangle_rule(15)


def test_segment_rules():
    assert segment_rule(1).weights.sum() == pytest.approx(1.0, abs=1e-15)
    r3 = segment_rule(5)
    assert len(r3) == 3
    assert r3.weights @ r3.points ** 4 == pytest.approx(0.2, abs=1e-15)
    r4 = segment_rule(7)
    assert len(r4) == 4
    assert abs(r4.weights @ r4.points ** 7 - 1 / 8) < 1e-15


@pytest.mark.parametrize("m", DEGREES)
def test_kronecker_and_partition_of_unity(m, rng):
    nodes = lattice_nodes(m)
    assert len(nodes) == {2: 6, 3: 10, 4: 15}[m]
    np.testing.assert_allclose(basis_eval(m, nodes, 0), np.eye(len(nodes)), atol=1e-12)
    pts = rng.dirichlet([1, 1, 1], 20)[:, 1:]
    np.testing.assert_allclose(basis_eval(m, pts, 0).sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(basis_eval(m, pts, 1).sum(axis=1), 0.0, atol=1e-11)


def test_unsupported_degree():
    with pytest.raises(ConfigurationError):
        reference_basis(5)


def _fd(m, order, pts, h):
    """Central differences of the order-1 tensor, one axis per step."""
    out = []
    for e in np.eye(2):
        hi = basis_eval(m, pts + h * e, order - 1)
        lo = basis_eval(m, pts - h * e, order - 1)
        out.append((hi - lo) / (2 * h))
    return np.stack(out, axis=-1)


@pytest.mark.parametrize("m", DEGREES)
@pytest.mark.parametrize("order", (1, 2, 3))
def test_derivatives_against_finite_differences(m, order, rng):
    pts = 0.1 + 0.6 * rng.dirichlet([1, 1, 1], 20)[:, 1:]
    exact = basis_eval(m, pts, order)
    approx = _fd(m, order, pts, 1e-5)
    assert np.abs(exact - approx).max() <= 1e-6


def test_p3_gradient_at_fixed_point():
    p = np.array([[0.3, 0.2]])
    approx = _fd(3, 1, p, 1e-5)
    assert np.abs(basis_eval(3, p, 1) - approx).max() <= 1e-7


@pytest.mark.parametrize("m", DEGREES)
def test_high_derivatives_vanish_by_degree(m, rng):
    pts = rng.dirichlet([1, 1, 1], 5)[:, 1:]
    if m == 2:
        assert np.abs(basis_eval(m, pts, 3)).max() < 1e-10
    if m <= 3:
        assert np.abs(basis_eval(m, pts, 4)).max() < 1e-9


def test_affine_map_vertices():
    verts = np.array([[[1.0, 2.0], [4.0, 2.5], [1.5, 5.0]]])
    amap = AffineMap(verts)
    np.testing.assert_allclose(amap(np.array([[0, 0], [1, 0], [0, 1]]))[0], verts[0],
                               atol=1e-14)
    assert amap.det[0] > 0


def test_push_forward_identity():
    amap = AffineMap(np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]]))
    pts = np.array([[0.2, 0.3]])
    for order in (1, 2, 3):
        ref = basis_eval(3, pts, order)
        np.testing.assert_allclose(push_forward(amap, ref, order)[0], ref, atol=1e-14)


def test_push_forward_scaling():
    s = 0.25
    amap = AffineMap(np.array([[[0.0, 0.0], [s, 0.0], [0.0, s]]]))
    ref = basis_eval(4, np.array([[0.1, 0.2]]), 2)
    np.testing.assert_allclose(push_forward(amap, ref, 2)[0], ref / s ** 2, rtol=1e-13)


def test_push_forward_gradient_fd(rng):
    verts = np.array([[[0.3, -0.2], [2.1, 0.4], [0.7, 1.9]]])
    amap = AffineMap(verts)
    xi = np.array([[0.25, 0.35]])
    x = amap(xi)[0]
    grad = push_forward(amap, basis_eval(3, xi, 1), 1)[0, 0]

    def values(p):
        return basis_eval(3, amap.inverse_map(np.asarray(p)[None])[0], 0)[0]

    h = 1e-6
    for a in range(2):
        e = np.zeros(2)
        e[a] = h
        fd = (values(x + e) - values(x - e)) / (2 * h)
        assert np.abs(fd - grad[:, a]).max() <= 1e-6
