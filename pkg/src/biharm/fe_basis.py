"""Lagrange bases on the reference triangle, quadrature rules, affine maps.

The reference triangle has vertices (0,0), (1,0), (0,1).  Shape functions
are stored as monomial coefficient vectors so every derivative is exact.
"""

from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi

from .exceptions import ConfigurationError

SUPPORTED_DEGREES = (2, 3, 4)
MAX_TRIANGLE_DEGREE = 14

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def lattice_nodes(m):
    """Equispaced nodes of degree ``m`` in local order.

    Order: the three vertices, then the ``m-1`` nodes of each edge
    (edge ``k`` is opposite vertex ``k`` and runs from vertex ``k+1`` to
    vertex ``k+2``), then interior nodes row by row.
    """
    verts = [REF_VERTICES[k] for k in range(3)]
    edges = []
    for k in range(3):
        a = REF_VERTICES[(k + 1) % 3]
        b = REF_VERTICES[(k + 2) % 3]
        for s in range(1, m):
            edges.append(a + (b - a) * s / m)
    interior = [np.array([i / m, j / m])
                for j in range(1, m) for i in range(1, m - j)]
    return np.array(verts + edges + interior)


def _exponents(m):
    return [(a, d - a) for d in range(m + 1) for a in range(d, -1, -1)]


def _derivative_multiindices(order):
    """All ordered index tuples over {0, 1} of the given length."""
    if order == 0:
        return [()]
    return [idx + (c,) for idx in _derivative_multiindices(order - 1) for c in (0, 1)]


class ReferenceBasis:
    """Nodal Lagrange basis of degree ``m`` on the reference triangle.

    Parameters
    ----------
    m : int
        Polynomial degree, one of 2, 3, 4.
    """

    def __init__(self, m):
        if m not in SUPPORTED_DEGREES:
            raise ConfigurationError(
                f"unsupported degree {m!r}; expected one of {SUPPORTED_DEGREES}")
        self.degree = m
        self.nodes = lattice_nodes(m)
        self.n_basis = len(self.nodes)
        self.exponents = np.array(_exponents(m))
        vander = self._monomials(self.nodes, (0, 0))
        # coeffs[k, i]: coefficient of monomial k in shape function i
        self.coeffs = np.linalg.solve(vander, np.eye(self.n_basis))

    def _monomials(self, pts, deriv):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0:1], pts[:, 1:2]
        p, q = deriv
        a, b = self.exponents[:, 0], self.exponents[:, 1]
        ok = (a >= p) & (b >= q)
        ea = np.where(ok, a - p, 0)
        eb = np.where(ok, b - q, 0)
        scale = np.array([
            (factorial(ai) // factorial(ai - p) if ai >= p else 0)
            * (factorial(bi) // factorial(bi - q) if bi >= q else 0)
            for ai, bi in zip(a, b)], dtype=float)
        return scale * x ** ea * y ** eb

    def partial(self, pts, p, q):
        """Values of d^(p+q) phi_i / dx^p dy^q, shape (npts, n_basis)."""
        return self._monomials(pts, (p, q)) @ self.coeffs

    def eval(self, pts, order=0):
        """Full derivative tensor of the requested order.

        Returns an array of shape ``(npts, n_basis) + (2,) * order``.
        """
        if not 0 <= order <= 4:
            raise ConfigurationError(f"derivative order {order} not in 0..4")
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty((len(pts), self.n_basis) + (2,) * order)
        cache = {}
        for idx in _derivative_multiindices(order):
            q = sum(idx)
            key = (order - q, q)
            if key not in cache:
                cache[key] = self.partial(pts, *key)
            out[(slice(None), slice(None)) + idx] = cache[key]
        return out


@lru_cache(maxsize=None)
def reference_basis(m):
    return ReferenceBasis(m)


def basis_eval(m, p, order=0):
    """Derivative tensors of all shape functions of degree ``m`` at ``p``."""
    return reference_basis(m).eval(p, order)


class QuadratureRule:
    """Points and weights on a reference domain.

    ``measure`` is 1/2 for the triangle and 1 for the unit segment.
    """

    def __init__(self, points, weights, exact_degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.exact_degree = exact_degree

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return np.tensordot(values, self.weights, axes=([-1], [0]))


@lru_cache(maxsize=None)
def triangle_rule(exact_degree):
    """Collapsed Gauss-Jacobi rule on the reference triangle.

    Exact for every polynomial of total degree ``exact_degree``.
    """
    if not 1 <= exact_degree <= MAX_TRIANGLE_DEGREE:
        raise ConfigurationError(
            f"triangle rule degree {exact_degree} outside 1..{MAX_TRIANGLE_DEGREE}")
    n = (exact_degree + 2) // 2
    s, ws = roots_jacobi(n, 1.0, 0.0)   # weight (1 - s) on [-1, 1]
    t, wt = np.polynomial.legendre.leggauss(n)
    x = (1.0 + s) / 2.0
    u = (1.0 + t) / 2.0
    X, U = np.meshgrid(x, u, indexing="ij")
    W = np.outer(ws / 4.0, wt / 2.0)
    pts = np.column_stack([X.ravel(), ((1.0 - X) * U).ravel()])
    return QuadratureRule(pts, W.ravel(), exact_degree)


@lru_cache(maxsize=None)
def segment_rule(exact_degree):
    """Gauss-Legendre rule on [0, 1] exact to ``exact_degree``."""
    if exact_degree < 0:
        raise ConfigurationError("segment rule degree must be >= 0")
    n = exact_degree // 2 + 1
    t, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule((t + 1.0) / 2.0, w / 2.0, exact_degree)


class AffineMap:
    """Affine element map x = v0 + J xi, batched over elements.

    ``vertices`` has shape (..., 3, 2).
    """

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        self.translation = v[..., 0, :]
        self.jacobian = np.stack([v[..., 1, :] - v[..., 0, :],
                                  v[..., 2, :] - v[..., 0, :]], axis=-1)
        self.det = (self.jacobian[..., 0, 0] * self.jacobian[..., 1, 1]
                    - self.jacobian[..., 0, 1] * self.jacobian[..., 1, 0])
        if np.any(self.det <= 0):
            raise ValueError("affine map with non-positive determinant")
        self.inverse = np.linalg.inv(self.jacobian)
        self.inverse_transpose = np.swapaxes(self.inverse, -1, -2)

    def __call__(self, xi):
        """Map reference points (npts, 2) to physical points (..., npts, 2)."""
        xi = np.asarray(xi, dtype=float)
        return self.translation[..., None, :] + np.einsum(
            "...ij,pj->...pi", self.jacobian, xi)

    def inverse_map(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...ij,...pj->...pi", self.inverse,
                         x - self.translation[..., None, :])


_REF = "abcd"
_PHYS = "wxyz"


def push_forward(amap, tensors, order):
    """Chain rule for a constant Jacobian.

    ``tensors`` carries ``order`` trailing reference-derivative axes of
    length 2.  For a batched map (leading element axis on the Jacobian)
    the result gains that element axis in front.
    """
    tensors = np.asarray(tensors)
    if order == 0:
        return tensors.copy()
    G = amap.inverse
    ref, phys = _REF[:order], _PHYS[:order]
    if G.ndim == 2:
        factors = ",".join(f"{r}{p}" for r, p in zip(ref, phys))
        return np.einsum(f"...{ref},{factors}->...{phys}", tensors, *([G] * order))
    factors = ",".join(f"k{r}{p}" for r, p in zip(ref, phys))
    return np.einsum(f"...{ref},{factors}->k...{phys}", tensors, *([G] * order))


def metric(amap):
    """G G^T, the contraction used for physical Laplacians."""
    G = amap.inverse
    return G @ np.swapaxes(G, -1, -2)
