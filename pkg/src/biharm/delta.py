"""Element-local polynomial projection of a point evaluation.

A Dirac load at ``x0`` is replaced by the polynomial ``d`` on the
located triangle that reproduces point values of every polynomial of the
space degree: ``int_K d v = v(x0)``.  Outside that triangle it vanishes,
so it may be discontinuous across the triangle boundary.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fe_basis import triangle_rule
from .mesh import locate_point


@dataclass(frozen=True)
class ProjectedDelta:
    element: int
    coefficients: np.ndarray
    point: tuple
    weight: float = 1.0


def local_mass_matrix(space, element):
    rule = triangle_rule(2 * space.degree)
    phi = space.basis.eval(rule.points, 0)
    return space.detJ[element] * np.einsum("q,qi,qj->ij", rule.weights, phi, phi)


def project_delta(space, x0, weight=1.0):
    """Coefficients of ``weight * delta_x0`` in the local Lagrange basis."""
    tri, bary, _ = locate_point(space.mesh, x0)
    phi0 = space.basis.eval(bary[None, 1:], 0)[0]
    coef = cho_solve(cho_factor(local_mass_matrix(space, tri)), weight * phi0)
    return ProjectedDelta(int(tri), coef, tuple(map(float, x0)), float(weight))


def delta_values(space, d, ref_points):
    """Values of the projected delta at reference points of its element."""
    return space.basis.eval(ref_points, 0) @ d.coefficients


def moments(space, d):
    """``int_K d phi_i`` for the local basis functions of the element."""
    return local_mass_matrix(space, d.element) @ d.coefficients


def assemble_regularized_rhs(space, deltas):
    """Load vector ``int delta_h phi_i`` for one or several projections."""
    if isinstance(deltas, ProjectedDelta):
        deltas = [deltas]
    b = np.zeros(space.n_dofs)
    for d in deltas:
        np.add.at(b, space.cell_dofs[d.element], moments(space, d))
    return b
