"""Assembly of the C0 interior penalty systems.

Four boundary-condition variants share one bilinear form

    sum_K (Lap u, Lap v) + mu1 (grad u, grad v) + mu2 (u, v)
    - sum_e ({Lap u}[grad v] + {Lap v}[grad u]) + sum_e beta/h_e ([grad u], [grad v])

where the edge sums run over all edges except for ``navier`` (interior
edges only).  Jumps use the normal pointing out of the higher-indexed
neighbour.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigurationError
from .fe_basis import segment_rule
from .mesh import locate_points
from .space import volume_quadrature

VARIANTS = ("clamped", "dirichlet", "navier", "neumann")
CHUNK = 20000


def default_beta(m):
    return 10.0 * m * m


@dataclass
class ProblemSpec:
    """Operator coefficients, boundary variant, loads and data callbacks.

    Callbacks take coordinate arrays: ``f(x, y)``, ``g(x, y)``,
    ``g_B(x, y)`` and ``g_N(x, y, nx, ny)`` (prescribed normal derivative).
    ``beta=None`` selects ``10 m^2`` at assembly time.
    """

    bc: str = "clamped"
    mu1: float = 0.0
    mu2: float = 0.0
    point_loads: Sequence[Tuple[Tuple[float, float], float]] = ((0.0, 0.0), 1.0),
    f: Optional[Callable] = None
    g: Optional[Callable] = None
    g_N: Optional[Callable] = None
    g_B: Optional[Callable] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.bc not in VARIANTS:
            raise ConfigurationError(f"unknown boundary variant {self.bc!r}")
        if self.mu1 < 0 or self.mu2 < 0:
            raise ConfigurationError("mu1 and mu2 must be non-negative")
        if self.beta is not None and not self.beta > 0:
            raise ConfigurationError("beta must be positive")
        self.point_loads = tuple((tuple(map(float, p)), float(w))
                                 for p, w in self.point_loads)
        if self.bc == "neumann":
            total = sum(w for _, w in self.point_loads)
            if abs(total) > 1e-12:
                raise ConfigurationError(
                    "neumann variant needs point-load weights summing to zero")
        if self.bc == "dirichlet" and (self.g is None or self.g_N is None):
            raise ConfigurationError("dirichlet variant needs g and g_N")
        if self.bc == "navier" and (self.g is None or self.g_B is None):
            raise ConfigurationError("navier variant needs g and g_B")

    def beta_for(self, m):
        return default_beta(m) if self.beta is None else float(self.beta)

    @property
    def load_points(self):
        return [p for p, _ in self.point_loads]


@dataclass
class LinearSystem:
    """Sparse matrix, right-hand side and constraint bookkeeping."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    constrained_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    augmented: bool = False

    @property
    def spd_expected(self):
        return not self.augmented


def _penalty_edges(space, bc):
    ed = space.edge_data(space.degree + 1)
    if bc == "navier":
        return ed, np.nonzero(ed.interior)[0]
    return ed, np.arange(len(ed.plus))


def _coo(rows, cols, vals, n):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))


def assemble_bilinear(space, spec):
    """Global stiffness matrix of the interior penalty form (CSR)."""
    m = space.degree
    beta = spec.beta_for(m)
    n = space.n_dofs
    mats = []

    from .fe_basis import triangle_rule
    rule = triangle_rule(2 * m + 2)
    ref = space.ref_tables(rule.points, (0, 1, 2))
    nt = space.mesh.n_triangles
    for lo in range(0, nt, CHUNK):
        el = np.arange(lo, min(lo + CHUNK, nt))
        w = rule.weights[None, :] * space.detJ[el, None]
        lap = space.physical(ref, "lap", el)
        A = np.einsum("kq,kqi,kqj->kij", w, lap, lap)
        if spec.mu1:
            grad = space.physical(ref, "grad", el)
            A += spec.mu1 * np.einsum("kq,kqia,kqja->kij", w, grad, grad)
        if spec.mu2:
            val = ref[0]
            A += spec.mu2 * np.einsum("kq,qi,qj->kij", w, val, val)
        d = space.cell_dofs[el]
        mats.append(_coo(np.repeat(d[:, :, None], d.shape[1], 2),
                         np.repeat(d[:, None, :], d.shape[1], 1), A, n))

    ed, edges = _penalty_edges(space, spec.bc)
    for lo in range(0, len(edges), CHUNK):
        sel = edges[lo:lo + CHUNK]
        K, dofs = edge_matrices(space, ed, sel, beta)
        nb = dofs.shape[1]
        mats.append(_coo(np.repeat(dofs[:, :, None], nb, 2),
                         np.repeat(dofs[:, None, :], nb, 1), K, n))
    A = sum(M.tocsr() for M in mats)
    A = ((A + A.T) * 0.5).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def edge_jump_and_average(space, ed, sel):
    """Normal-gradient jump and Laplacian average of every basis function.

    Returns ``jump`` and ``avg`` of shape (n_sel, nq, 2 nb) over the
    concatenated dofs of K+ and K- (K- columns are zero on the boundary),
    together with those dofs.
    """
    nb = space.n_basis
    normal = ed.normal[sel]
    interior = ed.interior[sel]
    g_p = ed.traces(space, "plus", "grad", sel)
    l_p = ed.traces(space, "plus", "lap", sel)
    jump = np.zeros((len(sel), len(ed.t), 2 * nb))
    avg = np.zeros_like(jump)
    jump[:, :, :nb] = np.einsum("kqia,ka->kqi", g_p, normal)
    avg[:, :, :nb] = l_p
    dofs = np.empty((len(sel), 2 * nb), dtype=np.int64)
    dofs[:, :nb] = space.cell_dofs[ed.plus[sel]]
    dofs[:, nb:] = dofs[:, :nb]
    isel = np.nonzero(interior)[0]
    if len(isel):
        esel = sel[isel]
        g_m = ed.traces(space, "minus", "grad", esel)
        l_m = ed.traces(space, "minus", "lap", esel)
        jump[isel, :, nb:] = -np.einsum("kqia,ka->kqi", g_m, normal[isel])
        avg[isel, :, :nb] *= 0.5
        avg[isel, :, nb:] = 0.5 * l_m
        dofs[isel, nb:] = space.cell_dofs[ed.minus[esel]]
    return jump, avg, dofs


def edge_matrices(space, ed, sel, beta):
    """Local consistency + penalty matrices on the selected edges."""
    jump, avg, dofs = edge_jump_and_average(space, ed, sel)
    w = ed.weights[sel]
    C = np.einsum("kq,kqi,kqj->kij", w, avg, jump)
    P = np.einsum("kq,kqi,kqj->kij", w / ed.length[sel, None], jump, jump)
    K = -(C + np.swapaxes(C, 1, 2)) + beta * P
    return K, dofs


# ----------------------------------------------------------------------
# right-hand sides

def point_load_vector(space, points, weights):
    """Sum of ``weight * phi_i(point)`` evaluated in the located triangle."""
    b = np.zeros(space.n_dofs)
    if len(points) == 0:
        return b
    tri, bary = locate_points(space.mesh, np.asarray(points, dtype=float))
    vals = space.basis.eval(bary[:, 1:], 0)
    for t, v, w in zip(tri, vals, weights):
        np.add.at(b, space.cell_dofs[t], w * v)
    return b


def assemble_point_loads(space, spec):
    return point_load_vector(space, [p for p, _ in spec.point_loads],
                             [w for _, w in spec.point_loads])


def assemble_source_and_boundary(space, spec):
    """Volume source and variant-specific boundary data terms."""
    m = space.degree
    b = np.zeros(space.n_dofs)
    if spec.f is not None:
        for el, pts, wts in volume_quadrature(space, 2 * m + 2, spec.load_points):
            phys = space.amap.translation[el, None, :] + np.einsum(
                "kij,qj->kqi", space.amap.jacobian[el], pts)
            fv = np.asarray(spec.f(phys[..., 0], phys[..., 1]), dtype=float)
            vals = space.basis.eval(pts, 0)
            loc = np.einsum("kq,q,qi->ki", fv * space.detJ[el, None], wts, vals)
            np.add.at(b, space.cell_dofs[el], loc)
    if spec.bc in ("dirichlet", "navier"):
        ed = space.edge_data(m + 2)
        be = np.nonzero(~ed.interior)[0]
        if len(be) == 0:
            return b
        x = ed.points[be]
        n = ed.normal[be]
        w = ed.weights[be]
        grad = ed.traces(space, "plus", "grad", be)
        dn = np.einsum("kqia,ka->kqi", grad, n)
        dofs = space.cell_dofs[ed.plus[be]]
        if spec.bc == "dirichlet":
            gn = np.asarray(spec.g_N(x[..., 0], x[..., 1],
                                     n[:, None, 0] + 0 * x[..., 0],
                                     n[:, None, 1] + 0 * x[..., 1]), dtype=float)
            lap = ed.traces(space, "plus", "lap", be)
            beta = spec.beta_for(m)
            loc = (-np.einsum("kq,kq,kqi->ki", w, gn, lap)
                   + beta * np.einsum("kq,kq,kqi->ki", w / ed.length[be, None], gn, dn))
        else:
            gb = np.asarray(spec.g_B(x[..., 0], x[..., 1]), dtype=float) * np.ones(x.shape[:2])
            loc = np.einsum("kq,kq,kqi->ki", w, gb, dn)
        np.add.at(b, dofs, loc)
    return b


def assemble_rhs(space, spec):
    return assemble_point_loads(space, spec) + assemble_source_and_boundary(space, spec)


# ----------------------------------------------------------------------
# constraints

def boundary_values(space, spec):
    """Prescribed values on boundary dofs (zero for ``clamped``)."""
    dofs = np.nonzero(space.boundary_dofs)[0]
    if spec.bc == "clamped" or spec.g is None:
        return dofs, np.zeros(len(dofs))
    x = space.dof_coords[dofs]
    return dofs, np.asarray(spec.g(x[:, 0], x[:, 1]), dtype=float) * np.ones(len(dofs))


def apply_dirichlet_values(space, spec, system):
    """Fix boundary value dofs by symmetric elimination.

    Known columns move to the right-hand side; constrained rows and
    columns are replaced by the identity.
    """
    if spec.bc == "neumann":
        raise ConfigurationError("neumann variant has no essential boundary values")
    dofs, vals = boundary_values(space, spec)
    n = system.matrix.shape[0]
    g = np.zeros(n)
    g[dofs] = vals
    free = np.ones(n)
    free[dofs] = 0.0
    A = system.matrix
    rhs = free * (system.rhs - A @ g) + g
    Df = sp.diags(free)
    A = (Df @ A @ Df + sp.diags(1.0 - free)).tocsr()
    A.eliminate_zeros()
    return LinearSystem(A, rhs, dofs, vals, augmented=False)


def mean_vector(space):
    """c_i = integral of phi_i over the domain."""
    from .fe_basis import triangle_rule
    rule = triangle_rule(space.degree)
    loc = (space.detJ[:, None] * (rule.weights @ space.basis.eval(rule.points, 0))[None, :])
    c = np.zeros(space.n_dofs)
    np.add.at(c, space.cell_dofs, loc)
    return c


def apply_zero_mean(space, system):
    """Augment with a Lagrange multiplier enforcing a zero mean value."""
    c = mean_vector(space)
    A = sp.bmat([[system.matrix, sp.csr_matrix(c[:, None])],
                 [sp.csr_matrix(c[None, :]), None]], format="csr")
    rhs = np.concatenate([system.rhs, [0.0]])
    return LinearSystem(A, rhs, augmented=True)


def assemble_system(space, spec, rhs=None):
    """Matrix, right-hand side and constraints for ``spec.bc``."""
    A = assemble_bilinear(space, spec)
    b = assemble_rhs(space, spec) if rhs is None else rhs
    system = LinearSystem(A, b)
    if spec.bc == "neumann":
        return apply_zero_mean(space, system)
    return apply_dirichlet_values(space, spec, system)
