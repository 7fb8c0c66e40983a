"""Error norms: against an exact solution and between nested solutions."""

import numpy as np

from .estimator import edge_jump_squares
from .exceptions import GeometryError
from .fe_basis import triangle_rule
from .mesh import locate_points
from .space import volume_quadrature

GRADED_LEVELS = 12


def _hessian_error_squares(space, u, exact, singular_points, levels=GRADED_LEVELS):
    m = space.degree
    coef = space.element_values(u)
    out = np.zeros(space.mesh.n_triangles)
    for el, pts, wts in volume_quadrature(space, min(2 * m + 4, 14), singular_points,
                                          levels=levels):
        ref = space.ref_tables(pts, (2,))
        for lo in range(0, len(el), 20000):
            k = el[lo:lo + 20000]
            hess_h = np.einsum("kqiab,ki->kqab", space.physical(ref, "hess", k), coef[k])
            x = space.amap.translation[k, None, :] + np.einsum(
                "kij,qj->kqi", space.amap.jacobian[k], pts)
            diff = exact.hessian(x[..., 0], x[..., 1]) - hess_h
            out[k] += np.einsum("kqab,kqab,q->k", diff, diff, wts) * space.detJ[k]
    return out


def h2_error(space, u, exact, singular_points=None, levels=GRADED_LEVELS):
    """Broken H2 seminorm of ``exact - u``.

    Triangles touching a singular point use a composite rule refined
    ``levels`` times toward that point.
    """
    pts = [tuple(exact.x0)] if singular_points is None else singular_points
    return float(np.sqrt(_hessian_error_squares(space, u, exact, pts, levels).sum()))


def energy_error(space, u, exact, beta, interior_only=False, singular_points=None,
                 levels=GRADED_LEVELS):
    """Broken H2 seminorm plus ``beta / h_e`` weighted normal-gradient jumps
    of the error.

    Exact-solution jumps vanish on interior edges; on boundary edges the
    jump is the one-sided normal derivative of the error.
    """
    pts = [tuple(exact.x0)] if singular_points is None else singular_points
    vol = _hessian_error_squares(space, u, exact, pts, levels).sum()
    grad, _, _ = edge_jump_squares(space, u)
    mesh = space.mesh
    inner = mesh.edge_triangles[:, 1] >= 0
    jumps = np.where(inner, grad, 0.0)
    if not interior_only:
        jumps = jumps + _boundary_normal_error(space, u, exact)
    return float(np.sqrt(vol + beta * np.sum(jumps / mesh.edge_lengths)))


def _boundary_normal_error(space, u, exact):
    ed = space.edge_data(space.degree + 3)
    out = np.zeros(len(ed.plus))
    be = np.nonzero(~ed.interior)[0]
    if len(be) == 0:
        return out
    coef = space.element_values(u)
    grad_h = np.einsum("kqia,ki->kqa", ed.traces(space, "plus", "grad", be),
                       coef[ed.plus[be]])
    x = ed.points[be]
    diff = np.einsum("kqa,ka->kq", exact.grad(x[..., 0], x[..., 1]) - grad_h, ed.normal[be])
    out[be] = np.einsum("kq,kq->k", ed.weights[be], diff * diff)
    return out


def coarse_ancestors(fine_mesh, coarse_mesh, tol=1e-9):
    """Coarse triangle containing each fine triangle.

    Raises :class:`GeometryError` when the meshes are not nested.
    """
    cent = fine_mesh.centroids()
    tri, _ = locate_points(coarse_mesh, cent)
    corners = fine_mesh.vertices[fine_mesh.triangles]          # (nt, 3, 2)
    for j in range(3):
        bary = coarse_mesh.barycentric(tri, corners[:, j])
        if bary.min() < -tol:
            raise GeometryError("fine mesh is not nested in the coarse mesh")
    return tri


def discrete_difference_error(space_fine, u_fine, space_coarse, u_coarse):
    """Broken H2 seminorm (on the fine mesh) of the difference of two
    discrete functions on nested meshes."""
    anc = coarse_ancestors(space_fine.mesh, space_coarse.mesh)
    m = max(space_fine.degree, space_coarse.degree)
    rule = triangle_rule(max(2 * m - 4, 1))
    nq = len(rule)
    cf = space_fine.element_values(u_fine)
    cc = space_coarse.element_values(u_coarse)
    total = 0.0
    ref_f = space_fine.ref_tables(rule.points, (2,))
    for lo in range(0, space_fine.mesh.n_triangles, 20000):
        k = np.arange(lo, min(lo + 20000, space_fine.mesh.n_triangles))
        hf = np.einsum("kqiab,ki->kqab", space_fine.physical(ref_f, "hess", k), cf[k])
        x = space_fine.amap(rule.points)[k]                     # (nk, nq, 2)
        a = anc[k]
        xi = np.einsum("kij,kqj->kqi", space_coarse.amap.inverse[a],
                       x - space_coarse.amap.translation[a, None, :])
        tabs = space_coarse.basis.eval(xi.reshape(-1, 2), 2).reshape(
            len(k), nq, space_coarse.n_basis, 2, 2)
        hc = np.einsum("kqiab,ki->kqab",
                       space_coarse.physical({2: tabs}, "hess", a), cc[a])
        d = hf - hc
        total += float(np.einsum("kqab,kqab,q,k->", d, d, rule.weights, space_fine.detJ[k]))
    return float(np.sqrt(total))


def rate(previous, current):
    """``log2(previous / current)``; NaN when either value is not positive."""
    if not (previous > 0 and current > 0):
        return float("nan")
    return float(np.log2(previous / current))


def energy_norm(space, v, beta, interior_only=False):
    """Discrete energy norm: broken H2 seminorm plus ``beta / h_e``
    weighted normal-gradient jumps of ``v``."""
    m = space.degree
    rule = triangle_rule(max(2 * m - 4, 1))
    ref = space.ref_tables(rule.points, (2,))
    coef = space.element_values(v)
    vol = 0.0
    for lo in range(0, space.mesh.n_triangles, 20000):
        k = np.arange(lo, min(lo + 20000, space.mesh.n_triangles))
        h = np.einsum("kqiab,ki->kqab", space.physical(ref, "hess", k), coef[k])
        vol += float(np.einsum("kqab,kqab,q,k->", h, h, rule.weights, space.detJ[k]))
    grad, _, _ = edge_jump_squares(space, v)
    if interior_only:
        grad = np.where(space.mesh.edge_triangles[:, 1] >= 0, grad, 0.0)
    return float(np.sqrt(vol + beta * np.sum(grad / space.mesh.edge_lengths)))
