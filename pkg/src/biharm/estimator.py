"""Residual a posteriori error indicators for the interior penalty scheme.

Every indicator is a sum of squared contributions attributed to
triangles.  Edge contributions are split between the two neighbours of an
interior edge (weight 1/2 each) and given fully to the single neighbour
of a boundary edge.  For the operator with lower-order terms the gradient
jump and boundary data terms carry the extra factor
``1 + mu1 h_e^2 + mu2 h_e^4``.

Point loads that do not sit on a Lagrange node contribute ``h_K^2`` of
the containing triangle twice: once inside that triangle's indicator and
once more as a free-standing global term.  The regularized indicator
always includes both.
"""

from dataclasses import dataclass, field

import numpy as np

from .delta import delta_values, project_delta
from .exceptions import ConfigurationError
from .mesh import locate_point
from .space import volume_quadrature

CHUNK = 20000

COMPONENTS = ("residual", "gradient_jump", "laplacian_jump", "flux_jump",
              "normal_derivative", "boundary_value", "boundary_laplacian")

# gradient jumps on boundary edges are dropped for navier data: the exact
# solution has a nonzero normal derivative there, so the term cannot vanish
NAVIER_BOUNDARY_GRADIENT = False


@dataclass
class EstimatorReport:
    """Per-triangle squared contributions and the global value.

    ``components`` maps a component name to an array of squared,
    already weighted contributions per triangle.  ``point_terms`` holds
    the ``h_K^2`` additions attributed to triangles and
    ``global_point_terms`` the free-standing copies.
    """

    variant: str
    components: dict
    point_terms: np.ndarray
    global_point_terms: float = 0.0
    point_elements: tuple = field(default_factory=tuple)

    @property
    def local_squared(self):
        return sum(self.components.values()) + self.point_terms

    @property
    def local(self):
        return np.sqrt(self.local_squared)

    @property
    def total(self):
        return float(np.sqrt(self.local_squared.sum() + self.global_point_terms))

    @property
    def n_elements(self):
        return len(self.point_terms)

    def component_total(self, name):
        return float(np.sqrt(self.components[name].sum()))


# ----------------------------------------------------------------------
# building blocks

def element_residual_squares(space, u, spec, deltas=(), include_source=True):
    """``||source - L u_h||^2`` on every triangle (unscaled).

    ``source`` is ``f`` (when given and ``include_source``) plus any
    projected deltas.  Triangles touching a point load use a graded rule
    since ``f`` may be singular there.
    """
    m = space.degree
    nt = space.mesh.n_triangles
    out = np.zeros(nt)
    coef = space.element_values(u)
    f = spec.f if include_source else None
    lower = spec.mu1 or spec.mu2
    if f is None and not lower and m < 4 and not deltas:
        return out
    sing = spec.load_points if f is not None else ()
    by_elem = {d.element: d for d in deltas}
    for el_all, pts, wts in volume_quadrature(space, 2 * m + 2, sing):
        ref = space.ref_tables(pts, (0, 1, 2, 4) if lower else (4,))
        for lo in range(0, len(el_all), CHUNK):
            el = el_all[lo:lo + CHUNK]
            c = coef[el]
            r = -np.einsum("kqi,ki->kq", space.physical(ref, "bilap", el), c)
            if spec.mu1:
                r += spec.mu1 * np.einsum("kqi,ki->kq", space.physical(ref, "lap", el), c)
            if spec.mu2:
                r -= spec.mu2 * np.einsum("qi,ki->kq", ref[0], c)
            if f is not None:
                x = space.amap.translation[el, None, :] + np.einsum(
                    "kij,qj->kqi", space.amap.jacobian[el], pts)
                r += np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
            for j in np.nonzero(np.isin(el, list(by_elem)))[0]:
                r[j] += delta_values(space, by_elem[int(el[j])], pts)
            out[el] += np.einsum("kq,q->k", r * r, wts) * space.detJ[el]
    return out


def _coef_traces(space, ed, side, kind, sel, coef):
    tris = (ed.plus if side == "plus" else ed.minus)[sel]
    vals = ed.traces(space, side, kind, sel)
    return np.einsum("kqi...,ki->kq...", vals, coef[tris])


def edge_jump_squares(space, u, n_points=None):
    """Squared L2 norms on each edge of the jumps of normal gradient,
    Laplacian and normal gradient of the Laplacian of ``u``.

    On boundary edges the one-sided traces are used.
    """
    m = space.degree
    ed = space.edge_data(n_points or m + 1)
    coef = space.element_values(u)
    ne = len(ed.plus)
    grad = np.zeros(ne)
    lap = np.zeros(ne)
    flux = np.zeros(ne)
    for lo in range(0, ne, CHUNK):
        sel = np.arange(lo, min(lo + CHUNK, ne))
        n = ed.normal[sel]
        g = np.einsum("kqa,ka->kq", _coef_traces(space, ed, "plus", "grad", sel, coef), n)
        l = _coef_traces(space, ed, "plus", "lap", sel, coef)
        q = np.einsum("kqa,ka->kq", _coef_traces(space, ed, "plus", "gradlap", sel, coef), n)
        inner = np.nonzero(ed.interior[sel])[0]
        if len(inner):
            isel = sel[inner]
            ni = ed.normal[isel]
            g[inner] -= np.einsum("kqa,ka->kq",
                                  _coef_traces(space, ed, "minus", "grad", isel, coef), ni)
            l[inner] -= _coef_traces(space, ed, "minus", "lap", isel, coef)
            q[inner] -= np.einsum("kqa,ka->kq",
                                  _coef_traces(space, ed, "minus", "gradlap", isel, coef), ni)
        w = ed.weights[sel]
        grad[sel] = np.einsum("kq,kq->k", w, g * g)
        lap[sel] = np.einsum("kq,kq->k", w, l * l)
        flux[sel] = np.einsum("kq,kq->k", w, q * q)
    return grad, lap, flux


def boundary_data_squares(space, u, spec):
    """Squared boundary misfits ``||g_N - du/dn||``, ``||g - u||`` and
    ``||g_B - Lap u||`` on every edge (zero on interior edges)."""
    m = space.degree
    ed = space.edge_data(m + 3)
    ne = len(ed.plus)
    dn_sq, val_sq, lap_sq = np.zeros(ne), np.zeros(ne), np.zeros(ne)
    be = np.nonzero(~ed.interior)[0]
    if len(be) == 0:
        return dn_sq, val_sq, lap_sq
    coef = space.element_values(u)
    x = ed.points[be]
    n = ed.normal[be]
    w = ed.weights[be]
    shape = x.shape[:2]
    if spec.g is not None:
        uh = _coef_traces(space, ed, "plus", "value", be, coef)
        r = np.asarray(spec.g(x[..., 0], x[..., 1]), dtype=float) * np.ones(shape) - uh
        val_sq[be] = np.einsum("kq,kq->k", w, r * r)
    if spec.g_N is not None:
        dn = np.einsum("kqa,ka->kq", _coef_traces(space, ed, "plus", "grad", be, coef), n)
        nx = np.broadcast_to(n[:, None, 0], shape)
        ny = np.broadcast_to(n[:, None, 1], shape)
        r = np.asarray(spec.g_N(x[..., 0], x[..., 1], nx, ny), dtype=float) * np.ones(shape) - dn
        dn_sq[be] = np.einsum("kq,kq->k", w, r * r)
    if spec.g_B is not None:
        lap = _coef_traces(space, ed, "plus", "lap", be, coef)
        r = np.asarray(spec.g_B(x[..., 0], x[..., 1]), dtype=float) * np.ones(shape) - lap
        lap_sq[be] = np.einsum("kq,kq->k", w, r * r)
    return dn_sq, val_sq, lap_sq


def _to_elements(space, edge_values):
    """Distribute per-edge values: full share on boundary edges, half to
    each side of interior edges."""
    mesh = space.mesh
    plus, minus = mesh.edge_triangles[:, 0], mesh.edge_triangles[:, 1]
    inner = minus >= 0
    out = np.zeros(mesh.n_triangles)
    np.add.at(out, plus, np.where(inner, 0.5, 1.0) * edge_values)
    np.add.at(out, minus[inner], 0.5 * edge_values[inner])
    return out


def point_load_terms(space, points, always=False):
    """``h_K^2`` of the triangle holding each point that is not a node.

    Returns per-triangle local additions, the global addition and the
    triangles involved.
    """
    mesh = space.mesh
    local = np.zeros(mesh.n_triangles)
    total = 0.0
    elements = []
    for p in points:
        tri, _, _ = locate_point(mesh, p)
        elements.append(tri)
        if always or not space.is_node(p):
            h2 = mesh.diameters[tri] ** 2
            local[tri] += h2
            total += h2
    return local, total, tuple(elements)


# ----------------------------------------------------------------------
# public estimators

def _assemble(space, u, spec, deltas, regularized, variant):
    m = space.degree
    mesh = space.mesh
    beta = spec.beta_for(m)
    h_e = mesh.edge_lengths
    h_k = mesh.diameters
    interior = mesh.edge_triangles[:, 1] >= 0
    boundary = ~interior
    weight = 1.0 + spec.mu1 * h_e ** 2 + spec.mu2 * h_e ** 4

    res = element_residual_squares(space, u, spec, deltas)
    grad, lap, flux = edge_jump_squares(space, u)

    if spec.bc == "dirichlet":
        grad_edges = interior
    elif spec.bc == "navier" and not NAVIER_BOUNDARY_GRADIENT:
        grad_edges = interior
    else:
        grad_edges = np.ones_like(interior)

    comps = {
        "residual": h_k ** 4 * res,
        "gradient_jump": _to_elements(space, np.where(grad_edges, weight * beta ** 2 / h_e * grad, 0.0)),
        "laplacian_jump": _to_elements(space, np.where(interior, h_e * lap, 0.0)),
        "flux_jump": _to_elements(space, np.where(interior, h_e ** 3 * flux, 0.0)),
    }
    if spec.bc in ("dirichlet", "navier"):
        dn_sq, val_sq, lap_sq = boundary_data_squares(space, u, spec)
        if spec.bc == "dirichlet":
            comps["normal_derivative"] = _to_elements(
                space, np.where(boundary, weight * beta / np.sqrt(h_e) * dn_sq, 0.0))
        else:
            comps["boundary_laplacian"] = _to_elements(
                space, np.where(boundary, np.sqrt(h_e) * lap_sq, 0.0))
        comps["boundary_value"] = _to_elements(
            space, np.where(boundary, weight * h_e ** -1.5 * val_sq, 0.0))
    local, glob, elems = point_load_terms(space, spec.load_points, always=regularized)
    return EstimatorReport(variant, comps, local, glob, elems)


def estimate_primal(space, u, spec):
    """Indicator built from the discrete solution of the point-load scheme.

    Works for every boundary variant; for ``clamped`` data without lower
    order terms it reduces to the pure biharmonic indicator.
    """
    variant = "primal" if spec.bc == "clamped" else spec.bc
    return _assemble(space, u, spec, (), False, variant)


def estimate_extension(space, u, spec, variant=None):
    """Indicator for the operator with lower-order terms and boundary data.

    ``variant`` must match ``spec.bc`` when given.
    """
    if variant is not None and variant != spec.bc:
        raise ConfigurationError(
            f"estimator variant {variant!r} does not match boundary variant {spec.bc!r}")
    return _assemble(space, u, spec, (), False, spec.bc)


def estimate_regularized(space, u, spec, deltas=None):
    """Indicator for the scheme with projected point loads.

    The element residual uses the projected deltas; the ``h_K^2`` point
    terms are always included.
    """
    if deltas is None:
        deltas = [project_delta(space, p, w) for p, w in spec.point_loads]
    return _assemble(space, u, spec, tuple(deltas), True, "regularized")
