"""C0 Lagrange spaces on a mesh: dof numbering and derivative tables."""

import numpy as np

from .fe_basis import (REF_VERTICES, AffineMap, reference_basis, segment_rule,
                       triangle_rule)
from .mesh import locate_points

NODE_TOL = 1e-10


class FeSpace:
    """Continuous piecewise polynomials of degree ``m`` on ``mesh``.

    Global numbering: vertex dofs first (same ids as vertices), then
    ``m-1`` dofs per edge ordered from the lower vertex id, then interior
    dofs per triangle.
    """

    def __init__(self, mesh, degree):
        self.mesh = mesh
        self.degree = m = degree
        self.basis = reference_basis(m)
        self.n_basis = self.basis.n_basis
        nv, ne, nt = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
        n_int = (m - 1) * (m - 2) // 2
        self.n_dofs = nv + ne * (m - 1) + nt * n_int

        t = mesh.triangles
        dofs = np.empty((nt, self.n_basis), dtype=np.int64)
        dofs[:, :3] = t
        col = 3
        for k in range(3):
            a, b = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
            e = mesh.triangle_edges[:, k]
            forward = a < b
            for s in range(m - 1):
                pos = np.where(forward, s, m - 2 - s)
                dofs[:, col] = nv + e * (m - 1) + pos
                col += 1
        for r in range(n_int):
            dofs[:, col] = nv + ne * (m - 1) + np.arange(nt) * n_int + r
            col += 1
        self.cell_dofs = dofs

        self.amap = AffineMap(mesh.vertices[t])
        self.G = self.amap.inverse
        self.M = self.G @ np.swapaxes(self.G, -1, -2)
        self.detJ = self.amap.det

        coords = np.empty((self.n_dofs, 2))
        coords[dofs] = self.amap(self.basis.nodes)
        self.dof_coords = coords

        on_b = np.zeros(self.n_dofs, dtype=bool)
        be = np.nonzero(mesh.boundary_edges)[0]
        on_b[mesh.edges[be].ravel()] = True
        for s in range(m - 1):
            on_b[nv + be * (m - 1) + s] = True
        self.boundary_dofs = on_b
        self._edge_cache = {}

    # ------------------------------------------------------------------
    def interpolate(self, func):
        """Nodal interpolant of ``func(x, y)``."""
        x = self.dof_coords
        return np.asarray(func(x[:, 0], x[:, 1]), dtype=float) * np.ones(self.n_dofs)

    def is_node(self, point):
        """True when ``point`` coincides with a Lagrange node of the space."""
        d = np.hypot(*(self.dof_coords - np.asarray(point, dtype=float)).T)
        scale = max(1.0, float(np.abs(self.mesh.vertices).max()))
        return bool(d.min() <= NODE_TOL * scale)

    def element_values(self, u):
        """Local coefficient array, shape (nt, n_basis)."""
        return np.asarray(u)[self.cell_dofs]

    # ------------------------------------------------------------------
    def physical(self, ref, kind, elements=None):
        """Physical derivative quantities from reference tables.

        ``ref`` maps derivative order to tables of shape
        ``(nq, nb, 2, ...)`` (shared points) or ``(ne, nq, nb, 2, ...)``
        (per-element points).  ``kind`` is one of ``value``, ``grad``,
        ``lap``, ``hess``, ``gradlap``, ``bilap``.
        """
        el = slice(None) if elements is None else elements
        G, M = self.G[el], self.M[el]
        order = next(iter(ref))
        shared = ref[order].ndim == 2 + order
        p = "" if shared else "k"
        if kind == "value":
            v = ref[0]
            return np.broadcast_to(v, (len(G),) + v.shape) if shared else v
        if kind == "grad":
            return np.einsum(f"{p}qia,kaj->kqij", ref[1], G)
        if kind == "hess":
            return np.einsum(f"{p}qiab,kaw,kbx->kqiwx", ref[2], G, G)
        if kind == "lap":
            return np.einsum(f"{p}qiab,kab->kqi", ref[2], M)
        if kind == "gradlap":
            return np.einsum(f"{p}qiabc,kaw,kbc->kqiw", ref[3], G, M)
        if kind == "bilap":
            return np.einsum(f"{p}qiabcd,kab,kcd->kqi", ref[4], M, M)
        raise ValueError(kind)

    def ref_tables(self, pts, orders):
        return {o: self.basis.eval(pts, o) for o in orders}

    # ------------------------------------------------------------------
    def edge_data(self, n_points):
        """Edge quadrature geometry and trace configurations (cached)."""
        if n_points not in self._edge_cache:
            self._edge_cache[n_points] = EdgeData(self, n_points)
        return self._edge_cache[n_points]

    def evaluate(self, u, points, kind="value"):
        """Evaluate the finite element function ``u`` at physical points."""
        points = np.atleast_2d(points)
        tri, bary = locate_points(self.mesh, points)
        ref = bary[:, 1:]
        tabs = {o: self.basis.eval(ref, o)[:, None] for o in _ORDERS[kind]}
        vals = self.physical(tabs, kind, elements=tri)[:, 0]
        coef = self.element_values(u)[tri]
        return np.einsum("ki...,ki->k...", vals, coef)


_ORDERS = {"value": (0,), "grad": (1,), "hess": (2,), "lap": (2,),
           "gradlap": (3,), "bilap": (4,)}


def edge_reference_points(t):
    """Reference points of edge parameter ``t`` for the 6 configurations.

    Configuration ``2k + flip`` is local edge ``k`` traversed from local
    vertex ``k+1`` to ``k+2`` (flip 0) or backwards (flip 1).
    """
    out = np.empty((6, len(t), 2))
    for k in range(3):
        a = REF_VERTICES[(k + 1) % 3]
        b = REF_VERTICES[(k + 2) % 3]
        out[2 * k] = a + np.outer(t, b - a)
        out[2 * k + 1] = b + np.outer(t, a - b)
    return out


class EdgeData:
    """Per-edge quadrature data.

    ``plus``/``minus`` are the adjacent triangles (minus = -1 on the
    boundary), ``normal`` points out of ``plus``, points are traversed
    from the lower to the higher vertex id.
    """

    def __init__(self, space, n_points):
        mesh = space.mesh
        rule = segment_rule(2 * n_points - 1)
        self.rule = rule
        self.t = rule.points
        self.plus = mesh.edge_triangles[:, 0]
        self.minus = mesh.edge_triangles[:, 1]
        self.interior = self.minus >= 0
        self.length = mesh.edge_lengths
        a = mesh.vertices[mesh.edges[:, 0]]
        b = mesh.vertices[mesh.edges[:, 1]]
        tang = (b - a) / self.length[:, None]
        normal = np.column_stack([tang[:, 1], -tang[:, 0]])
        opp = self._opposite(mesh, self.plus)
        outward = np.einsum("ij,ij->i", normal, a - mesh.vertices[opp]) > 0
        self.normal = np.where(outward[:, None], normal, -normal)
        self.points = a[:, None, :] + self.t[None, :, None] * (b - a)[:, None, :]
        self.weights = rule.weights[None, :] * self.length[:, None]
        self.config_plus = self._config(mesh, self.plus)
        self.config_minus = np.where(self.interior,
                                     self._config(mesh, np.maximum(self.minus, 0)), 0)
        ref = edge_reference_points(self.t)
        self.ref_points = ref
        self.tables = {o: np.stack([space.basis.eval(ref[c], o) for c in range(6)])
                       for o in range(5)}

    @staticmethod
    def _opposite(mesh, tris):
        t = mesh.triangles[tris]
        e = mesh.edges
        mask = (t != e[:, [0]]) & (t != e[:, [1]])
        return t[np.arange(len(t)), np.argmax(mask, axis=1)]

    @staticmethod
    def _config(mesh, tris):
        t = mesh.triangles[tris]
        e = mesh.edges
        mask = (t != e[:, [0]]) & (t != e[:, [1]])
        k = np.argmax(mask, axis=1)
        start = t[np.arange(len(t)), (k + 1) % 3]
        flip = (start != e[:, 0]).astype(np.int64)
        return 2 * k + flip

    def side_tables(self, side, orders, edges=None):
        sel = slice(None) if edges is None else edges
        cfg = (self.config_plus if side == "plus" else self.config_minus)[sel]
        return {o: self.tables[o][cfg] for o in orders}

    def traces(self, space, side, kind, edges=None):
        sel = np.arange(len(self.plus)) if edges is None else edges
        tris = (self.plus if side == "plus" else self.minus)[sel]
        tabs = self.side_tables(side, _ORDERS[kind], sel)
        return space.physical(tabs, kind, elements=tris)


# ----------------------------------------------------------------------
# composite quadrature toward a singular point

def graded_rule(ref_point, levels=12, degree=8):
    """Composite reference-triangle rule graded toward ``ref_point``.

    Sub-triangles whose closure contains the point are split at edge
    midpoints ``levels`` times; the rest use ``triangle_rule(degree)``.
    Returns points (n, 2) and weights summing to 1/2.
    """
    base = triangle_rule(min(degree, 14))
    p = np.asarray(ref_point, dtype=float)
    pts, wts = [], []
    stack = [(REF_VERTICES.copy(), 0)]
    while stack:
        tri, lev = stack.pop()
        if lev == levels or not _contains(tri, p):
            J = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
            det = abs(np.linalg.det(J))
            pts.append(tri[0] + base.points @ J.T)
            wts.append(base.weights * det)
            continue
        m0 = 0.5 * (tri[1] + tri[2])
        m1 = 0.5 * (tri[2] + tri[0])
        m2 = 0.5 * (tri[0] + tri[1])
        for child in ((tri[0], m2, m1), (m2, tri[1], m0), (m1, m0, tri[2]), (m0, m1, m2)):
            stack.append((np.array(child), lev + 1))
    return np.vstack(pts), np.concatenate(wts)


def _contains(tri, p, tol=1e-12):
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    det = e1[0] * e2[1] - e1[1] * e2[0]
    d = p - tri[0]
    l1 = (d[0] * e2[1] - d[1] * e2[0]) / det
    l2 = (e1[0] * d[1] - e1[1] * d[0]) / det
    return min(1 - l1 - l2, l1, l2) >= -tol


def singular_elements(space, points):
    """Triangles whose closure contains one of ``points``."""
    mesh = space.mesh
    out = set()
    for p in points:
        p = np.asarray(p, dtype=float)
        bary = mesh.barycentric(np.arange(mesh.n_triangles),
                                np.repeat(p[None], mesh.n_triangles, axis=0))
        out.update(np.nonzero(bary.min(axis=1) >= -1e-12)[0].tolist())
    return np.array(sorted(out), dtype=np.int64)


def volume_quadrature(space, degree, singular_points=(), levels=12):
    """Iterate over (elements, ref points, ref weights) blocks.

    Regular elements share one rule; elements touching a singular point
    get a graded composite rule each.
    """
    rule = triangle_rule(min(degree, 14))
    sing = singular_elements(space, singular_points) if len(singular_points) else \
        np.zeros(0, dtype=np.int64)
    regular = np.setdiff1d(np.arange(space.mesh.n_triangles), sing)
    blocks = []
    if len(regular):
        blocks.append((regular, rule.points, rule.weights))
    for k in sing:
        xi = [space.G[k] @ (np.asarray(p, dtype=float) - space.amap.translation[k])
              for p in singular_points]
        xi = [x for x in xi if _contains(REF_VERTICES, x)]
        # two singular points in one element: grade toward the first only
        pts, wts = graded_rule(xi[0], levels=levels, degree=degree)
        blocks.append((np.array([k]), pts, wts))
    return blocks
