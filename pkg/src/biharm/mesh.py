"""Conforming triangular meshes: storage, refinement and point location."""

import math
import re

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import LocationError, MeshError

BARY_TOL = 1e-12
_KEY = np.int64(1) << np.int64(32)


def _edge_key(a, b):
    a, b = np.minimum(a, b), np.maximum(a, b)
    return np.asarray(a, dtype=np.int64) * _KEY + np.asarray(b, dtype=np.int64)


class Mesh:
    """Immutable conforming triangulation.

    Local edge ``k`` of a triangle is the edge opposite its vertex ``k``.
    Interior edges have two adjacent triangles, boundary edges one (the
    second slot holds -1).  ``parent[t]`` is the index of the triangle
    of the mesh this one was refined from, or -1.
    """

    def __init__(self, vertices, triangles, boundary_flags=None, parent=None,
                 check=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        nt = len(self.triangles)
        self.parent = (np.full(nt, -1, dtype=np.int64) if parent is None
                       else np.asarray(parent, dtype=np.int64))
        if check:
            self._validate_basic()
        self._build_edges(check)
        on_boundary = np.zeros(self.n_vertices, dtype=bool)
        on_boundary[self.edges[self.boundary_edges].ravel()] = True
        self.boundary_flags = (on_boundary if boundary_flags is None
                               else np.asarray(boundary_flags, dtype=bool))
        self.vertex_on_boundary = on_boundary
        self._geometry()
        if check:
            self._check_hanging_nodes()
        for arr in (self.vertices, self.triangles, self.parent, self.edges,
                    self.edge_triangles, self.triangle_edges):
            arr.flags.writeable = False
        self._tree = None

    # ------------------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def _validate_basic(self):
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("vertex coordinates must be finite")
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= self.n_vertices):
            bad = np.nonzero((self.triangles < 0)
                             | (self.triangles >= self.n_vertices))[0][0]
            raise MeshError(f"triangle {bad} references a vertex id out of range")
        _, first, counts = np.unique(self.vertices, axis=0, return_index=True,
                                     return_counts=True)
        if np.any(counts > 1):
            dup = np.sort(first[counts > 1])[0]
            raise MeshError(f"duplicate vertex coordinates at vertex {dup}")
        tri = self.vertices[self.triangles]
        area2 = ((tri[:, 1, 0] - tri[:, 0, 0]) * (tri[:, 2, 1] - tri[:, 0, 1])
                 - (tri[:, 2, 0] - tri[:, 0, 0]) * (tri[:, 1, 1] - tri[:, 0, 1]))
        if np.any(area2 <= 0):
            bad = np.nonzero(area2 <= 0)[0][0]
            raise MeshError(f"triangle {bad} is inverted or degenerate")

    def _build_edges(self, check):
        t = self.triangles
        nt = len(t)
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)
        keys = _edge_key(local[..., 0], local[..., 1]).ravel()
        uniq, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
        if check and np.any(counts > 2):
            bad = np.nonzero(counts[inv] > 2)[0][0] // 3
            raise MeshError(f"non-conforming input: an edge of triangle {bad} "
                            "is shared by more than two triangles")
        self.edges = np.column_stack([uniq // _KEY, uniq % _KEY]).astype(np.int64)
        self.triangle_edges = inv.reshape(nt, 3).astype(np.int64)
        et = np.full((len(uniq), 2), -1, dtype=np.int64)
        owner = np.repeat(np.arange(nt), 3)
        order = np.argsort(inv, kind="stable")
        sorted_e = inv[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_e[1:] != sorted_e[:-1]
        et[sorted_e[first], 0] = owner[order[first]]
        et[sorted_e[~first], 1] = owner[order[~first]]
        # keep the higher-indexed triangle in slot 0 (it plays K+)
        swap = et[:, 1] > et[:, 0]
        et[swap] = et[swap][:, ::-1]
        self.edge_triangles = et
        self.boundary_edges = et[:, 1] < 0
        self._edge_keys = uniq

    def _geometry(self):
        p = self.vertices[self.edges]
        self.edge_lengths = np.hypot(*(p[:, 1] - p[:, 0]).T)
        lens = self.edge_lengths[self.triangle_edges]
        self.diameters = lens.max(axis=1)
        tri = self.vertices[self.triangles]
        self.areas = 0.5 * ((tri[:, 1, 0] - tri[:, 0, 0]) * (tri[:, 2, 1] - tri[:, 0, 1])
                            - (tri[:, 2, 0] - tri[:, 0, 0]) * (tri[:, 1, 1] - tri[:, 0, 1]))
        longest = lens >= lens.max(axis=1, keepdims=True) * (1.0 - 1e-12)
        opp = np.where(longest, self.triangles, np.iinfo(np.int64).max)
        self.refinement_edge = np.argmin(opp, axis=1)

    def _check_hanging_nodes(self):
        be = self.edges[self.boundary_edges]
        if len(be) == 0:
            return
        a = self.vertices[be[:, 0]]
        b = self.vertices[be[:, 1]]
        L = np.hypot(*(b - a).T)
        tree = cKDTree(self.vertices)
        mids = 0.5 * (a + b)
        cand = tree.query_ball_point(mids, 0.5 * L * (1 + 1e-9))
        for i, c in enumerate(cand):
            for v in c:
                if v in be[i]:
                    continue
                d = self.vertices[v] - a[i]
                t = d @ (b[i] - a[i]) / L[i] ** 2
                cross = abs(d[0] * (b[i] - a[i])[1] - d[1] * (b[i] - a[i])[0]) / L[i]
                if 0 < t < 1 and cross < 1e-10 * L[i]:
                    raise MeshError(f"non-conforming input: hanging vertex {v} "
                                    f"on edge {tuple(be[i])}")

    # ------------------------------------------------------------------
    def edge_index(self, a, b):
        """Index of the edge joining vertices ``a`` and ``b``."""
        key = _edge_key(np.asarray(a), np.asarray(b))
        idx = np.searchsorted(self._edge_keys, key)
        idx = np.minimum(idx, len(self._edge_keys) - 1)
        if np.any(self._edge_keys[idx] != key):
            raise KeyError("no such edge")
        return idx

    def angles(self):
        """Interior angles, shape (nt, 3), angle at vertex k in column k."""
        tri = self.vertices[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for k in range(3):
            u = tri[:, (k + 1) % 3] - tri[:, k]
            v = tri[:, (k + 2) % 3] - tri[:, k]
            cosang = np.einsum("ij,ij->i", u, v) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            out[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))
        return out

    def min_angle(self):
        return float(self.angles().min())

    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def barycentric(self, tris, points):
        """Barycentric coordinates of ``points`` (n,2) w.r.t. ``tris`` (n,)."""
        v = self.vertices[self.triangles[tris]]
        d = points - v[:, 0]
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        l1 = (d[:, 0] * e2[:, 1] - d[:, 1] * e2[:, 0]) / det
        l2 = (e1[:, 0] * d[:, 1] - e1[:, 1] * d[:, 0]) / det
        return np.column_stack([1.0 - l1 - l2, l1, l2])

    def __repr__(self):
        return (f"Mesh(n_vertices={self.n_vertices}, n_triangles={self.n_triangles}, "
                f"n_edges={self.n_edges})")


# ----------------------------------------------------------------------
# text format

def _strip(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def load_mesh(text):
    """Parse the node/element text format into a :class:`Mesh`.

    Format: a line ``nv nt``, then ``nv`` lines ``x y boundary_flag``,
    then ``nt`` lines ``v0 v1 v2`` (0-based, counter-clockwise).
    """
    lines = list(_strip(text))
    if not lines:
        raise MeshError("empty mesh file")
    try:
        nv, nt = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise MeshError(f"bad header {lines[0]!r}; expected 'nv nt'") from None
    if len(lines) < 1 + nv + nt:
        raise MeshError(f"expected {nv} vertex and {nt} triangle records, "
                        f"found {len(lines) - 1} records")
    verts = np.empty((nv, 2))
    flags = np.zeros(nv, dtype=bool)
    for i, line in enumerate(lines[1:1 + nv]):
        tok = line.split()
        if len(tok) != 3:
            raise MeshError(f"vertex record {i}: expected 'x y boundary_flag'")
        try:
            verts[i] = float(tok[0]), float(tok[1])
            flags[i] = bool(int(tok[2]))
        except ValueError:
            raise MeshError(f"vertex record {i}: cannot parse {line!r}") from None
    tris = np.empty((nt, 3), dtype=np.int64)
    for i, line in enumerate(lines[1 + nv:1 + nv + nt]):
        tok = line.split()
        if len(tok) != 3:
            raise MeshError(f"triangle record {i}: expected three vertex ids")
        try:
            tris[i] = [int(t) for t in tok]
        except ValueError:
            raise MeshError(f"triangle record {i}: cannot parse {line!r}") from None
        if np.any(tris[i] < 0) or np.any(tris[i] >= nv):
            raise MeshError(f"triangle record {i}: vertex id out of range")
    return Mesh(verts, tris, boundary_flags=flags)


def dump_mesh(mesh):
    """Serialize ``mesh`` in the text format read by :func:`load_mesh`."""
    out = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    out += [f"{x:.17g} {y:.17g} {int(b)}"
            for (x, y), b in zip(mesh.vertices, mesh.vertex_on_boundary)]
    out += [f"{a} {b} {c}" for a, b, c in mesh.triangles]
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------------
# refinement

def uniform_refine(mesh):
    """Split every triangle into four similar children at edge midpoints."""
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    verts = np.vstack([mesh.vertices, mids])
    t = mesh.triangles
    m = nv + mesh.triangle_edges
    v0, v1, v2 = t[:, 0], t[:, 1], t[:, 2]
    m0, m1, m2 = m[:, 0], m[:, 1], m[:, 2]
    children = np.stack([
        np.column_stack([v0, m2, m1]),
        np.column_stack([m2, v1, m0]),
        np.column_stack([m1, m0, v2]),
        np.column_stack([m0, m1, m2]),
    ], axis=1).reshape(-1, 3)
    parent = np.repeat(np.arange(mesh.n_triangles), 4)
    return Mesh(verts, children, parent=parent, check=False)


class _Bisector:
    """Mutable workspace for recursive longest-edge bisection."""

    def __init__(self, mesh):
        self.verts = [tuple(p) for p in mesh.vertices]
        self.tris = [tuple(t) for t in mesh.triangles]
        self.alive = [True] * mesh.n_triangles
        self.origin = list(range(mesh.n_triangles))
        self.edge_tris = {}
        for i, t in enumerate(self.tris):
            for k in range(3):
                self.edge_tris.setdefault(self._key(t[(k + 1) % 3], t[(k + 2) % 3]),
                                          set()).add(i)
        self.midpoints = {}

    @staticmethod
    def _key(a, b):
        return (a, b) if a < b else (b, a)

    def _len2(self, a, b):
        pa, pb = self.verts[a], self.verts[b]
        return (pa[0] - pb[0]) ** 2 + (pa[1] - pb[1]) ** 2

    def longest(self, i):
        t = self.tris[i]
        lens = [self._len2(t[(k + 1) % 3], t[(k + 2) % 3]) for k in range(3)]
        top = max(lens) * (1.0 - 2e-12)
        cands = [k for k in range(3) if lens[k] >= top]
        return min(cands, key=lambda k: t[k])

    def neighbour(self, i, k):
        t = self.tris[i]
        key = self._key(t[(k + 1) % 3], t[(k + 2) % 3])
        others = self.edge_tris[key] - {i}
        return next(iter(others)) if others else None

    def _midpoint(self, a, b):
        key = self._key(a, b)
        if key not in self.midpoints:
            pa, pb = self.verts[a], self.verts[b]
            self.verts.append(((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2))
            self.midpoints[key] = len(self.verts) - 1
        return self.midpoints[key]

    def _split(self, i, k):
        t = self.tris[i]
        a, b, c = t[k], t[(k + 1) % 3], t[(k + 2) % 3]
        m = self._midpoint(b, c)
        self.alive[i] = False
        for kk in range(3):
            self.edge_tris[self._key(t[(kk + 1) % 3], t[(kk + 2) % 3])].discard(i)
        for child in ((a, b, m), (a, m, c)):
            j = len(self.tris)
            self.tris.append(child)
            self.alive.append(True)
            self.origin.append(self.origin[i])
            for kk in range(3):
                self.edge_tris.setdefault(
                    self._key(child[(kk + 1) % 3], child[(kk + 2) % 3]), set()).add(j)

    def refine(self, i):
        """Bisect triangle ``i`` through its longest edge, keeping conformity."""
        while self.alive[i]:
            stack = [i]
            while True:
                top = stack[-1]
                k = self.longest(top)
                nb = self.neighbour(top, k)
                if nb is None:
                    self._split(top, k)
                    break
                kn = self.longest(nb)
                if self.neighbour(nb, kn) == top:
                    self._split(top, k)
                    self._split(nb, kn)
                    break
                stack.append(nb)

    def result(self, mesh):
        keep = [j for j, a in enumerate(self.alive) if a]
        tris = np.array([self.tris[j] for j in keep], dtype=np.int64)
        parent = np.array([self.origin[j] for j in keep], dtype=np.int64)
        return Mesh(np.array(self.verts), tris, parent=parent, check=False)


def bisect(mesh, marked):
    """Longest-edge bisection of the ``marked`` triangles with closure.

    Each marked triangle is bisected through its refinement edge at least
    once; neighbours are bisected recursively along the longest-edge
    propagation path until the mesh is conforming again.
    """
    marked = sorted(set(int(t) for t in marked))
    if not marked:
        return mesh
    if marked[0] < 0 or marked[-1] >= mesh.n_triangles:
        raise IndexError("marked triangle id out of range")
    work = _Bisector(mesh)
    for t in marked:
        work.refine(t)
    return work.result(mesh)


# ----------------------------------------------------------------------
# point location

def _tree(mesh):
    if mesh._tree is None:
        mesh._tree = cKDTree(mesh.centroids())
    return mesh._tree


def locate_points(mesh, points, tol=BARY_TOL):
    """Vectorized point location.

    Returns ``(tri, bary)``; for points on shared edges or vertices the
    adjacent triangle with the smallest id is returned.  Raises
    :class:`LocationError` when some point is outside the mesh.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    nt = mesh.n_triangles
    k = min(nt, 24)
    _, cand = _tree(mesh).query(points, k=k)
    cand = np.asarray(cand).reshape(n, k)
    best = np.full(n, -1, dtype=np.int64)
    for j in range(k):
        c = cand[:, j]
        bary = mesh.barycentric(c, points)
        inside = bary.min(axis=1) >= -tol
        upd = inside & ((best < 0) | (c < best))
        best[upd] = c[upd]
    missing = np.nonzero(best < 0)[0]
    for p in missing:
        bary = mesh.barycentric(np.arange(nt), np.repeat(points[p:p + 1], nt, axis=0))
        inside = np.nonzero(bary.min(axis=1) >= -tol)[0]
        if len(inside) == 0:
            raise LocationError(f"point {tuple(points[p])} lies outside the mesh")
        best[p] = inside.min()
    # the smallest containing id may not be among the nearest candidates
    # when the point sits on a vertex shared by many triangles
    on_edge = mesh.barycentric(best, points).min(axis=1) <= tol
    for p in np.nonzero(on_edge)[0]:
        bary = mesh.barycentric(np.arange(nt), np.repeat(points[p:p + 1], nt, axis=0))
        best[p] = np.nonzero(bary.min(axis=1) >= -tol)[0].min()
    return best, mesh.barycentric(best, points)


def locate_point(mesh, p):
    """Locate a single point.

    Returns ``(triangle_id, barycentric, location)`` with ``location`` one
    of ``"interior"``, ``"edge"``, ``"vertex"``.
    """
    tri, bary = locate_points(mesh, [p])
    bary = bary[0]
    zeros = int(np.sum(np.abs(bary) <= 1e-12))
    location = {0: "interior", 1: "edge"}.get(zeros, "vertex")
    return int(tri[0]), bary, location


# ----------------------------------------------------------------------
# generators

def _from_grid(xs, ys, keep, pattern):
    """Triangulate a tensor grid, keeping only cells where ``keep(i, j)``."""
    verts = {}
    tris = []

    def vid(p):
        key = (round(p[0], 12), round(p[1], 12))
        if key not in verts:
            verts[key] = (len(verts), p)
        return verts[key][0]

    for j in range(len(ys) - 1):
        for i in range(len(xs) - 1):
            if not keep(i, j):
                continue
            x0, x1, y0, y1 = xs[i], xs[i + 1], ys[j], ys[j + 1]
            a, b, c, d = (vid((x0, y0)), vid((x1, y0)), vid((x1, y1)), vid((x0, y1)))
            if pattern == "crisscross":
                e = vid(((x0 + x1) / 2, (y0 + y1) / 2))
                tris += [(a, b, e), (b, c, e), (c, d, e), (d, a, e)]
            else:
                tris += [(a, b, c), (a, c, d)]
    coords = np.empty((len(verts), 2))
    for _, (idx, p) in verts.items():
        coords[idx] = p
    return Mesh(coords, np.array(tris))


def square_mesh(lo=0.0, hi=1.0, n=1, pattern="diagonal"):
    """Square [lo, hi]^2 as an ``n x n`` grid of cells."""
    xs = np.linspace(lo, hi, n + 1)
    return _from_grid(xs, xs, lambda i, j: True, pattern)


def lshape_mesh(n=4, pattern="crisscross"):
    """(-2pi, 2pi)^2 minus [0, 2pi) x (-2pi, 0] on an ``n x n`` cell grid."""
    xs = np.linspace(-2 * math.pi, 2 * math.pi, n + 1)
    half = n // 2
    return _from_grid(xs, xs, lambda i, j: not (i >= half and j < half), pattern)


_FRACTION = re.compile(r"^\s*([-+]?\d*\.?\d*)\s*\*?\s*(pi)?\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(text):
    """Parse ``"3pi/2"``, ``"pi/3"``, ``"2*pi"`` or a plain float."""
    text = str(text).strip().lower().replace("π", "pi")
    try:
        return float(text)
    except ValueError:
        pass
    m = _FRACTION.match(text)
    if not m or not m.group(2):
        raise ValueError(f"cannot parse angle {text!r}")
    num = m.group(1)
    coef = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
    den = float(m.group(3)) if m.group(3) else 1.0
    return coef * math.pi / den
