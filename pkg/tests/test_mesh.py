import numpy as np
import pytest

from biharm.exceptions import LocationError, MeshError
from biharm.mesh import (Mesh, bisect, dump_mesh, load_mesh, locate_point, lshape_mesh,
                         parse_angle, square_mesh, uniform_refine)

from conftest import reference_triangle, two_triangle_square


def test_load_single_triangle():
    mesh = load_mesh("3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 2\n")
    assert mesh.n_triangles == 1
    assert mesh.n_edges == 3
    assert mesh.boundary_edges.sum() == 3


def test_load_square_with_comments():
    text = """# unit square
    4 2
    0 0 1
    1 0 1
    1 1 1   # corner
    0 1 1
    0 1 2
    0 2 3
    """
    mesh = load_mesh(text)
    assert mesh.n_triangles == 2
    assert (~mesh.boundary_edges).sum() == 1
    assert mesh.boundary_edges.sum() == 4


@pytest.mark.parametrize("text", [
    "3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 3\n",      # vertex id out of range
    "3 1\n0 0 1\n1 0 1\n0 1 1\n0 2 1\n",      # clockwise
    "3 1\n0 0 1\n1 0 1\n",                    # truncated
    "x y\n",                                  # bad header
    "",
])
def test_load_rejects_bad_input(text):
    with pytest.raises(MeshError):
        load_mesh(text)


def test_load_rejects_duplicate_vertices():
    with pytest.raises(MeshError):
        load_mesh("4 1\n0 0 1\n1 0 1\n0 1 1\n0 0 1\n0 1 2\n")


def test_load_rejects_hanging_node():
    # the midpoint of the diagonal is a vertex of one side only
    text = "5 3\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n0.5 0.5 0\n0 1 4\n1 2 4\n0 2 3\n"
    with pytest.raises(MeshError):
        load_mesh(text)


def test_dump_load_roundtrip():
    mesh = uniform_refine(two_triangle_square())
    again = load_mesh(dump_mesh(mesh))
    np.testing.assert_array_equal(again.vertices, mesh.vertices)
    np.testing.assert_array_equal(again.triangles, mesh.triangles)
    np.testing.assert_array_equal(again.vertex_on_boundary, mesh.vertex_on_boundary)


def test_uniform_refine_counts_and_angles():
    mesh = two_triangle_square()
    fine = uniform_refine(mesh)
    assert fine.n_triangles == 8
    assert fine.n_vertices == 9
    assert fine.min_angle() == pytest.approx(mesh.min_angle(), abs=1e-14)
    np.testing.assert_allclose(fine.areas.sum(), mesh.areas.sum(), rtol=1e-14)


def test_bisect_closure_forces_neighbour():
    mesh = two_triangle_square()
    out = bisect(mesh, [0])
    assert out.n_triangles == 4
    assert out.n_vertices == 5


def test_bisect_empty_is_identity():
    mesh = two_triangle_square()
    assert bisect(mesh, []) is mesh


def test_bisect_records_parents():
    mesh = square_mesh(0, 1, 2)
    out = bisect(mesh, [3])
    assert np.all(out.parent >= 0)
    for parent in np.unique(out.parent):
        kids = out.parent == parent
        assert out.areas[kids].sum() == pytest.approx(mesh.areas[parent], rel=1e-13)


def test_locate_barycenter():
    mesh = square_mesh(0, 1, 2)
    t = 5
    tri, bary, where = locate_point(mesh, mesh.centroids()[t])
    assert tri == t
    np.testing.assert_allclose(bary, [1 / 3] * 3, atol=1e-12)
    assert where == "interior"


def test_locate_shared_vertex_takes_smallest_id():
    mesh = square_mesh(0, 1, 2)
    centre = np.argmin(np.hypot(*(mesh.vertices - 0.5).T))
    adjacent = np.nonzero((mesh.triangles == centre).any(axis=1))[0]
    tri, _, where = locate_point(mesh, (0.5, 0.5))
    assert tri == adjacent.min()
    assert where == "vertex"


def test_locate_edge_point():
    mesh = two_triangle_square()
    tri, _, where = locate_point(mesh, (0.5, 0.5))
    assert tri == 0
    assert where == "edge"


def test_locate_outside_raises():
    with pytest.raises(LocationError):
        locate_point(two_triangle_square(), (10, 10))


def test_lshape_mesh_shape():
    mesh = lshape_mesh(2, "crisscross")
    assert mesh.n_triangles == 12
    assert mesh.areas.sum() == pytest.approx(12 * np.pi ** 2, rel=1e-13)
    with pytest.raises(LocationError):
        locate_point(mesh, (np.pi, -np.pi))


@pytest.mark.parametrize("text,value", [
    ("3pi/2", 1.5 * np.pi), ("pi/3", np.pi / 3), ("2*pi", 2 * np.pi),
    ("1.25", 1.25), ("11pi/12", 11 * np.pi / 12), ("π", np.pi),
])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, rel=1e-15)


def test_parse_angle_rejects_garbage():
    with pytest.raises(ValueError):
        parse_angle("three halves")


def test_single_triangle_bisection_generations():
    mesh = reference_triangle()
    alpha0 = mesh.min_angle()
    for _ in range(10):
        mesh = bisect(mesh, range(mesh.n_triangles))
        assert mesh.min_angle() >= alpha0 / 2 - 1e-12
    assert mesh.n_triangles == 2 ** 10
