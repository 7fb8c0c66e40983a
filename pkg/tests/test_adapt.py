import numpy as np
import pytest

from biharm.adapt import AdaptConfig, mark, run_adaptive
from biharm.assembly import ProblemSpec
from biharm.exceptions import ConfigurationError
from biharm.mesh import square_mesh
from biharm.presets import get_preset


def test_hand_case():
    np.testing.assert_array_equal(mark(np.array([3.0, 2.0, 2.0, 1.0]), 0.8), [0, 1])


def test_theta_one_marks_all_nonzero():
    ind = np.array([0.5, 0.0, 2.0, 1.0])
    np.testing.assert_array_equal(mark(ind, 1.0), [0, 2, 3])


def test_dominant_element():
    ind = np.sqrt(np.array([95.0, 2.0, 2.0, 1.0]))
    np.testing.assert_array_equal(mark(ind, 0.9), [0])


def test_ties_break_by_id():
    np.testing.assert_array_equal(mark(np.array([1.0, 2.0, 2.0, 2.0]), 0.7), [1, 2])


def test_invalid_theta():
    with pytest.raises(ConfigurationError):
        mark(np.ones(3), 0.0)
    with pytest.raises(ConfigurationError):
        AdaptConfig(theta=1.5)
    with pytest.raises(ConfigurationError):
        AdaptConfig(estimator="hierarchical")
    with pytest.raises(ConfigurationError):
        AdaptConfig(degree=5)


def test_zero_rounds_is_one_solve():
    spec = ProblemSpec(point_loads=[((0.3, 0.6), 1.0)])
    res = run_adaptive(spec, square_mesh(0, 1, 2), AdaptConfig(degree=2, max_refinements=0))
    assert len(res.trace) == 1
    assert res.trace[0].marked == 0
    assert res.error is None


def test_loop_invariants():
    preset = get_preset("square-dirichlet", case=3)
    spec = preset.spec()
    res = run_adaptive(spec, preset.initial_mesh(),
                       AdaptConfig(degree=3, max_refinements=8), keep_meshes=True)
    n = [t.n_dofs for t in res.trace]
    assert all(b > a for a, b in zip(n, n[1:]))
    assert all(t.estimate >= 0 for t in res.trace)
    alpha0 = res.meshes[0].min_angle()
    for mesh in res.meshes:
        assert mesh.min_angle() >= alpha0 / 2 - 1e-12
        # conformity: every edge has one or two neighbours, boundary edges one
        counts = np.bincount(mesh.triangle_edges.ravel(), minlength=mesh.n_edges)
        np.testing.assert_array_equal(counts, np.where(mesh.boundary_edges, 1, 2))
    # refinement concentrates at the load
    mesh = res.meshes[-1]
    smallest = np.argmin(mesh.diameters)
    dist = np.hypot(*(mesh.centroids()[smallest] - preset.exact.x0))
    assert dist <= 2 * mesh.diameters[smallest]


def test_marking_is_minimal():
    rng = np.random.default_rng(7)
    for _ in range(50):
        ind = rng.random(30) ** 3
        theta = rng.uniform(0.1, 1.0)
        sel = mark(ind, theta)
        sq = ind ** 2
        need = theta ** 2 * sq.sum()
        assert sq[sel].sum() >= need * (1 - 1e-12)
        smallest = sel[np.argmin(sq[sel])]
        assert sq[sel].sum() - sq[smallest] < need
