import csv
import re

import numpy as np
import pytest

from biharm.exceptions import ConfigurationError
from biharm.mesh import load_mesh
from biharm.presets import CASE_POINTS, PRESETS, get_preset
from biharm.report import fit_slope, run_study


def test_presets_match_examples():
    ls = get_preset("lshape-clamped")
    spec = ls.spec()
    assert spec.bc == "clamped" and spec.point_loads == (((-np.pi, np.pi), 1.0),)
    assert ls.corner_angle == pytest.approx(1.5 * np.pi)
    assert ls.initial_mesh().areas.sum() == pytest.approx(12 * np.pi ** 2)
    for name in ("square-dirichlet", "square-navier"):
        p = get_preset(name, case=2)
        spec = p.spec()
        assert (spec.mu1, spec.mu2) == (1.0, 1.0)
        np.testing.assert_allclose(p.exact.x0, CASE_POINTS[2])
        x, y = np.array([0.5, -3.0]), np.array([1.0, 2.0])
        sol = p.exact
        np.testing.assert_allclose(spec.f(x, y), sol.value(x, y) - sol.laplacian(x, y))
        assert p.initial_mesh().areas.sum() == pytest.approx(16 * np.pi ** 2)
    neu = get_preset("square-neumann").spec()
    assert neu.point_loads == (((np.pi, 0.0), 1.0), ((-np.pi, 0.0), -1.0))
    assert set(PRESETS) == {"lshape-clamped", "square-dirichlet", "square-navier",
                            "square-neumann"}


def test_unknown_preset_and_case():
    with pytest.raises(ConfigurationError):
        get_preset("disk")
    with pytest.raises(ConfigurationError):
        get_preset("square-navier", case=4)


def test_case_one_load_is_a_node():
    from biharm.space import FeSpace
    p = get_preset("square-dirichlet", case=1)
    space = FeSpace(p.initial_mesh(), 2)
    assert space.is_node(CASE_POINTS[1])
    assert not space.is_node(CASE_POINTS[3])


def test_fit_slope():
    n = np.array([10, 20, 40, 80, 160])
    assert fit_slope(n, 3.0 * n ** -1.0) == pytest.approx(-1.0, abs=1e-12)
    assert np.isnan(fit_slope([10], [1.0]))


def _svg_series(text, name):
    m = re.search(rf'class="{name}"[^>]*data-values="([^"]*)"', text)
    return [tuple(float(v) for v in pair.split(":")) for pair in m.group(1).split()]


def test_uniform_study_outputs(tmp_path):
    res = run_study("square-navier", "uniform", degree=2, levels=3, case=3, out=tmp_path)
    assert [r.level for r in res.rows] == [0, 1, 2, 3]
    with open(tmp_path / "table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["level", "N", "h", "error", "estimator", "rate"]
    assert rows[0]["rate"] == "nan"
    svg = (tmp_path / "plot.svg").read_text()
    assert svg.startswith("<svg") and "slope -0.5" in svg
    pts = _svg_series(svg, "error")
    assert [(int(r["N"]), float(r["error"])) for r in rows] == pts
    est = _svg_series(svg, "estimator")
    assert [float(r["estimator"]) for r in rows] == [e for _, e in est]
    mesh = load_mesh((tmp_path / "mesh_3.txt").read_text())
    assert mesh.n_triangles == 8 * 4 ** 3
    assert (tmp_path / "plot.dat").read_text().startswith("# N error estimator")


def test_difference_study_without_exact_solution():
    res = run_study("square-neumann", "uniform", degree=2, levels=2)
    assert np.isnan(res.rows[0].error)
    assert res.rows[2].error > 0 and np.isfinite(res.rows[2].rate)


def test_adaptive_study_outputs(tmp_path):
    res = run_study("square-dirichlet", "adaptive", degree=3, levels=5, out=tmp_path)
    with open(tmp_path / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["iter", "N", "eta", "energy_err", "marked", "elements"]
    assert len(rows) == 6
    assert all(float(r["energy_err"]) > 0 for r in rows)
    assert np.isfinite(res.slope)
    assert (tmp_path / "mesh_5.txt").exists()


def test_bad_mode():
    with pytest.raises(ValueError):
        run_study("square-dirichlet", "random", levels=1)
