"""Convergence studies and their CSV / SVG / text outputs.

The CSV files are the source of truth; the SVG plot is drawn from exactly
the same numbers.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapt import AdaptConfig, estimate, run_adaptive, solve_on_mesh
from .errors import discrete_difference_error, energy_error, rate
from .mesh import dump_mesh, uniform_refine
from .presets import get_preset
from .space import FeSpace

log = logging.getLogger(__name__)

TABLE_HEADER = ("level", "N", "h", "error", "estimator", "rate")
TRACE_HEADER = ("iter", "N", "eta", "energy_err", "marked", "elements")


@dataclass
class ConvergenceRow:
    level: int
    n_dofs: int
    h: float
    error: float
    estimate: float
    rate: float = float("nan")

    def as_tuple(self):
        return (self.level, self.n_dofs, self.h, self.error, self.estimate, self.rate)


@dataclass
class StudyResult:
    preset: str
    mode: str
    degree: int
    rows: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    slope: float = float("nan")
    meshes: list = field(default_factory=list)
    error: object = None


def fit_slope(n_dofs, values, last=4):
    """Least-squares slope of ``log2(values)`` against ``log2(n_dofs)``
    over the final ``last`` entries."""
    n = np.asarray(n_dofs, dtype=float)[-last:]
    v = np.asarray(values, dtype=float)[-last:]
    if len(n) < 2 or np.any(v <= 0) or np.ptp(n) == 0:
        return float("nan")
    return float(np.polyfit(np.log2(n), np.log2(v), 1)[0])


def _exact_error(preset, spec, degree):
    if preset.exact is None:
        return None
    beta = spec.beta_for(degree)
    navier = spec.bc == "navier"
    return lambda space, u: energy_error(space, u, preset.exact, beta, interior_only=navier)


def uniform_study(preset, degree, levels, beta=None, estimator="primal", mesh0=None):
    """Rows for levels ``0..levels`` of uniform refinement.

    With an exact solution the error column is the energy-norm error;
    otherwise it is the broken H2 difference to the previous level (and
    is undefined on level 0).  Rates compare consecutive error values.
    """
    spec = preset.spec(beta)
    err_fn = _exact_error(preset, spec, degree)
    regularized = estimator == "regularized"
    mesh = preset.initial_mesh() if mesh0 is None else mesh0
    rows = []
    prev = None
    for j in range(levels + 1):
        if j:
            mesh = uniform_refine(mesh)
        space = FeSpace(mesh, degree)
        u, deltas = solve_on_mesh(space, spec, regularized)
        est = estimate(space, u, spec, regularized, deltas).total
        if err_fn is not None:
            err = err_fn(space, u)
        elif prev is not None:
            err = discrete_difference_error(space, u, *prev)
        else:
            err = float("nan")
        r = rate(rows[-1].error, err) if rows else float("nan")
        rows.append(ConvergenceRow(j, space.n_dofs, float(mesh.diameters.max()), err, est, r))
        log.info("level %d: N=%d error=%.4e rate=%.3f", j, space.n_dofs, err, r)
        prev = (space, u)
    return rows, mesh


def run_study(preset_name, mode="uniform", degree=3, levels=4, case=3, beta=None,
              theta=0.5, estimator="primal", mesh0=None, out=None):
    """Run a uniform or adaptive study and optionally write its outputs.

    ``levels`` is the finest uniform level, or the number of refinement
    rounds in adaptive mode.
    """
    preset = get_preset(preset_name, case)
    result = StudyResult(preset_name, mode, degree)
    if mode == "uniform":
        result.rows, mesh = uniform_study(preset, degree, levels, beta, estimator, mesh0)
        result.meshes = [mesh]
        series = [r.estimate for r in result.rows]
        result.slope = fit_slope([r.n_dofs for r in result.rows], series)
    elif mode == "adaptive":
        spec = preset.spec(beta)
        cfg = AdaptConfig(degree, theta, levels, estimator)
        mesh = preset.initial_mesh() if mesh0 is None else mesh0
        adapt = run_adaptive(spec, mesh, cfg, _exact_error(preset, spec, degree),
                             keep_meshes=out is not None)
        result.trace = adapt.trace
        result.error = adapt.error
        result.meshes = adapt.meshes[-1:]
        result.slope = fit_slope([t.n_dofs for t in adapt.trace],
                                 [t.estimate for t in adapt.trace])
    else:
        raise ValueError(f"mode must be 'uniform' or 'adaptive', got {mode!r}")
    if out is not None:
        write_outputs(result, out)
    return result


# ----------------------------------------------------------------------
# writers

def write_table_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_HEADER)
        for row in rows:
            w.writerow([_fmt(v) for v in row.as_tuple()])


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for t in trace:
            w.writerow([t.iteration, t.n_dofs, _fmt(t.estimate), _fmt(t.energy_error),
                        t.marked, t.elements])


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "nan" if not math.isfinite(v) else f"{v:.10g}"


def _series(result):
    if result.mode == "uniform":
        n = [r.n_dofs for r in result.rows]
        return n, {"error": [r.error for r in result.rows],
                   "estimator": [r.estimate for r in result.rows]}
    n = [t.n_dofs for t in result.trace]
    return n, {"error": [t.energy_error for t in result.trace],
               "estimator": [t.estimate for t in result.trace]}


def write_dat(result, path):
    """Whitespace-separated columns ``N error estimator`` for gnuplot."""
    n, series = _series(result)
    with open(path, "w") as fh:
        fh.write("# N error estimator\n")
        for i, ni in enumerate(n):
            fh.write(f"{ni} {_fmt(series['error'][i])} {_fmt(series['estimator'][i])}\n")


def write_svg(result, path, width=640, height=480):
    """Log-log plot of error and estimator against N with the reference
    slope ``-(m - 1) / 2`` anchored at the first estimator value."""
    n, series = _series(result)
    ref_slope = -0.5 * (result.degree - 1)
    lines = {k: [(a, b) for a, b in zip(n, v) if b > 0 and math.isfinite(b)]
             for k, v in series.items()}
    est = lines["estimator"]
    if est:
        n0, e0 = est[0]
        lines["reference"] = [(x, e0 * (x / n0) ** ref_slope) for x in (n[0], n[-1])]
    pts = [p for v in lines.values() for p in v]
    if not pts:
        pts = [(1, 1), (10, 10)]
    lx = [math.log10(p[0]) for p in pts]
    ly = [math.log10(p[1]) for p in pts]
    x0, x1 = min(lx), max(lx) + 1e-9
    y0, y1 = min(ly), max(ly) + 1e-9
    pad = 60

    def sx(x):
        return pad + (math.log10(x) - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (math.log10(y) - y0) / (y1 - y0) * (height - 2 * pad)

    colours = {"error": "#1f77b4", "estimator": "#d62728", "reference": "#7f7f7f"}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<title>{result.preset} P{result.degree} {result.mode}</title>',
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="black"/>']
    for d in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 <= d <= x1:
            x = sx(10.0 ** d)
            out.append(f'<text x="{x:.1f}" y="{height - pad + 18}" font-size="12" '
                       f'text-anchor="middle">1e{d}</text>')
    for d in range(math.floor(y0), math.ceil(y1) + 1):
        if y0 <= d <= y1:
            y = sy(10.0 ** d)
            out.append(f'<text x="{pad - 6}" y="{y:.1f}" font-size="12" '
                       f'text-anchor="end">1e{d}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 12}" font-size="13" '
               'text-anchor="middle">N (degrees of freedom)</text>')
    for k, (name, v) in enumerate(lines.items()):
        if not v:
            continue
        dash = ' stroke-dasharray="6,4"' if name == "reference" else ""
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in v)
        data = " ".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in v)
        out.append(f'<polyline class="{name}" fill="none" stroke="{colours[name]}" '
                   f'stroke-width="1.5"{dash} points="{coords}" data-values="{data}"/>')
        label = f"slope {ref_slope:g}" if name == "reference" else name
        out.append(f'<text x="{width - pad - 4}" y="{pad + 16 + 16 * k}" font-size="12" '
                   f'text-anchor="end" fill="{colours[name]}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def write_outputs(result, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if result.mode == "uniform":
        write_table_csv(result.rows, out / "table.csv")
        last = result.rows[-1].level if result.rows else 0
    else:
        write_trace_csv(result.trace, out / "trace.csv")
        last = result.trace[-1].iteration if result.trace else 0
    write_svg(result, out / "plot.svg")
    write_dat(result, out / "plot.dat")
    for mesh in result.meshes:
        (out / f"mesh_{last}.txt").write_text(dump_mesh(mesh))
