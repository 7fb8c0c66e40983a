"""Command line: ``biharm solve`` and ``biharm exponent``."""

import argparse
import csv
import logging
import os
import sys

from .exceptions import BiharmError
from .mesh import load_mesh, parse_angle
from .presets import PRESETS
from .regularity import OMEGA_MAX, OMEGA_MIN, singular_exponent, sweep

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _apply_thread_cap():
    # must run before numpy loads its BLAS to take effect
    cap = os.environ.get("BIHARM_THREADS")
    if cap:
        for var in THREAD_VARS:
            os.environ.setdefault(var, cap)


def _angle(text):
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    parser = argparse.ArgumentParser(prog="biharm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run a uniform or adaptive convergence study")
    s.add_argument("--preset", choices=PRESETS, required=True)
    s.add_argument("--degree", type=int, choices=(2, 3, 4), default=3)
    s.add_argument("--mode", choices=("uniform", "adaptive"), default="uniform")
    s.add_argument("--estimator", choices=("primal", "regularized"), default="primal")
    s.add_argument("--beta", type=float, default=None,
                   help="penalty parameter (default 10 m^2)")
    s.add_argument("--theta", type=float, default=0.5, help="bulk marking fraction")
    s.add_argument("--levels", type=int, default=4,
                   help="finest uniform level, or adaptive refinement rounds")
    s.add_argument("--case", type=int, choices=(1, 2, 3), default=3,
                   help="load position for the square presets")
    s.add_argument("--mesh", help="initial mesh file in the text format")
    s.add_argument("--out", default="out", help="output directory")

    e = sub.add_parser("exponent", help="corner singularity exponent")
    e.add_argument("--omega", type=_angle, help="interior angle: radians or e.g. 3pi/2")
    e.add_argument("--sweep", action="store_true",
                   help="print omega,alpha0 over [pi/3, 2pi) as CSV")
    e.add_argument("--points", type=int, default=200, help="sweep resolution")
    return parser


def _solve(args):
    from .report import run_study

    mesh0 = None
    if args.mesh:
        with open(args.mesh) as fh:
            mesh0 = load_mesh(fh.read())
    result = run_study(args.preset, args.mode, args.degree, args.levels, args.case,
                       args.beta, args.theta, args.estimator, mesh0, args.out)
    if args.mode == "uniform":
        for r in result.rows:
            print(f"level {r.level:2d}  N={r.n_dofs:8d}  error={r.error:.4e}  "
                  f"estimator={r.estimate:.4e}  rate={r.rate:.3f}")
    else:
        for t in result.trace:
            print(f"iter {t.iteration:3d}  N={t.n_dofs:8d}  eta={t.estimate:.4e}  "
                  f"err={t.energy_error:.4e}  marked={t.marked}")
        print(f"slope (last 4 iterations): {result.slope:.3f}")
    print(f"outputs written to {args.out}")
    if result.error is not None:
        print(f"error: stopped early: {result.error}", file=sys.stderr)
        return 1
    return 0


def _exponent(args):
    if args.sweep:
        w = csv.writer(sys.stdout)
        w.writerow(("omega", "alpha0"))
        for omega, alpha in sweep(args.points, OMEGA_MIN, OMEGA_MAX):
            w.writerow((f"{omega:.10g}", f"{alpha:.10g}"))
        return 0
    if args.omega is None:
        print("error: --omega or --sweep is required", file=sys.stderr)
        return 2
    res = singular_exponent(args.omega)
    print(f"omega = {res.omega:.10g}")
    for z in res.roots:
        print(f"root  {z.real:.10f} {z.imag:+.10f}i")
    print(f"alpha0 = {res.alpha0:.6f}")
    return 0


def main(argv=None):
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return _solve(args)
        return _exponent(args)
    except (BiharmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
