"""Corner singularity exponents of the clamped biharmonic operator.

Near a corner of interior angle ``omega`` the singular functions behave
like ``r^(1+z)`` where ``z`` solves ``sin^2(z omega) = z^2 sin^2(omega)``.
The smallest real part among the nontrivial roots with positive real part
controls the regularity of the solution and hence the uniform-mesh rate.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, SearchWindowError

OMEGA_MIN = np.pi / 3
OMEGA_MAX = 2 * np.pi

SEED_GRID = 50
RE_MAX = 5.0
IM_MAX = 5.0
MAX_NEWTON = 100
STEP_TOL = 1e-13
DEDUP_TOL = 1e-6
RESIDUAL_TOL = 1e-10


@dataclass
class ExponentResult:
    omega: float
    roots: np.ndarray
    alpha0: float


def characteristic(z, omega):
    return np.sin(z * omega) ** 2 - z * z * np.sin(omega) ** 2


def _newton(seeds, omega, sign):
    """Vectorized Newton for ``sin(z omega) - sign * z sin(omega)``."""
    s = np.sin(omega)
    z = seeds.astype(complex)
    active = np.ones(z.shape, dtype=bool)
    for _ in range(MAX_NEWTON):
        f = np.sin(z * omega) - sign * z * s
        df = omega * np.cos(z * omega) - sign * s
        with np.errstate(divide="ignore"):
            step = np.where(active, f / df, 0)
        step = np.where(np.isfinite(step), step, 0)
        z = z - step
        active &= np.abs(step) >= STEP_TOL
        if not active.any():
            break
    return z


def _is_trivial(z, omega):
    """``z = 1`` solves the equation for every angle; it is a genuine
    exponent only when it is a multiple root (straight boundary)."""
    if abs(z - 1) > DEDUP_TOL:
        return False
    dF = 2 * np.sin(omega) * (omega * np.cos(omega) - np.sin(omega))
    return abs(dF) > 1e-8


def singular_exponent(omega):
    """All roots in the search window and the threshold ``alpha0``.

    Newton is run on both factors ``sin(z omega) = +-z sin(omega)`` from
    a 50 x 50 seed grid over ``0 < Re z <= 5``, ``0 <= Im z <= 5``.
    """
    omega = float(omega)
    if not OMEGA_MIN - 1e-12 <= omega < OMEGA_MAX:
        raise ConfigurationError(f"omega={omega} outside [pi/3, 2pi)")
    re = np.linspace(RE_MAX / SEED_GRID, RE_MAX, SEED_GRID)
    im = np.linspace(0.0, IM_MAX, SEED_GRID)
    seeds = (re[:, None] + 1j * im[None, :]).ravel()
    # divergent seeds overflow harmlessly; they are filtered below
    with np.errstate(over="ignore", invalid="ignore"):
        cand = np.concatenate([_newton(seeds, omega, 1.0), _newton(seeds, omega, -1.0)])
        ok = np.isfinite(cand) & (cand.real > DEDUP_TOL) & (cand.real <= RE_MAX + 1)
        ok &= np.abs(characteristic(cand, omega)) <= RESIDUAL_TOL
    cand = cand[ok]
    # fold conjugates into the upper half plane
    cand = np.where(cand.imag < 0, np.conj(cand), cand)
    cand = cand[np.lexsort((cand.imag, cand.real))]
    roots = []
    for z in cand:
        if abs(z.imag) < DEDUP_TOL:
            z = complex(z.real, 0.0)
        if any(abs(z - r) < DEDUP_TOL for r in roots):
            continue
        if _is_trivial(z, omega):
            continue
        roots.append(z)
    if not roots:
        raise SearchWindowError(f"no nontrivial root found for omega={omega}")
    roots = np.array(roots)
    return ExponentResult(omega, roots, float(roots.real.min()))


def regularity_index(omega, degree=None):
    """Predicted energy-norm rate on uniform meshes, ``min(1, alpha0)``.

    The degree does not enter: the rate is limited by the point load
    (at most 1) and by the corner (``alpha0``).
    """
    return min(1.0, singular_exponent(omega).alpha0)


def sweep(n=200, lo=OMEGA_MIN, hi=OMEGA_MAX):
    """``(omega, alpha0)`` pairs on ``n`` equispaced angles in ``[lo, hi)``."""
    omegas = np.linspace(lo, hi, n, endpoint=False)
    return [(float(w), singular_exponent(w).alpha0) for w in omegas]
