"""
Potential theory of polynomial iteration: escape radius, filled Julia set
membership, the escape-rate Green's function and its critical points.
"""

import logging
import math

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .divisor import Divisor
from .poly import (
    Polynomial,
    PolynomialError,
    derivative,
    eval_horner,
    iterate_jet_scaled,
)
from .rootfind import BoundaryUnsafeError, Rect, aberth_roots


# Relative increment at which the Green's function tail stops
GREEN_TOL = 1e-12

# Points closer than this to a window edge cannot be attributed to a side
BOUNDARY_MARGIN = 1e-9

# Samples per axis when checking that a window lies in the basin
BASIN_SAMPLES = 23

DEFAULT_MAX_ITER = 500

# Orbits this close (relative to 1 + |w|) to a checkpoint are periodic
PERIOD_TOL = 1e-13


class NotMonicError(Exception):
    """Indicate a polynomial whose leading coefficient is not one."""


class WindowNotInBasinError(Exception):
    """Indicate a window that meets the filled Julia set."""


def log_threshold(degree: int) -> float:
    """log(10^(250 / degree)): beyond it one more step would risk overflow."""
    return 250 * math.log(10) / degree


def escape_radius(P: Polynomial) -> float:
    """
    Smallest r >= 1 with |z| > r  =>  |P(z)| > 2|z|, from the coefficient bound.

    phi(rho) = 1 - sum_j |a_j| rho^(j - d) - 2 rho^(1 - d) increases with rho;
    the radius is its zero, located by bisection.
    """
    if P.degree < 2:
        raise PolynomialError(f"Escape radius needs degree >= 2, got {P.degree}")
    if not P.is_monic:
        raise NotMonicError(f"Polynomial {P.coeffs} is not monic")

    degree = P.degree
    lower = np.abs(P.array[:-1])
    powers = np.arange(degree) - degree

    def phi(rho: float) -> float:
        return 1 - float((lower * rho**powers).sum()) - 2 * rho ** (1 - degree)

    if phi(1.0) >= 0:
        return 1.0

    hi = max(1.0, (2 + lower.sum()) ** (1 / (degree - 1)))
    while phi(hi) < 0:
        hi *= 2

    lo = 1.0
    while hi - lo > 4 * np.finfo(float).eps * hi:
        mid = (lo + hi) / 2
        if phi(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class DynSystem:
    """A monic polynomial of degree >= 2 with its escape radius."""

    P: Polynomial
    escape_radius: float
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.P.degree < 2:
            raise PolynomialError(f"Dynamics needs degree >= 2, got {self.P.degree}")
        if not self.P.is_monic:
            raise NotMonicError(f"Polynomial {self.P.coeffs} is not monic")
        if not self.escape_radius > 0:
            raise ValueError(f"Escape radius must be positive: {self.escape_radius}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive: {self.max_iter}")

    @classmethod
    def from_polynomial(
        cls, P: Polynomial, max_iter: int = DEFAULT_MAX_ITER
    ) -> "DynSystem":
        return cls(P, escape_radius(P), max_iter)

    @property
    def degree(self) -> int:
        return self.P.degree


@dataclass(frozen=True)
class Membership:
    """
    Outcome of an orbit test.

    Escaping orbits record their step. Every other point is reported inside;
    it is undecided unless its orbit came back to one of its checkpoints,
    i.e. is periodic to double precision.
    """

    escaped_step: Optional[int]
    periodic: bool = False

    @property
    def escaped(self) -> bool:
        return self.escaped_step is not None

    @property
    def inside(self) -> bool:
        return not self.escaped

    @property
    def undecided(self) -> bool:
        return not (self.escaped or self.periodic)


def escape_steps(sys: DynSystem, z):
    """
    First k with |P^k(z)| > R for each point (-1 if none within max_iter),
    together with the orbit point at that step.
    """
    shape = np.shape(z)
    orbit = np.array(z, dtype=complex).ravel()
    steps = np.where(np.abs(orbit) > sys.escape_radius, 0, -1)

    for step in range(1, sys.max_iter + 1):
        active = steps < 0
        if not active.any():
            break
        orbit[active] = eval_horner(sys.P, orbit[active])
        steps[active & (np.abs(orbit) > sys.escape_radius)] = step

    return steps.reshape(shape), orbit.reshape(shape)


def in_filled_julia(sys: DynSystem, z: complex) -> Membership:
    """
    Escape-time test of z against the filled Julia set K(P).

    Checkpoints are taken at steps 1, 2, 4, 8, ... and an orbit returning to
    the latest one is settled as periodic.
    """
    w = complex(z)
    if abs(w) > sys.escape_radius:
        return Membership(0)

    checkpoint, horizon = w, 1
    for step in range(1, sys.max_iter + 1):
        w = complex(eval_horner(sys.P, w))
        if abs(w) > sys.escape_radius:
            return Membership(step)
        if abs(w - checkpoint) <= PERIOD_TOL * (1 + abs(w)):
            return Membership(None, periodic=True)
        if step == horizon:
            checkpoint, horizon = w, 2 * horizon

    return Membership(None)


def _green_from_orbit(sys: DynSystem, steps: np.ndarray, orbit: np.ndarray):
    """d^-k log|P^k(z)| continued until the increment drops below GREEN_TOL."""
    degree = sys.degree
    threshold = log_threshold(degree)

    escaped = steps >= 0
    orbit = orbit[escaped]
    scale = np.power(float(degree), -steps[escaped].astype(float))
    logs = np.log(np.abs(orbit))
    values = scale * logs

    # Beyond the threshold log|P(w)| = d log|w| to double precision
    active = logs <= threshold
    for _ in range(sys.max_iter):
        if not active.any():
            break
        orbit[active] = eval_horner(sys.P, orbit[active])
        scale[active] /= degree
        logs[active] = np.log(np.abs(orbit[active]))
        updated = scale[active] * logs[active]
        increment = np.abs(updated - values[active])
        values[active] = updated

        settled = increment <= GREEN_TOL * np.maximum(1.0, np.abs(updated))
        index = np.flatnonzero(active)
        active[index[settled]] = False
        active &= logs <= threshold

    green = np.zeros(steps.shape)
    green[escaped] = values
    return green


def green_escape(sys: DynSystem, z):
    """
    Escape-rate Green's function g = lim d^-k log|P^k| of the basin of infinity.

    Zero for points that do not escape within max_iter.
    """
    steps, orbit = escape_steps(sys, np.atleast_1d(z))
    green = _green_from_orbit(sys, steps.ravel(), orbit.ravel())
    return float(green[0]) if np.ndim(z) == 0 else green.reshape(np.shape(z))


def escape_grid(sys: DynSystem, re, im):
    """
    Green's function values and escape steps on the grid re x im.

    Both arrays have shape (len(re), len(im)); steps are -1 for points that
    did not escape.
    """
    points = np.asarray(re, dtype=float)[:, None] + 1j * np.asarray(im, dtype=float)
    steps, orbit = escape_steps(sys, points)
    green = _green_from_orbit(sys, steps.ravel(), orbit.ravel())
    return green.reshape(points.shape), steps


def log_modulus_iterate(P: Polynomial, k: int, z):
    """log|P^k(z)| in log space; finite even when P^k(z) overflows, -inf at roots."""
    log_scale, jet = iterate_jet_scaled(P, k, z, 0)
    with np.errstate(divide="ignore"):
        values = log_scale + np.log(np.abs(jet[0]))
    return float(values) if np.ndim(z) == 0 else values


def normalized_log_derivative(P: Polynomial, k: int, z):
    """
    (P^k)'(z) / (d^k P^k(z)) by the chain rule along the orbit.

    The slope (P^j)'(z) / d^j is carried separately from the orbit point
    w = P^j(z), so orbits through zeros of P stay finite. Once |w| passes the
    overflow threshold the remaining factors w P'(w) / (d P(w)) are one to
    double precision and the ratio is taken there.
    """
    degree = P.degree
    dP = derivative(P)
    threshold = log_threshold(degree)

    orbit = np.atleast_1d(np.array(z, dtype=complex))
    slope = np.ones_like(orbit)
    ratio = np.empty_like(orbit)
    done = np.zeros(orbit.shape, dtype=bool)

    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(k):
            active = ~done & (np.log(np.abs(orbit)) <= threshold)
            settled = ~done & ~active
            ratio[settled] = slope[settled] / orbit[settled]
            done |= settled
            if not active.any():
                break
            moving = orbit[active]
            slope[active] *= eval_horner(dP, moving) / degree
            orbit[active] = eval_horner(P, moving)

        ratio[~done] = slope[~done] / orbit[~done]

    return complex(ratio[0]) if np.ndim(z) == 0 else ratio.reshape(np.shape(z))


def check_window_in_basin(sys: DynSystem, window: Rect):
    """Sample the window and raise if any sample fails to escape."""
    xs = np.linspace(window.lo.real, window.hi.real, BASIN_SAMPLES)
    ys = np.linspace(window.lo.imag, window.hi.imag, BASIN_SAMPLES)
    steps, _ = escape_steps(sys, xs[:, None] + 1j * ys)

    if np.any(steps < 0):
        stuck = (xs[:, None] + 1j * ys)[steps < 0][0]
        raise WindowNotInBasinError(
            f"window-not-in-basin: {window} contains {stuck}, which does not "
            f"escape in {sys.max_iter} steps"
        )


@dataclass(frozen=True)
class PrecriticalPoint:
    """A zero of g' with its order and the depth of its backward orbit."""

    location: complex
    order: int
    depth: int


def _same_point(a: complex, b: complex) -> bool:
    return abs(a - b) <= 1e-9 * (1 + abs(a))


def precritical_points(sys: DynSystem, depth: int) -> list[PrecriticalPoint]:
    """
    Zeros of g' in the basin up to the given backward-orbit depth.

    Differentiating g(P(z)) = d g(z) gives g'(P(z)) P'(z) = d g'(z), so the
    zeros of g' in the basin are the escaping critical points of P and their
    iterated preimages, of order ord_z P' + (ord_z P' + 1) * ord_{P(z)} g'.
    """
    if depth < 0:
        raise ValueError(f"Depth must be nonnegative, got {depth}")

    logger = logging.getLogger(__name__)
    critical = aberth_roots(derivative(sys.P))

    level = [
        PrecriticalPoint(location, mult, 0)
        for location, mult in critical.roots
        if in_filled_julia(sys, location).escaped
    ]
    logger.debug(
        "%d of %d critical points escape", len(level), len(critical.roots)
    )

    found: list[PrecriticalPoint] = list(level)
    for generation in range(1, depth + 1):
        next_level = []
        for point in level:
            shifted = sys.P.array
            shifted[0] -= point.location
            preimages = aberth_roots(Polynomial(tuple(shifted)))
            for location, local_degree in preimages.roots:
                order = (local_degree - 1) + local_degree * point.order
                next_level.append(PrecriticalPoint(location, order, generation))

        for point in next_level:
            for index, known in enumerate(found):
                if _same_point(known.location, point.location):
                    # A critical point reached again: keep the full order
                    if point.order > known.order:
                        found[index] = point
                    break
            else:
                found.append(point)

        level = next_level
        logger.debug("Depth %d: %d preimages", generation, len(level))

    return found


def green_critical_points(
    sys: DynSystem, window: Rect, depth: int, check_basin: bool = True
) -> Divisor:
    """
    Divisor of the zeros of g' in the window, from backward orbits of the
    escaping critical points of P.

    Raises BoundaryUnsafeError for a point within 1e-9 of the window edge.
    """
    if check_basin:
        check_window_in_basin(sys, window)

    entries = []
    for point in precritical_points(sys, depth):
        distance = window.boundary_distance(point.location)
        if abs(distance) <= BOUNDARY_MARGIN:
            raise BoundaryUnsafeError(
                f"boundary-unsafe: critical point {point.location} of g lies on "
                f"the edge of {window}"
            )
        if distance > 0:
            entries.append((point.location, point.order))

    return Divisor(window, tuple(entries))
