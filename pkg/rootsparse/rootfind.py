"""Locate and count zeros of polynomials and jet-evaluable functions."""

import logging
import math

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import roots_legendre

from .poly import Polynomial, derivative, eval_horner, jet_array
from .utils import GOLDEN_RATIO, jitter_offsets


# A jet-evaluable function maps (points, order) to an array of shape
# (order + 1, *points.shape) holding f^(j)(z) / j!. Each point's jet may be
# scaled by any positive factor: counting and Newton use ratios only.
JetFunction = Callable[[np.ndarray, int], np.ndarray]

EPS = np.finfo(float).eps

GAUSS_ORDER = 16
GAUSS_NODES, GAUSS_WEIGHTS = roots_legendre(GAUSS_ORDER)

# Initial panels per edge and the deepest panel bisection allowed
INITIAL_PANELS = 4
MAX_PANEL_DEPTH = 40
MAX_PANELS_PER_SEGMENT = 1024

# Boxes with more zeros than this are split without trying Newton, whose
# cost grows with the square of the jet order
ISOLATE_MAX_COUNT = 4

# Clusters wider than this (relative to 1 + |center|) are never merged
CLUSTER_FACTOR = 10.0
CLUSTER_CAP = 1e-3

# Aberth corrections below this (relative to 1 + |z|) that stop shrinking
# are rounding noise
STALL_FACTOR = 1e-8


class ConvergenceError(Exception):
    """Indicate that simultaneous iteration did not converge."""

    def __init__(self, message: str, roots: np.ndarray, residual: float):
        super().__init__(message)
        self.roots = roots
        self.residual = residual


class BoundaryUnsafeError(Exception):
    """Indicate a suspected zero on or very near a contour."""


@dataclass(frozen=True)
class Rect:
    """A closed axis-aligned rectangle [lo.real, hi.real] x [lo.imag, hi.imag]."""

    lo: complex
    hi: complex

    def __post_init__(self):
        object.__setattr__(self, "lo", complex(self.lo))
        object.__setattr__(self, "hi", complex(self.hi))
        if not (self.lo.real < self.hi.real and self.lo.imag < self.hi.imag):
            raise ValueError(f"Malformed rectangle: lo={self.lo}, hi={self.hi}")

    @classmethod
    def from_bounds(cls, x0: float, x1: float, y0: float, y1: float) -> "Rect":
        """Build from x and y bounds."""
        return cls(complex(x0, y0), complex(x1, y1))

    @classmethod
    def square(cls, center: complex, half_width: float) -> "Rect":
        """Square of side 2 * half_width around center."""
        offset = complex(half_width, half_width)
        return cls(center - offset, center + offset)

    @property
    def width(self) -> float:
        return self.hi.real - self.lo.real

    @property
    def height(self) -> float:
        return self.hi.imag - self.lo.imag

    @property
    def center(self) -> complex:
        return (self.lo + self.hi) / 2

    @property
    def diameter(self) -> float:
        return abs(self.hi - self.lo)

    @property
    def corners(self) -> tuple[complex, complex, complex, complex]:
        """Corners in counterclockwise order, starting at lo."""
        return (
            self.lo,
            complex(self.hi.real, self.lo.imag),
            self.hi,
            complex(self.lo.real, self.hi.imag),
        )

    def contains(self, z, inflate: float = 0.0):
        """True where z lies in the rectangle grown by `inflate`."""
        z = np.asarray(z, dtype=complex)
        return (
            (z.real >= self.lo.real - inflate)
            & (z.real <= self.hi.real + inflate)
            & (z.imag >= self.lo.imag - inflate)
            & (z.imag <= self.hi.imag + inflate)
        )

    def contains_rect(self, other: "Rect") -> bool:
        """True if `other` lies inside this rectangle."""
        return bool(self.contains(other.lo) and self.contains(other.hi))

    def boundary_distance(self, z):
        """Distance from interior points to the boundary (negative outside)."""
        z = np.asarray(z, dtype=complex)
        return np.minimum.reduce([
            z.real - self.lo.real,
            self.hi.real - z.real,
            z.imag - self.lo.imag,
            self.hi.imag - z.imag,
        ])

    def shifted(self, offset: complex) -> "Rect":
        return Rect(self.lo + offset, self.hi + offset)

    def grown(self, margin: float) -> "Rect":
        offset = complex(margin, margin)
        return Rect(self.lo - offset, self.hi + offset)

    def quadrisect(self, split: Optional[complex] = None) -> tuple["Rect", ...]:
        """Split into four children sharing the lines through `split`."""
        split = self.center if split is None else complex(split)
        if not (
            self.lo.real < split.real < self.hi.real
            and self.lo.imag < split.imag < self.hi.imag
        ):
            raise ValueError(f"Split point {split} is outside {self}")

        return (
            Rect(self.lo, split),
            Rect(complex(split.real, self.lo.imag), complex(self.hi.real, split.imag)),
            Rect(complex(self.lo.real, split.imag), complex(split.real, self.hi.imag)),
            Rect(split, self.hi),
        )


@dataclass(frozen=True)
class RootSet:
    """Roots with multiplicities plus the worst normalized residual."""

    roots: tuple[tuple[complex, int], ...]
    residual: float = 0.0

    def __post_init__(self):
        roots = tuple(
            sorted(
                ((complex(location), int(mult)) for location, mult in self.roots),
                key=lambda item: (item[0].real, item[0].imag),
            )
        )
        if any(mult < 1 for _, mult in roots):
            raise ValueError(f"Multiplicities must be positive: {roots}")
        if self.residual < 0:
            raise ValueError(f"Residual must be nonnegative: {self.residual}")
        object.__setattr__(self, "roots", roots)

    @property
    def total(self) -> int:
        """Number of roots counted with multiplicity."""
        return sum(mult for _, mult in self.roots)

    @property
    def locations(self) -> np.ndarray:
        """Distinct root locations."""
        return np.array([location for location, _ in self.roots], dtype=complex)

    def expanded(self) -> np.ndarray:
        """Root locations repeated by multiplicity."""
        return np.repeat(self.locations, [mult for _, mult in self.roots])


def polynomial_function(p: Polynomial) -> JetFunction:
    """Jet-evaluable form of a coefficient polynomial."""

    def evaluate(z: np.ndarray, order: int) -> np.ndarray:
        return jet_array(p, z, order)

    return evaluate


def differentiated(f: JetFunction, m: int) -> JetFunction:
    """Jet-evaluable form of the m-th derivative of f."""
    if m < 0:
        raise ValueError(f"Derivative order must be nonnegative, got {m}")
    if m == 0:
        return f

    def evaluate(z: np.ndarray, order: int) -> np.ndarray:
        jets = f(z, order + m)[m:]
        scale = np.array([
            math.factorial(m + j) / math.factorial(j) for j in range(order + 1)
        ])
        return jets * scale.reshape((-1,) + (1,) * (jets.ndim - 1))

    return evaluate


def _fujiwara_bound(coeffs: np.ndarray) -> float:
    """Fujiwara's upper bound on the moduli of the roots."""
    degree = len(coeffs) - 1
    lead = coeffs[-1]
    terms = [
        abs(coeffs[degree - j] / lead) ** (1 / j) for j in range(1, degree)
    ]
    terms.append(abs(coeffs[0] / (2 * lead)) ** (1 / degree))
    return 2 * max(terms)


def _cluster(z: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Merge iterates that approximate a common multiple root."""
    unassigned = list(range(len(z)))
    clusters = []

    # Only iterates with close neighbors can form clusters
    reach = 2 * CLUSTER_CAP * (1 + np.abs(z))
    neighbors = (np.abs(z[:, None] - z[None, :]) <= reach[:, None]).sum(axis=1)

    for mult in range(int(neighbors.max(initial=1)), 1, -1):
        threshold = min(CLUSTER_FACTOR * tol ** (1 / mult), CLUSTER_CAP)
        for index in list(unassigned):
            if index not in unassigned or len(unassigned) < mult:
                continue
            pool = np.array(unassigned)
            order = np.argsort(np.abs(z[pool] - z[index]), kind="stable")
            members = pool[order[:mult]]
            center = z[members].mean()
            spread = np.abs(z[members] - center).max()
            if spread <= threshold * (1 + abs(center)):
                clusters.append((complex(center), mult))
                for member in members:
                    unassigned.remove(member)

    clusters.extend((complex(z[index]), 1) for index in unassigned)
    return clusters


def aberth_roots(
    p: Polynomial, tol: float = 1e-12, max_iter: int = 500
) -> RootSet:
    """
    All roots of `p` by Aberth-Ehrlich simultaneous iteration.

    A root iterate is frozen once |p(z)| is below the Horner rounding bound
    or its correction stops shrinking at rounding level. The residual
    |p(z)| / (1 + |z|)^n is only reported; it never stops the iteration.
    Clusters of iterates that approximate a multiple root are merged and
    reported with their multiplicity.
    """
    degree = p.degree
    if degree < 1:
        raise ValueError("aberth_roots needs a polynomial of degree >= 1")

    coeffs = p.array
    logger = logging.getLogger(__name__)

    if degree == 1:
        root = -coeffs[0] / coeffs[1]
        return RootSet(((root, 1),), 0.0)

    dp = derivative(p)
    abs_poly = Polynomial(tuple(np.abs(coeffs)))

    radius = _fujiwara_bound(coeffs) or 1.0
    angles = 2 * np.pi * np.arange(degree) / degree + 1 / GOLDEN_RATIO
    z = radius * np.exp(1j * angles)
    frozen = np.zeros(degree, dtype=bool)
    previous_step = np.full(degree, np.inf)

    def normalized_residual(points):
        return np.abs(eval_horner(p, points)) / (1 + np.abs(points)) ** degree

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for iteration in range(max_iter):
            active = np.flatnonzero(~frozen)
            if active.size == 0:
                logger.debug("Aberth converged after %d iterations", iteration)
                break

            za = z[active]
            values = eval_horner(p, za)
            rounding = 2 * degree * EPS * eval_horner(abs_poly, np.abs(za)).real
            done = np.abs(values) <= rounding
            frozen[active[done]] = True

            active = active[~done]
            if active.size == 0:
                continue

            za = z[active]
            ratio = values[~done] / eval_horner(dp, za)

            differences = za[:, None] - z[None, :]
            differences[np.arange(active.size), active] = np.inf
            differences[differences == 0] = np.inf
            repulsion = (1 / differences).sum(axis=1)

            step = ratio / (1 - ratio * repulsion)
            bad = ~np.isfinite(step)
            step[bad] = 1e-8 * (1 + np.abs(za[bad])) * np.exp(1j * GOLDEN_RATIO)

            z[active] = za - step
            size = np.abs(step)
            scale = 1 + np.abs(z[active])
            stalled = (size <= 4 * EPS * scale) | (
                (size >= previous_step[active]) & (size <= STALL_FACTOR * scale)
            )
            previous_step[active] = size
            frozen[active[stalled]] = True

        if not frozen.all():
            residual = float(normalized_residual(z[~frozen]).max())
            if residual > tol:
                raise ConvergenceError(
                    f"Aberth iteration did not converge in {max_iter} steps "
                    f"(residual {residual:.3g})",
                    z,
                    residual,
                )
            logger.debug(
                "Aberth stopped after %d iterations, residual %.3g", max_iter, residual
            )

    clusters = _cluster(z, tol)
    residual = float(
        max(normalized_residual(np.array([loc for loc, _ in clusters])))
    )
    return RootSet(tuple(clusters), residual)


def _panel_rule(starts: np.ndarray, ends: np.ndarray):
    """Gauss-Legendre nodes and complex weights for each segment."""
    half = (ends - starts)[:, None] / 2
    mid = (ends + starts)[:, None] / 2
    nodes = mid + half * GAUSS_NODES[None, :]
    weights = half * GAUSS_WEIGHTS[None, :]
    return nodes, weights


def _log_derivative_sums(f: JetFunction, starts, ends) -> np.ndarray:
    """Integral of f'/f over each straight segment (one batched evaluation)."""
    nodes, weights = _panel_rule(starts, ends)
    jets = f(nodes.ravel(), 1)
    values = jets[0].reshape(nodes.shape)
    slopes = jets[1].reshape(nodes.shape)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        integrand = slopes / values

    if np.any(values == 0) or not np.all(np.isfinite(integrand)):
        raise BoundaryUnsafeError("boundary-unsafe: zero or overflow on contour")

    return (integrand * weights).sum(axis=1)


def _segment_integrals(f: JetFunction, starts: np.ndarray, ends: np.ndarray):
    """Integrals of f'/f along straight segments by bisecting Gauss-Legendre panels."""
    fractions = np.linspace(0, 1, INITIAL_PANELS + 1)
    spans = (ends - starts)[:, None]
    panel_starts = (starts[:, None] + fractions[None, :-1] * spans).ravel()
    panel_ends = (starts[:, None] + fractions[None, 1:] * spans).ravel()
    owners = np.repeat(np.arange(starts.size), INITIAL_PANELS)
    estimates = _log_derivative_sums(f, panel_starts, panel_ends)

    totals = np.zeros(starts.size, dtype=complex)
    for depth in range(MAX_PANEL_DEPTH):
        mids = (panel_starts + panel_ends) / 2
        halves = _log_derivative_sums(
            f,
            np.concatenate((panel_starts, mids)),
            np.concatenate((mids, panel_ends)),
        )
        left, right = halves[: panel_starts.size], halves[panel_starts.size :]
        refined = left + right

        accepted = np.abs(refined - estimates) <= 1e-10 * np.maximum(
            1.0, np.abs(refined)
        )
        np.add.at(totals, owners[accepted], refined[accepted])

        pending = ~accepted
        if not pending.any():
            logging.getLogger(__name__).debug(
                "%d contour edges settled at panel depth %d", starts.size, depth
            )
            return totals

        if 2 * pending.sum() > MAX_PANELS_PER_SEGMENT * starts.size:
            break

        panel_starts = np.concatenate((panel_starts[pending], mids[pending]))
        panel_ends = np.concatenate((mids[pending], panel_ends[pending]))
        owners = np.concatenate((owners[pending], owners[pending]))
        estimates = np.concatenate((left[pending], right[pending]))

    raise BoundaryUnsafeError("boundary-unsafe: panel refinement diverged on an edge")


class EdgeIntegrals:
    """
    Memoized integrals of f'/f along rectangle edges.

    Each edge is integrated once in a canonical direction; boxes sharing an
    edge reuse it with the sign of their own orientation.
    """

    def __init__(self, f: JetFunction):
        self.f = f
        self.cache: dict[tuple[complex, complex], complex] = {}

    @staticmethod
    def _canonical(
        start: complex, end: complex
    ) -> tuple[tuple[complex, complex], int]:
        if (start.real, start.imag) <= (end.real, end.imag):
            return (start, end), 1
        return (end, start), -1

    def windings(self, rects) -> np.ndarray:
        """Winding values (1 / 2 pi i) * integral of f'/f around each rectangle."""
        keys, signs = [], []
        for rect in rects:
            corners = rect.corners
            for index in range(4):
                key, sign = self._canonical(corners[index], corners[(index + 1) % 4])
                keys.append(key)
                signs.append(sign)

        missing = [key for key in dict.fromkeys(keys) if key not in self.cache]
        if missing:
            values = _segment_integrals(
                self.f,
                np.array([start for start, _ in missing]),
                np.array([end for _, end in missing]),
            )
            self.cache.update(zip(missing, values))

        integrals = np.array([self.cache[key] for key in keys]) * np.array(signs)
        return integrals.reshape(-1, 4).sum(axis=1) / (2j * np.pi)

    def count(self, rect: Rect) -> int:
        """Number of zeros of f inside rect."""
        return _winding_count(self.windings([rect])[0], rect)


def _winding_count(winding: complex, rect: Rect) -> int:
    nearest = round(winding.real)
    if abs(winding.real - nearest) >= 0.25 or abs(winding.imag) >= 0.25:
        raise BoundaryUnsafeError(
            f"boundary-unsafe: winding value {winding:.4f} around {rect}"
        )
    return int(nearest)


def count_zeros_winding(f: JetFunction, rect: Rect) -> int:
    """
    Number of zeros of f inside rect by the argument principle.

    Raises BoundaryUnsafeError when the winding value cannot be brought
    within 0.25 of an integer.
    """
    return EdgeIntegrals(f).count(rect)


def _newton(
    f: JetFunction, box: Rect, multiplicity: int, max_iter: int = 60
) -> tuple[complex, bool]:
    """Newton on f^(multiplicity - 1) from the box center, abandoned off the box."""
    z = box.center
    for _ in range(max_iter):
        jet = f(np.array([z]), multiplicity)[:, 0]
        numerator = jet[multiplicity - 1]
        denominator = multiplicity * jet[multiplicity]
        if denominator == 0 or not np.isfinite(denominator):
            return z, False

        step = complex(numerator / denominator)
        if not np.isfinite(step):
            return z, False
        z -= step
        if abs(step) <= 1e-13 * (1 + abs(z)):
            return z, True
        if not box.contains(z, box.diameter):
            return z, False
    return z, False


def _normalized_value(f: JetFunction, z: complex, multiplicity: int) -> float:
    """|f(z)| relative to the size of its jet."""
    jet = np.abs(f(np.array([z]), multiplicity)[:, 0])
    return float(jet[0] / max(jet.sum(), np.finfo(float).tiny))


def _isolate(edges: EdgeIntegrals, box: Rect, count: int, tol: float):
    """Try to pin down the `count` zeros in box as a single Newton root."""
    if box.diameter <= tol:
        return box.center, count
    if count > ISOLATE_MAX_COUNT:
        return None

    root, converged = _newton(edges.f, box, count)
    if not converged or not box.contains(root):
        return None

    if count > 1:
        # The Newton limit must carry all the zeros, not just a critical point
        tight = Rect.square(root, max(100 * tol, 1e-4 * box.diameter))
        try:
            if edges.count(tight) != count:
                return None
        except BoundaryUnsafeError:
            return None

    return root, count


def _split(edges: EdgeIntegrals, box: Rect, count: int) -> list[tuple[Rect, int]]:
    """Quadrisect box, jittering the split point until the counts add up."""
    logger = logging.getLogger(__name__)
    offsets = [0j] + jitter_offsets(box.diameter * 1e-3)

    for attempt, offset in enumerate(offsets):
        children = box.quadrisect(box.center + offset)
        try:
            windings = edges.windings(children)
            counts = [
                _winding_count(winding, child)
                for winding, child in zip(windings, children)
            ]
        except BoundaryUnsafeError as err:
            logger.debug("Split attempt %d of %s failed: %s", attempt, box, err)
            continue

        if sum(counts) != count:
            logger.debug(
                "Split attempt %d of %s: children count %s != %d",
                attempt,
                box,
                counts,
                count,
            )
            continue

        return list(zip(children, counts))

    raise BoundaryUnsafeError(
        f"boundary-unsafe: could not subdivide {box} after {len(offsets) - 1} jitters"
    )


def locate_zeros_subdivision(
    f: JetFunction, rect: Rect, tol: float = 1e-10
) -> RootSet:
    """
    Locate all zeros of f in rect by recursive quadrisection.

    Boxes without zeros are discarded. A box holding at most
    ISOLATE_MAX_COUNT zeros is resolved once Newton iteration from its
    center lands inside it (on f^(mu - 1) for mu zeros, verified by a tight
    contour); any box is resolved once its diameter drops below tol. Edge
    integrals are shared between neighboring boxes.
    """
    edges = EdgeIntegrals(f)
    total = edges.count(rect)
    logging.getLogger(__name__).debug("%d zeros in %s", total, rect)

    found = []
    pending = [(rect, total)] if total else []
    while pending:
        box, count = pending.pop()
        isolated = _isolate(edges, box, count, tol)
        if isolated is not None:
            found.append(isolated)
            continue
        pending.extend(item for item in _split(edges, box, count) if item[1] > 0)

    residual = max(
        (_normalized_value(f, location, mult) for location, mult in found),
        default=0.0,
    )
    return RootSet(tuple(found), residual)
