"""
Finite divisors on a window, their pairing with test functions, and the
sparsity and convergence diagnostics built on them.
"""

import logging

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .rootfind import (
    BoundaryUnsafeError,
    Rect,
    RootSet,
    count_zeros_winding,
    differentiated,
    locate_zeros_subdivision,
)
from .utils import jitter_offsets, map_ordered

if TYPE_CHECKING:
    from .families import FamilyHandle


# Divisor points closer than this are the same point
MERGE_TOL = 1e-12


class SupportEscapesWindowError(Exception):
    """Indicate a test function whose support leaves the divisor's window."""


def _merge(entries: Iterable[tuple[complex, int]], tol: float) -> list[list]:
    merged: list[list] = []
    for point, value in entries:
        for item in merged:
            if abs(item[0] - point) <= tol:
                item[1] += value
                break
        else:
            merged.append([point, value])
    return merged


@dataclass(frozen=True)
class Divisor:
    """Finitely many points of a window carrying nonzero integers."""

    window: Rect
    entries: tuple[tuple[complex, int], ...] = ()

    def __post_init__(self):
        cleaned = []
        for point, value in _merge(
            ((complex(point), int(value)) for point, value in self.entries), MERGE_TOL
        ):
            if value == 0:
                continue
            if not self.window.contains(point):
                raise ValueError(f"Divisor point {point} is outside {self.window}")
            cleaned.append((point, value))

        cleaned.sort(key=lambda item: (item[0].real, item[0].imag))
        object.__setattr__(self, "entries", tuple(cleaned))

    @classmethod
    def from_mapping(cls, window: Rect, mapping: dict) -> "Divisor":
        return cls(window, tuple(mapping.items()))

    @property
    def points(self) -> np.ndarray:
        return np.array([point for point, _ in self.entries], dtype=complex)

    @property
    def values(self) -> np.ndarray:
        return np.array([value for _, value in self.entries], dtype=int)

    @property
    def total(self) -> int:
        """Signed total sum of the values."""
        return int(self.values.sum())

    @property
    def positive_total(self) -> int:
        return int(self.values[self.values > 0].sum())

    @property
    def negative_total(self) -> int:
        return int(-self.values[self.values < 0].sum())

    def is_zero(self) -> bool:
        return not self.entries

    def positive_part(self) -> "Divisor":
        return Divisor(self.window, tuple(e for e in self.entries if e[1] > 0))

    def negative_part(self) -> "Divisor":
        """Absolute value of the negative entries, as a nonnegative divisor."""
        return Divisor(self.window, tuple((p, -v) for p, v in self.entries if v < 0))

    def expanded(self) -> np.ndarray:
        """Points repeated by the absolute value of their entries."""
        return np.repeat(self.points, np.abs(self.values))

    def merged(self, tol: float) -> "Divisor":
        """Combine entries closer than tol (values add, zeros vanish)."""
        return Divisor(self.window, tuple(
            (point, value) for point, value in _merge(self.entries, tol)
        ))

    def rewindow(self, window: Rect) -> "Divisor":
        """Restrict to the entries lying in another window."""
        return Divisor(
            window, tuple(e for e in self.entries if window.contains(e[0]))
        )

    def _check_window(self, other: "Divisor"):
        if other.window != self.window:
            raise ValueError(f"Windows differ: {self.window} != {other.window}")

    def __add__(self, other: "Divisor") -> "Divisor":
        self._check_window(other)
        return Divisor(self.window, self.entries + other.entries)

    def __neg__(self) -> "Divisor":
        return Divisor(self.window, tuple((p, -v) for p, v in self.entries))

    def __sub__(self, other: "Divisor") -> "Divisor":
        return self + (-other)

    def __mul__(self, factor: int) -> "Divisor":
        if int(factor) != factor:
            raise ValueError(f"Divisors scale by integers only, got {factor}")
        return Divisor(self.window, tuple((p, v * int(factor)) for p, v in self.entries))

    __rmul__ = __mul__


@dataclass(frozen=True)
class TestFunction:
    """Radial ramp: 1 on the inner disk, 0 outside the outer disk."""

    __test__ = False

    center: complex
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError(
                f"Need 0 < inner < outer radius, got {self.inner_radius}, "
                f"{self.outer_radius}"
            )

    def __call__(self, z):
        distance = np.abs(np.asarray(z, dtype=complex) - self.center)
        ramp = (self.outer_radius - distance) / (self.outer_radius - self.inner_radius)
        values = np.clip(ramp, 0.0, 1.0)
        return float(values) if np.ndim(values) == 0 else values

    @property
    def support(self) -> Rect:
        """Bounding square of the closed support disk."""
        return Rect.square(self.center, self.outer_radius)


def divisor_from_rootset(rs: RootSet, window: Rect, sign: int = +1) -> Divisor:
    """Divisor of the roots inside window, valued sign * multiplicity."""
    if sign not in (+1, -1):
        raise ValueError(f"Sign must be +1 or -1, got {sign}")
    return Divisor(window, tuple(
        (location, sign * mult)
        for location, mult in rs.roots
        if window.contains(location)
    ))


def pair(xi: Divisor, f: TestFunction) -> float:
    """The pairing xi(f) = sum xi(z) f(z)."""
    if not xi.window.contains_rect(f.support):
        raise SupportEscapesWindowError(
            f"support-escapes-window: {f} is not supported in {xi.window}"
        )
    if xi.is_zero():
        return 0.0
    return float((xi.values * f(xi.points)).sum())


@dataclass(frozen=True)
class Incomparable:
    """Divisors whose positive or negative totals differ."""

    positive: tuple[int, int]
    negative: tuple[int, int]


MatchingDistance = Union[float, Incomparable]


def _matching_cost(left: np.ndarray, right: np.ndarray) -> float:
    if left.size == 0:
        return 0.0
    cost = np.abs(left[:, None] - right[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def matching_distance(a: Divisor, b: Divisor) -> MatchingDistance:
    """
    Minimum-cost perfect matching distance between two divisors.

    Positive and negative parts are matched separately; differing totals give
    an Incomparable value.
    """
    a._check_window(b)

    if (a.positive_total, a.negative_total) != (b.positive_total, b.negative_total):
        return Incomparable(
            (a.positive_total, b.positive_total),
            (a.negative_total, b.negative_total),
        )

    return _matching_cost(
        a.positive_part().expanded(), b.positive_part().expanded()
    ) + _matching_cost(a.negative_part().expanded(), b.negative_part().expanded())


def _with_window_jitter(window: Rect, action: Callable[[Rect], object]):
    """Run action on window, shifting it deterministically if it is unsafe."""
    try:
        return action(window), window
    except BoundaryUnsafeError as err:
        last_error = err

    for attempt, offset in enumerate(jitter_offsets(window.diameter * 1e-3), 1):
        logging.getLogger(__name__).debug(
            "Window %s unsafe (%s); jitter attempt %d", window, last_error, attempt
        )
        shifted = window.shifted(offset)
        try:
            return action(shifted), shifted
        except BoundaryUnsafeError as err:
            last_error = err

    raise last_error


@dataclass(frozen=True)
class SparsityReport:
    """Zero counts of q_k in a window for several k."""

    window: Rect
    rows: tuple[tuple[int, int], ...]

    @property
    def max(self) -> int:
        return max(count for _, count in self.rows)

    def to_json(self) -> dict:
        return {
            "rows": [{"k": k, "count": count} for k, count in self.rows],
            "max": self.max,
        }


def sparsity_report(
    fam: "FamilyHandle", window: Rect, ks: Sequence[int], workers: int = 1
) -> SparsityReport:
    """Count the zeros of each q_k in the window (root-sparsity diagnostic)."""

    def count(k: int) -> tuple[int, int]:
        f = fam.jet_function(k)
        value, _ = _with_window_jitter(window, lambda w: count_zeros_winding(f, w))
        logging.getLogger(__name__).info("k=%d: %d zeros in %s", k, value, window)
        return k, value

    return SparsityReport(window, tuple(map_ordered(count, ks, workers)))


def signed_divisor(
    fam: "FamilyHandle", k: int, m: int, window: Rect, tol: float = 1e-10
) -> Divisor:
    """xi_{k,m} - xi_k on the window, located by subdivision."""
    f = fam.jet_function(k)
    zeros = divisor_from_rootset(locate_zeros_subdivision(f, window, tol), window)
    if m == 0:
        return zeros - zeros

    derived = divisor_from_rootset(
        locate_zeros_subdivision(differentiated(f, m), window, tol), window
    )
    # Independent Newton polishes of one multiple zero differ by rounding
    return (derived - zeros).merged(max(1e-8, 100 * tol))


@dataclass(frozen=True)
class ConvergenceRow:
    """One k of a divisor convergence check."""

    k: int
    count: int
    target_count: int
    distance: Optional[float]
    divisor: Divisor = field(compare=False, repr=False)

    @property
    def count_match(self) -> bool:
        return self.distance is not None

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "count": self.count,
            "count_match": self.count_match,
            "distance": self.distance,
        }


def convergence_check(
    fam: "FamilyHandle",
    limit_crit: Divisor,
    m: int,
    window: Rect,
    ks: Sequence[int],
    tol: float = 1e-10,
    workers: int = 1,
) -> list[ConvergenceRow]:
    """
    Compare xi_{k,m} - xi_k with m times the critical divisor of the limit.

    Distances are None where the divisor totals disagree.
    """
    if limit_crit.negative_total:
        raise ValueError("The limit critical divisor must be nonnegative")
    if m < 0:
        raise ValueError(f"Derivative order must be nonnegative, got {m}")

    def row(k: int) -> ConvergenceRow:
        signed, used = _with_window_jitter(
            window, lambda w: signed_divisor(fam, k, m, w, tol)
        )
        target = (m * limit_crit).rewindow(used)
        distance = matching_distance(signed, target)
        if isinstance(distance, Incomparable):
            logging.getLogger(__name__).info(
                "k=%d: totals differ (%s)", k, distance
            )
            distance = None
        else:
            logging.getLogger(__name__).info("k=%d: distance %.3g", k, distance)
        return ConvergenceRow(k, signed.positive_total, target.total, distance, signed)

    return map_ordered(row, ks, workers)


@dataclass(frozen=True)
class PotentialRow:
    """One k of a potential convergence report."""

    k: int
    d_k: Optional[float]
    max_deviation: Optional[float]
    at_root: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "d_k": self.d_k,
            "max_deviation": self.max_deviation,
            "at_root": list(self.at_root),
        }


def potential_convergence_report(
    fam: "FamilyHandle",
    target_p: Callable[[complex], float],
    probes: Sequence[complex],
    ks: Sequence[int],
    workers: int = 1,
) -> list[PotentialRow]:
    """
    Deviation of d_k + p_{mu_k} from target_p over the probes.

    p_{mu_k} = log|q_k| / n_k is taken in log space; d_k anchors the first
    probe. Probes at roots of q_k are reported and skipped.
    """
    probes = [complex(probe) for probe in probes]
    if len(probes) < 2:
        raise ValueError("Need an anchor probe and at least one more probe")
    targets = np.array([target_p(probe) for probe in probes], dtype=float)

    def row(k: int) -> PotentialRow:
        values = np.array(
            [fam.log_modulus(k, probe) for probe in probes], dtype=float
        ) / fam.degree(k)
        at_root = tuple(int(i) for i in np.flatnonzero(~np.isfinite(values)))

        if 0 in at_root:
            logging.getLogger(__name__).warning("k=%d: anchor probe is at a root", k)
            return PotentialRow(k, None, None, at_root)

        d_k = float(targets[0] - values[0])
        usable = [i for i in range(1, len(probes)) if i not in at_root]
        deviation = max(
            (abs(d_k + values[i] - targets[i]) for i in usable), default=0.0
        )
        return PotentialRow(k, d_k, float(deviation), at_root)

    return map_ordered(row, ks, workers)


@dataclass(frozen=True)
class CorollaryRow:
    """xi_{k,m} - xi_k totals for one (k, m)."""

    k: int
    m: int
    positive_total: int
    negative_total: int

    @property
    def vanishes(self) -> bool:
        return self.positive_total == 0 and self.negative_total == 0


def corollary_check(
    fam: "FamilyHandle",
    window: Rect,
    ms: Sequence[int],
    ks: Sequence[int],
    workers: int = 1,
) -> list[CorollaryRow]:
    """Check that xi_{k,m} - xi_k is the zero divisor on the window."""

    def rows_for(k: int) -> list[CorollaryRow]:
        rows = []
        for m in ms:
            signed, _ = _with_window_jitter(
                window, lambda w, m=m: signed_divisor(fam, k, m, w)
            )
            rows.append(CorollaryRow(k, m, signed.positive_total, signed.negative_total))
        return rows

    return [row for rows in map_ordered(rows_for, ks, workers) for row in rows]
