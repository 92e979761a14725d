"""Logarithmic potentials of finitely supported measures."""

import logging

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

from .divisor import Divisor, divisor_from_rootset
from .poly import Polynomial, from_roots
from .rootfind import BoundaryUnsafeError, Rect, RootSet, aberth_roots
from .utils import segment_distance


# Paths closer than this to an atom are rejected
SUPPORT_CLEARANCE = 1e-12


class PoleError(Exception):
    """Indicate evaluation of a Cauchy transform at one of its atoms."""


class PathThroughSupportError(Exception):
    """Indicate an integration path that touches the support of the measure."""


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many positive point masses in the plane."""

    atoms: tuple[tuple[complex, float], ...]

    def __post_init__(self):
        merged: dict[complex, float] = {}
        for point, weight in self.atoms:
            point, weight = complex(point), float(weight)
            if not (weight > 0 and np.isfinite(weight)):
                raise ValueError(f"Atom weights must be positive, got {weight}")
            if not np.isfinite(point):
                raise ValueError(f"Atom location must be finite, got {point}")
            merged[point] = merged.get(point, 0.0) + weight

        if not merged:
            raise ValueError("A measure needs at least one atom")
        object.__setattr__(self, "atoms", tuple(merged.items()))

    @classmethod
    def uniform(cls, points: Sequence[complex]) -> "DiscreteMeasure":
        """Probability measure giving each point equal weight."""
        points = list(points)
        return cls(tuple((point, 1 / len(points)) for point in points))

    @classmethod
    def from_arrays(cls, points, weights) -> "DiscreteMeasure":
        """Build from parallel arrays of locations and weights."""
        return cls(tuple(zip(np.ravel(points), np.ravel(weights))))

    @property
    def points(self) -> np.ndarray:
        return np.array([point for point, _ in self.atoms], dtype=complex)

    @property
    def weights(self) -> np.ndarray:
        return np.array([weight for _, weight in self.atoms], dtype=float)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: float = 1e-12) -> bool:
        """True if the total mass is one within tol."""
        return abs(self.mass - 1) <= tol


@dataclass(frozen=True)
class Polyline:
    """A piecewise straight path through at least two vertices."""

    vertices: tuple[complex, ...]

    def __post_init__(self):
        vertices = tuple(complex(vertex) for vertex in self.vertices)
        if len(vertices) < 2:
            raise ValueError("A polyline needs at least two vertices")
        if any(start == end for start, end in zip(vertices, vertices[1:])):
            raise ValueError(f"Consecutive polyline vertices coincide: {vertices}")
        object.__setattr__(self, "vertices", vertices)

    def segments(self) -> list[tuple[complex, complex]]:
        return list(zip(self.vertices, self.vertices[1:]))


@dataclass(frozen=True)
class Circle:
    """The circle |z - center| = radius."""

    radius: float
    center: complex = 0j

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"Circle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Interval:
    """The real segment [a, b]."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"Interval needs a < b, got [{self.a}, {self.b}]")


Shape = Union[Circle, Interval]


def _scalar_or_array(values, z):
    return float(values) if np.ndim(z) == 0 else values


def potential_at(mu: DiscreteMeasure, z):
    """p(z) = sum w log|z - a|; -inf exactly at atoms."""
    z = np.asarray(z, dtype=complex)
    distances = np.abs(z[..., None] - mu.points)
    with np.errstate(divide="ignore"):
        values = (np.log(distances) * mu.weights).sum(axis=-1)
    return _scalar_or_array(values, z)


def cauchy_transform(mu: DiscreteMeasure, z):
    """p'(z) = sum w / (z - a), the Cauchy transform of mu."""
    z_array = np.asarray(z, dtype=complex)
    differences = z_array[..., None] - mu.points
    if np.any(differences == 0):
        raise PoleError(f"pole: {z} is an atom of the measure")

    values = (mu.weights / differences).sum(axis=-1)
    return complex(values) if np.ndim(z) == 0 else values


def _check_clearance(mu: DiscreteMeasure, start: complex, end: complex):
    clearance = segment_distance(mu.points, start, end)
    if np.any(clearance <= SUPPORT_CLEARANCE):
        raise PathThroughSupportError(
            f"path-through-support: segment {start} -> {end} touches an atom"
        )


def integrate_transform(
    mu: DiscreteMeasure, path: Polyline, method: str = "exact"
) -> complex:
    """
    Integral of the Cauchy transform of mu along the polyline.

    The real part equals p(end) - p(start). `exact` sums principal
    logarithms of the endpoint ratios per straight segment; `quadrature`
    uses adaptive scipy quadrature.
    """
    if method not in ("exact", "quadrature"):
        raise ValueError(f"Unknown integration method `{method}`")

    total = 0j
    for start, end in path.segments():
        _check_clearance(mu, start, end)

        if method == "exact":
            # A straight segment subtends less than pi from any atom off it
            ratios = (end - mu.points) / (start - mu.points)
            total += complex((mu.weights * np.log(ratios)).sum())
        else:
            value, _ = integrate.quad(
                lambda t, a=start, b=end: cauchy_transform(mu, a + t * (b - a))
                * (b - a),
                0.0,
                1.0,
                complex_func=True,
                epsabs=1e-13,
                epsrel=1e-12,
                limit=200,
            )
            total += value

    return total


def critical_numerator(mu: DiscreteMeasure) -> Polynomial:
    """Numerator sum_i w_i prod_{j != i} (z - a_j) of the Cauchy transform."""
    points, weights = mu.points, mu.weights
    numerator = np.zeros(len(points), dtype=complex)
    for index, weight in enumerate(weights):
        others = np.delete(points, index)
        numerator = npoly.polyadd(numerator, weight * from_roots(others).array)
    return Polynomial.from_array(numerator)


def potential_critical_points(mu: DiscreteMeasure, window: Rect) -> Divisor:
    """
    Zeros of the Cauchy transform of mu in the window, as a nonnegative divisor.

    Raises BoundaryUnsafeError when a zero lies on the window boundary.
    """
    if len(mu.atoms) == 1:
        return Divisor(window, ())

    roots = aberth_roots(critical_numerator(mu))
    margin = 1e-9 * window.diameter

    kept = []
    for location, mult in roots.roots:
        if abs(window.boundary_distance(location)) <= margin:
            raise BoundaryUnsafeError(
                f"boundary-unsafe: critical point {location} on the edge of {window}"
            )
        if np.min(np.abs(mu.points - location)) <= margin:
            logging.getLogger(__name__).debug(
                "Dropping numerator root %s that cancels with an atom", location
            )
            continue
        kept.append((location, mult))

    return divisor_from_rootset(RootSet(tuple(kept), roots.residual), window, +1)


def discrete_energy(points: Sequence[complex]) -> float:
    """Off-diagonal mean of log|p_i - p_j|; -inf for coincident points."""
    points = np.asarray(points, dtype=complex)
    count = points.size
    if count < 2:
        raise ValueError("discrete_energy needs at least two points")

    distances = np.abs(points[:, None] - points[None, :])
    off_diagonal = ~np.eye(count, dtype=bool)
    with np.errstate(divide="ignore"):
        logs = np.log(distances[off_diagonal])
    return float(logs.sum() / (count * (count - 1)))


def capacity_estimate(points: Sequence[complex]) -> float:
    """Transfinite-diameter estimate exp(discrete_energy(points))."""
    return float(np.exp(discrete_energy(points)))


def leja_points(candidates: Sequence[complex], n: int) -> list[complex]:
    """
    Greedy Leja sequence of length n drawn from the candidates.

    The first point has maximal modulus; each next point maximizes the
    product of distances to the points already chosen (ties go to the
    first candidate).
    """
    candidates = np.asarray(candidates, dtype=complex)
    if n < 1:
        raise ValueError(f"Need a positive number of points, got {n}")
    if candidates.size < n:
        raise ValueError(f"Only {candidates.size} candidates for {n} points")

    chosen = [int(np.argmax(np.abs(candidates)))]
    log_products = np.zeros(candidates.size)

    with np.errstate(divide="ignore"):
        for _ in range(n - 1):
            log_products += np.log(np.abs(candidates - candidates[chosen[-1]]))
            chosen.append(int(np.argmax(log_products)))

    return [complex(candidates[index]) for index in chosen]


def model_equilibrium(shape: Shape, n: int) -> DiscreteMeasure:
    """Quadrature surrogate of the equilibrium measure of a circle or interval."""
    if n < 2:
        raise ValueError(f"Need at least two nodes, got {n}")

    if isinstance(shape, Circle):
        nodes = shape.center + shape.radius * np.exp(2j * np.pi * np.arange(n) / n)
    elif isinstance(shape, Interval):
        j = np.arange(1, n + 1)
        nodes = (shape.a + shape.b) / 2 + (shape.b - shape.a) / 2 * np.cos(
            (2 * j - 1) * np.pi / (2 * n)
        )
    else:
        raise TypeError(f"Unsupported shape {shape!r}")

    return DiscreteMeasure.from_arrays(nodes, np.full(n, 1 / n))


def model_energy(shape: Shape) -> float:
    """Energy I(w) of the equilibrium measure of the model set."""
    if isinstance(shape, Circle):
        return float(np.log(shape.radius))
    if isinstance(shape, Interval):
        return float(np.log((shape.b - shape.a) / 4))
    raise TypeError(f"Unsupported shape {shape!r}")


def model_capacity(shape: Shape) -> float:
    """Logarithmic capacity exp(I(w)) of the model set."""
    return float(np.exp(model_energy(shape)))


def model_green(shape: Shape, z):
    """Green's function of the model set's exterior with pole at infinity."""
    z = np.asarray(z, dtype=complex)
    if isinstance(shape, Circle):
        with np.errstate(divide="ignore"):
            values = np.maximum(np.log(np.abs(z - shape.center) / shape.radius), 0.0)
    elif isinstance(shape, Interval):
        zeta = (2 * z - shape.a - shape.b) / (shape.b - shape.a)
        # Product of principal roots is the branch behaving like zeta at infinity
        values = np.log(np.abs(zeta + np.sqrt(zeta - 1) * np.sqrt(zeta + 1)))
    else:
        raise TypeError(f"Unsupported shape {shape!r}")
    return _scalar_or_array(values, z)


def model_potential(shape: Shape, z):
    """Equilibrium potential p_w = g + I(w) of the model set."""
    return model_green(shape, z) + model_energy(shape)
