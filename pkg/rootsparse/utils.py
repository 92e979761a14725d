"""Utility functions."""

import argparse
import math

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np
from scipy.spatial import ConvexHull, QhullError


GOLDEN_RATIO = (1 + math.sqrt(5)) / 2

# Number of deterministic jitter attempts before giving up on a contour
JITTER_ATTEMPTS = 8


def jitter_offsets(scale: float, attempts: int = JITTER_ATTEMPTS) -> list[complex]:
    """
    Return deterministic offsets for perturbing contours off a zero.

    The offsets are golden-ratio multiples of `scale`, reduced modulo one and
    centered, with the real and imaginary parts decorrelated.
    """
    offsets = []
    for attempt in range(1, attempts + 1):
        real = math.fmod(attempt * GOLDEN_RATIO, 1.0) - 0.5
        imag = math.fmod(attempt * GOLDEN_RATIO**2, 1.0) - 0.5
        offsets.append(scale * complex(real, imag))
    return offsets


def in_convex_hull(
    points, hull_points, inflate: float = 0.0
) -> np.ndarray:
    """
    Return a boolean mask of `points` lying in the convex hull of `hull_points`.

    The hull is inflated by `inflate` in every outward normal direction.
    Degenerate (collinear or single-point) hulls are handled as segments.
    """
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    hull_points = np.unique(np.atleast_1d(np.asarray(hull_points, dtype=complex)))

    if hull_points.size == 1:
        return np.abs(points - hull_points[0]) <= inflate

    try:
        hull = ConvexHull(np.column_stack((hull_points.real, hull_points.imag)))
    except (QhullError, ValueError):
        # All points are collinear: test distance to the spanning segment
        direction = hull_points - hull_points[0]
        unit = direction[np.argmax(np.abs(direction))]
        unit = unit / abs(unit)
        along = ((hull_points - hull_points[0]) / unit).real
        start = hull_points[0] + unit * along.min()
        end = hull_points[0] + unit * along.max()
        return segment_distance(points, start, end) <= inflate

    # Each facet equation is normal . x + offset <= 0 with a unit normal
    normals = hull.equations[:, :2]
    offsets = hull.equations[:, 2]
    signed = (
        np.outer(points.real, normals[:, 0])
        + np.outer(points.imag, normals[:, 1])
        + offsets
    )
    return np.all(signed <= inflate, axis=1)


def segment_distance(points, start: complex, end: complex) -> np.ndarray:
    """Return the distance from each point to the segment [start, end]."""
    points = np.asarray(points, dtype=complex)
    direction = end - start
    if direction == 0:
        return np.abs(points - start)

    along = ((points - start) * np.conj(direction)).real / abs(direction) ** 2
    nearest = start + np.clip(along, 0.0, 1.0) * direction
    return np.abs(points - nearest)


T = TypeVar("T")
R = TypeVar("R")


def map_ordered(
    function: Callable[[T], R], items: Iterable[T], workers: int = 1
) -> list[R]:
    """Apply function to every item on up to `workers` threads, keeping order."""
    if workers <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))


def format_decimal(value: float) -> str:
    """Format a float with 17 significant digits (round-trippable)."""
    return format(float(value), ".17g")


def str_to_bool(value: str) -> bool:
    """Convert a string to a boolean (case-insensitive)."""
    truthy_values = {"true", "t", "yes", "y", "1"}
    falsey_values = {"false", "f", "no", "n", "0"}

    # Normalize input to lowercase
    value = value.lower()

    if value in truthy_values:
        return True

    if value in falsey_values:
        return False

    raise argparse.ArgumentTypeError(f"Invalid boolean value: '{value}'")
