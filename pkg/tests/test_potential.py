"""Tests for the potential module."""

import math

import numpy as np
import pytest

from rootsparse.divisor import Divisor
from rootsparse.potential import (
    Circle,
    DiscreteMeasure,
    Interval,
    PathThroughSupportError,
    PoleError,
    Polyline,
    capacity_estimate,
    cauchy_transform,
    critical_numerator,
    discrete_energy,
    integrate_transform,
    leja_points,
    model_capacity,
    model_energy,
    model_equilibrium,
    model_green,
    model_potential,
    potential_at,
    potential_critical_points,
)
from rootsparse.rootfind import Rect


SYMMETRIC = DiscreteMeasure(((-1, 0.5), (1, 0.5)))
HALF_SQUARE = Rect.from_bounds(-0.5, 0.5, -0.5, 0.5)


def random_measure(rng, size=8) -> DiscreteMeasure:
    points = rng.uniform(-1, 1, size) + 1j * rng.uniform(-1, 1, size)
    weights = rng.uniform(0.1, 1, size)
    return DiscreteMeasure.from_arrays(points, weights / weights.sum())


def roots_of_unity(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


@pytest.mark.parametrize(
    "atoms",
    [
        (),
        ((0, 0),),
        ((0, -1),),
        ((complex("inf"), 1),),
    ],
)
def test_invalid_measures(atoms):
    """Measures need at least one finite atom with positive weight."""
    with pytest.raises(ValueError):
        DiscreteMeasure(atoms)


def test_measure_merges_repeated_atoms():
    """Repeated locations add their weights."""
    mu = DiscreteMeasure(((1, 0.25), (1, 0.25), (2, 0.5)))
    assert len(mu.atoms) == 2
    assert mu.is_probability()
    assert DiscreteMeasure.uniform([1, 2, 3, 4]).weights.tolist() == [0.25] * 4


def test_polyline_validation():
    """Polylines need two distinct consecutive vertices."""
    with pytest.raises(ValueError):
        Polyline((1,))
    with pytest.raises(ValueError):
        Polyline((1, 1, 2))
    assert Polyline((0, 1, 1j)).segments() == [(0, 1), (1, 1j)]


@pytest.mark.parametrize(
    "mu,z,expected",
    [
        (DiscreteMeasure(((0, 1),)), math.e, 1.0),
        (SYMMETRIC, 0, 0.0),
        (DiscreteMeasure.uniform(roots_of_unity(16)), 2, math.log(2**16 - 1) / 16),
    ],
)
def test_potential_at(mu, z, expected):
    """Potentials of point masses."""
    assert potential_at(mu, z) == pytest.approx(expected, abs=1e-12)


def test_potential_at_atom():
    """The potential is -inf exactly at an atom."""
    assert potential_at(SYMMETRIC, 1) == -math.inf
    values = potential_at(SYMMETRIC, np.array([1, 0]))
    assert values[0] == -math.inf
    assert values[1] == pytest.approx(0)


@pytest.mark.parametrize(
    "mu,z,expected",
    [
        (DiscreteMeasure(((0, 1),)), 2j, -0.5j),
        (SYMMETRIC, 2, 2 / 3),
    ],
)
def test_cauchy_transform(mu, z, expected):
    """Cauchy transforms of point masses."""
    assert cauchy_transform(mu, z) == pytest.approx(expected)


def test_cauchy_transform_pole():
    """Evaluating at an atom is an error."""
    with pytest.raises(PoleError, match="pole"):
        cauchy_transform(SYMMETRIC, -1)


def test_cauchy_transform_is_gradient():
    """The transform is (d/dx - i d/dy) of the potential."""
    rng = np.random.default_rng(2)
    step = 1e-6
    for _ in range(100):
        mu = random_measure(rng)
        z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if np.min(np.abs(mu.points - z)) < 0.05:
            continue
        dx = (potential_at(mu, z + step) - potential_at(mu, z - step)) / (2 * step)
        dy = (potential_at(mu, z + 1j * step) - potential_at(mu, z - 1j * step)) / (
            2 * step
        )
        assert abs(cauchy_transform(mu, z) - (dx - 1j * dy)) < 1e-5


@pytest.mark.parametrize("method", ["exact", "quadrature"])
def test_integrate_transform_recovers_potential(method):
    """The real part of the path integral is the potential difference."""
    point_mass = DiscreteMeasure(((0, 1),))
    value = integrate_transform(point_mass, Polyline((1, math.e)), method)
    assert value.real == pytest.approx(1, abs=1e-9)

    value = integrate_transform(SYMMETRIC, Polyline((2, 3j)), method)
    expected = potential_at(SYMMETRIC, 3j) - potential_at(SYMMETRIC, 2)
    assert value.real == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("method", ["exact", "quadrature"])
def test_integrate_closed_path(method):
    """Closed paths have vanishing real part, even around atoms."""
    square = Polyline((2 + 2j, -2 + 2j, -2 - 2j, 2 - 2j, 2 + 2j))
    value = integrate_transform(SYMMETRIC, square, method)
    assert abs(value.real) < 1e-9
    # The imaginary part counts the winding around both atoms
    assert value.imag == pytest.approx(2 * math.pi, abs=1e-6)


def test_integrate_path_independence():
    """Different routes with the same endpoints agree."""
    rng = np.random.default_rng(4)
    for _ in range(10):
        mu = random_measure(rng, 5)
        start, end = 3 + 0.2j, -0.1 + 3j
        direct = integrate_transform(mu, Polyline((start, end)))
        detour = integrate_transform(mu, Polyline((start, 3 + 3j, end)))
        assert direct.real == pytest.approx(detour.real, abs=1e-8)


def test_integrate_exact_matches_quadrature():
    """Both integration methods agree on random measures."""
    rng = np.random.default_rng(6)
    path = Polyline((1.5 + 1.5j, -1.5 + 1.6j, -1.6 - 1.5j))
    for _ in range(5):
        mu = random_measure(rng, 6)
        exact = integrate_transform(mu, path, "exact")
        quadrature = integrate_transform(mu, path, "quadrature")
        assert exact.real == pytest.approx(quadrature.real, abs=1e-8)


def test_integrate_through_support():
    """Paths touching an atom are rejected."""
    with pytest.raises(PathThroughSupportError, match="path-through-support"):
        integrate_transform(SYMMETRIC, Polyline((0, 2)))
    with pytest.raises(ValueError):
        integrate_transform(SYMMETRIC, Polyline((2j, 3j)), "simpson")


def test_critical_numerator():
    """The numerator of z / (z^2 - 1) is z."""
    np.testing.assert_allclose(critical_numerator(SYMMETRIC).array, [0, 1], atol=1e-15)


@pytest.mark.parametrize(
    "mu,expected",
    [
        (DiscreteMeasure(((0.3, 1),)), {}),
        (SYMMETRIC, {0: 1}),
        (DiscreteMeasure.uniform(roots_of_unity(3)), {0: 2}),
    ],
)
def test_potential_critical_points(mu, expected):
    """Zeros of the Cauchy transform with multiplicity."""
    divisor = potential_critical_points(mu, HALF_SQUARE)
    assert divisor.values.tolist() == list(expected.values())
    np.testing.assert_allclose(divisor.points, list(expected), atol=1e-6)


def test_potential_critical_points_total():
    """n distinct atoms give n - 1 critical points in a large window."""
    rng = np.random.default_rng(8)
    for size in (3, 5, 9):
        mu = random_measure(rng, size)
        divisor = potential_critical_points(mu, Rect.from_bounds(-3, 3.1, -3, 3.1))
        assert divisor.total == size - 1
        assert isinstance(divisor, Divisor)


@pytest.mark.parametrize(
    "points,expected",
    [
        ([0, 1], 0.0),
        (roots_of_unity(16), math.log(16) / 15),
    ],
)
def test_discrete_energy(points, expected):
    """Off-diagonal energies."""
    assert discrete_energy(points) == pytest.approx(expected, abs=1e-12)


def test_discrete_energy_scaling_and_coincidence():
    """Scaling by r adds log r; coincident points give -inf."""
    points = roots_of_unity(7) + 0.1
    assert discrete_energy(3 * points) == pytest.approx(
        discrete_energy(points) + math.log(3)
    )
    assert discrete_energy([0, 0, 1]) == -math.inf
    with pytest.raises(ValueError):
        discrete_energy([1])


def test_leja_base_case():
    """A single Leja point is the candidate of largest modulus."""
    assert leja_points([0.5, -2, 1j], 1) == [-2]
    with pytest.raises(ValueError):
        leja_points([0.5], 2)


@pytest.mark.parametrize(
    "candidates,n,capacity,tolerance",
    [
        (roots_of_unity(2000), 24, 1.0, 0.15),
        (roots_of_unity(2000), 64, 1.0, 0.10),
        (np.linspace(-1, 1, 2001), 40, 0.5, 0.15),
    ],
)
def test_leja_capacity(candidates, n, capacity, tolerance):
    """Leja energies approximate the capacity of the candidate set."""
    points = leja_points(candidates, n)
    assert len(set(points)) == n
    assert capacity_estimate(points) == pytest.approx(capacity, rel=tolerance)


def test_leja_capacity_non_increasing():
    """Capacity estimates of growing Leja prefixes do not increase."""
    points = leja_points(np.linspace(-1, 1, 1001), 30)
    estimates = [capacity_estimate(points[:n]) for n in range(2, 31)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(estimates, estimates[1:]))


def test_model_equilibrium():
    """Quadrature surrogates reproduce the exterior potentials."""
    circle = model_equilibrium(Circle(1), 16)
    assert circle.is_probability()
    assert potential_at(circle, 2) == pytest.approx(math.log(2), abs=2e-2)

    interval = model_equilibrium(Interval(-1, 1), 32)
    expected = math.log(2 + math.sqrt(3)) - math.log(2)
    assert potential_at(interval, 2) == pytest.approx(expected, abs=2e-2)

    with pytest.raises(ValueError):
        model_equilibrium(Circle(1), 1)


@pytest.mark.parametrize(
    "shape,energy",
    [
        (Circle(2), math.log(2)),
        (Interval(-1, 1), -math.log(2)),
        (Interval(0, 4), 0.0),
    ],
)
def test_model_energy(shape, energy):
    """Energies and capacities of the model sets."""
    assert model_energy(shape) == pytest.approx(energy)
    assert model_capacity(shape) == pytest.approx(math.exp(energy))


def test_model_green():
    """Green's functions vanish on the set and grow like log|z|."""
    assert model_green(Circle(1), 0.5) == 0
    assert model_green(Circle(1, 1j), 1j + 3) == pytest.approx(math.log(3))
    assert model_green(Interval(-1, 1), 0.3) == pytest.approx(0, abs=1e-12)
    assert model_green(Interval(-1, 1), 2) == pytest.approx(math.log(2 + math.sqrt(3)))
    # Symmetric in the real axis
    assert model_green(Interval(-1, 1), 0.2 + 0.7j) == pytest.approx(
        model_green(Interval(-1, 1), 0.2 - 0.7j)
    )
    far = 1e6 * (0.6 + 0.8j)
    assert model_green(Interval(-1, 1), far) == pytest.approx(
        math.log(abs(far)) + math.log(2), abs=1e-6
    )


def test_model_potential_matches_surrogate():
    """Surrogate potentials approach the model potential off the set."""
    shape = Interval(-1, 1)
    surrogate = model_equilibrium(shape, 128)
    z = np.array([1.5, 0.3 + 1j, -2 - 0.5j])
    np.testing.assert_allclose(
        potential_at(surrogate, z), model_potential(shape, z), atol=1e-3
    )
