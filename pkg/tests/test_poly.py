"""Tests for the poly module."""

import math

import numpy as np
import pytest

from rootsparse.poly import (
    EscapeError,
    Jet,
    Polynomial,
    PolynomialError,
    compose,
    derivative,
    eval_horner,
    from_roots,
    iterate_jet,
    iterate_jet_scaled,
    jet_of,
    multiply,
)


QUADRATIC = Polynomial((0.5, 0, 1))


@pytest.mark.parametrize(
    "coeffs,message",
    [
        ((), "at least one"),
        ((1, 0), "Leading coefficient"),
        ((1, float("inf")), "Non-finite"),
        ((complex(1, float("nan")), 1), "Non-finite"),
    ],
)
def test_invalid_polynomials(coeffs, message):
    """Polynomials reject empty, zero-leading and non-finite coefficients."""
    with pytest.raises(ValueError, match=message):
        Polynomial(coeffs)


def test_from_array_trims_leading_zeros():
    """Trailing (high degree) zeros are dropped."""
    p = Polynomial.from_array([1, 2, 0, 0])
    assert p.coeffs == (1, 2)
    assert p.degree == 1


@pytest.mark.parametrize("z,expected", [(0, 0.5), (1, 1.5), (1j, -0.5)])
def test_eval_horner(z, expected):
    """Horner evaluation of z^2 + 1/2."""
    assert eval_horner(QUADRATIC, z) == pytest.approx(expected)


def test_eval_horner_matches_naive_sum():
    """Horner agrees with the monomial sum on random inputs."""
    rng = np.random.default_rng(1)
    for _ in range(20):
        coeffs = rng.normal(size=9) + 1j * rng.normal(size=9)
        z = complex(rng.normal(), rng.normal())
        naive = sum(c * z**j for j, c in enumerate(coeffs))
        assert abs(eval_horner(Polynomial(tuple(coeffs)), z) - naive) <= 1e-12 * max(
            1.0, abs(naive)
        )


def test_eval_horner_arrays():
    """Arrays of points evaluate elementwise and keep their shape."""
    z = np.array([[0, 1], [2, 1j]])
    values = eval_horner(QUADRATIC, z)
    assert values.shape == (2, 2)
    np.testing.assert_allclose(values, z**2 + 0.5)


@pytest.mark.parametrize(
    "p,expected",
    [
        (QUADRATIC, (0, 2)),
        (Polynomial((1, 0, -2, 0, 1)), (0, -4, 0, 4)),
        (Polynomial.monomial(5), (0, 0, 0, 0, 5)),
    ],
)
def test_derivative(p, expected):
    """Coefficient-wise differentiation."""
    assert derivative(p).coeffs == expected


def test_derivative_of_constant():
    """Constants cannot be differentiated."""
    with pytest.raises(PolynomialError, match="constant polynomial"):
        derivative(Polynomial((3,)))


@pytest.mark.parametrize(
    "roots,expected",
    [
        ([1, -1], (-1, 0, 1)),
        ([0, 0, 0], (0, 0, 0, 1)),
        ([], (1,)),
    ],
)
def test_from_roots(roots, expected):
    """from_roots builds the monic product of linear factors."""
    p = from_roots(roots)
    assert p.is_monic
    np.testing.assert_allclose(p.array, expected)


def test_multiply_and_compose():
    """(z^2 + 1/2) composed with itself is z^4 + z^2 + 3/4."""
    np.testing.assert_allclose(compose(QUADRATIC, QUADRATIC).array, [0.75, 0, 1, 0, 1])
    np.testing.assert_allclose(
        multiply(from_roots([1]), from_roots([-1])).array, [-1, 0, 1]
    )


def test_jet_of_polynomial():
    """Jets of z^3 at 2 hold the scaled Taylor coefficients."""
    jet = jet_of(Polynomial.monomial(3), 2, 3)
    np.testing.assert_allclose(jet.array, [8, 12, 6, 1])
    np.testing.assert_allclose(jet.derivatives(), [8, 12, 12, 6])


def test_jet_arithmetic():
    """Sum, product, power and composition of jets."""
    z = Jet.variable(1.5, 3)
    one = Jet.constant(1, 3)

    np.testing.assert_allclose((z * z).array, jet_of(Polynomial.monomial(2), 1.5, 3).array)
    np.testing.assert_allclose((z + one).array, [2.5, 1, 0, 0])
    np.testing.assert_allclose((z**3).array, jet_of(Polynomial.monomial(3), 1.5, 3).array)
    np.testing.assert_allclose(
        z.compose(QUADRATIC).array, jet_of(QUADRATIC, 1.5, 3).array
    )

    with pytest.raises(ValueError):
        _ = z + Jet.constant(1, 2)


def test_jet_product_commutative_and_associative():
    """Jet multiplication is commutative and associative."""
    rng = np.random.default_rng(7)
    for _ in range(10):
        a, b, c = (
            Jet.from_array(rng.normal(size=5) + 1j * rng.normal(size=5))
            for _ in range(3)
        )
        np.testing.assert_allclose((a * b).array, (b * a).array, rtol=1e-12)
        np.testing.assert_allclose(
            ((a * b) * c).array, (a * (b * c)).array, rtol=1e-12, atol=1e-12
        )


@pytest.mark.parametrize("k", [1, 2, 3])
def test_iterate_jet_matches_composition(k):
    """Jets of P^k agree with the explicitly composed coefficient form."""
    rng = np.random.default_rng(k)
    P = Polynomial((0.3 - 0.2j, 0.1, -0.4j, 1))
    composed = P
    for _ in range(k - 1):
        composed = compose(P, composed)

    for _ in range(100):
        z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        np.testing.assert_allclose(
            iterate_jet(P, k, z, 3).array,
            jet_of(composed, z, 3).array,
            rtol=1e-10,
            atol=1e-10,
        )


def test_iterate_jet_chain_rule():
    """The slope of P^2 is P'(P(z)) P'(z)."""
    z = 0.1 + 0.3j
    dP = derivative(QUADRATIC)
    expected = dP(QUADRATIC(z)) * dP(z)
    jet = iterate_jet(QUADRATIC, 2, z, 1)
    assert jet.value == pytest.approx(QUADRATIC(QUADRATIC(z)))
    assert jet.derivative(1) == pytest.approx(expected)


def test_iterate_jet_escapes():
    """Overflowing orbits report the step at which they left the doubles."""
    with pytest.raises(EscapeError, match="escaped-to-infinity at step 1") as info:
        iterate_jet(QUADRATIC, 3, 1e200, 1)
    assert info.value.step == 1


@pytest.mark.parametrize("P,k", [(Polynomial((1, 1)), 2), (QUADRATIC, 0)])
def test_iterate_jet_preconditions(P, k):
    """Iteration needs degree two and a positive count."""
    with pytest.raises((PolynomialError, ValueError)):
        iterate_jet(P, k, 0.1, 1)


def test_scaled_jet_matches_plain_jet():
    """The rescaled jet times its scale is the true jet."""
    z = np.array([1.3, 0.2 + 0.4j, -1.1j])
    log_scale, jet = iterate_jet_scaled(QUADRATIC, 5, z, 2)
    for index, point in enumerate(z):
        expected = iterate_jet(QUADRATIC, 5, point, 2).array
        np.testing.assert_allclose(
            math.exp(log_scale[index]) * jet[:, index],
            expected,
            rtol=1e-10,
            atol=1e-10,
        )


def test_scaled_jet_survives_overflow():
    """Orbits beyond the double range stay finite once rescaled."""
    z = 1.5 + 1.5j
    with pytest.raises(EscapeError):
        iterate_jet(QUADRATIC, 12, z, 2)

    log_scale, jet = iterate_jet_scaled(QUADRATIC, 12, z, 2)
    assert np.all(np.isfinite(jet))
    assert np.abs(jet).max() <= 1
    # Far past log of the largest double
    assert log_scale + math.log(abs(jet[0])) > 700
