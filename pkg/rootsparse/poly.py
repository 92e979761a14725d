"""Coefficient-form polynomials and truncated Taylor jets of iterated maps."""

import math

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly


ComplexLike = Union[complex, float, int]


class PolynomialError(Exception):
    """Indicate an operation that is undefined for the given polynomial."""


class EscapeError(Exception):
    """Indicate that an orbit overflowed double precision."""

    def __init__(self, step: int):
        super().__init__(f"escaped-to-infinity at step {step}")
        self.step = step


@dataclass(frozen=True)
class Polynomial:
    """A complex polynomial stored lowest degree coefficient first."""

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(value) for value in self.coeffs)
        if not coeffs:
            raise ValueError("A polynomial needs at least one coefficient")
        if coeffs[-1] == 0:
            raise ValueError(f"Leading coefficient of {coeffs} is zero")
        if not all(math.isfinite(abs(value)) for value in coeffs):
            raise ValueError(f"Non-finite coefficient in {coeffs}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_array(cls, values, tol: float = 0.0) -> "Polynomial":
        """Build from an array, trimming leading coefficients with |c| <= tol."""
        values = np.asarray(values, dtype=complex)
        trimmed = npoly.polytrim(values, tol) if values.size > 1 else values
        return cls(tuple(trimmed))

    @classmethod
    def monomial(cls, degree: int) -> "Polynomial":
        """Return z**degree."""
        return cls((0,) * degree + (1,))

    @property
    def degree(self) -> int:
        """Degree of the polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        """True if the leading coefficient is exactly one."""
        return self.coeffs[-1] == 1

    @property
    def array(self) -> np.ndarray:
        """Coefficients as a complex numpy array."""
        return np.array(self.coeffs, dtype=complex)

    def __call__(self, z):
        return eval_horner(self, z)


def eval_horner(p: Polynomial, z):
    """Evaluate `p` at `z` (scalar or array) with Horner's rule."""
    result = p.coeffs[-1]
    for coeff in reversed(p.coeffs[:-1]):
        result = result * z + coeff
    if np.ndim(z) == 0:
        return complex(result)
    return np.asarray(result, dtype=complex) * np.ones_like(z, dtype=complex)


def derivative(p: Polynomial) -> Polynomial:
    """Differentiate `p` coefficient-wise."""
    if p.degree == 0:
        raise PolynomialError("constant polynomial")
    return Polynomial(tuple(j * p.coeffs[j] for j in range(1, p.degree + 1)))


def from_roots(roots: Sequence[ComplexLike]) -> Polynomial:
    """Return the monic polynomial with exactly these roots (with multiplicity)."""
    roots = [complex(root) for root in roots]
    if not roots:
        return Polynomial((1,))

    coeffs = np.array([1], dtype=complex)
    for root in roots:
        coeffs = npoly.polymul(coeffs, [-root, 1])
    # Products of monic factors are monic; pin it against rounding
    coeffs[-1] = 1
    return Polynomial(tuple(coeffs))


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    """Return the product p*q."""
    return Polynomial(tuple(npoly.polymul(p.array, q.array)))


def compose(p: Polynomial, q: Polynomial) -> Polynomial:
    """Return the coefficient form of p(q(z))."""
    result = np.array([p.coeffs[-1]], dtype=complex)
    for coeff in reversed(p.coeffs[:-1]):
        result = npoly.polyadd(npoly.polymul(result, q.array), [coeff])
    return Polynomial(tuple(result))


# Array kernels. A jet array has shape (m + 1, *points) and holds the scaled
# Taylor coefficients f^(j)(z) / j! in its leading axis.


def jet_product(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product of two jet arrays of the same order."""
    order = left.shape[0] - 1
    shape = np.broadcast_shapes(left.shape, right.shape)
    out = np.zeros(shape, dtype=complex)
    for i in range(order + 1):
        out[i:] += left[i] * right[: order + 1 - i]
    return out


def jet_compose(p: Polynomial, inner: np.ndarray) -> np.ndarray:
    """Jet of p(f) given the jet array of f (Horner over jets)."""
    result = np.zeros_like(inner, dtype=complex)
    result[0] = p.coeffs[-1]
    for coeff in reversed(p.coeffs[:-1]):
        result = jet_product(result, inner)
        result[0] += coeff
    return result


def jet_power(base: np.ndarray, exponent: int) -> np.ndarray:
    """Jet of f**exponent by square-and-multiply."""
    result = np.zeros_like(base, dtype=complex)
    result[0] = 1
    square = base
    while exponent:
        if exponent & 1:
            result = jet_product(result, square)
        exponent >>= 1
        if exponent:
            square = jet_product(square, square)
    return result


def variable_jet(z, order: int) -> np.ndarray:
    """Jet array of the identity map at the points `z`."""
    z = np.asarray(z, dtype=complex)
    jet = np.zeros((order + 1,) + z.shape, dtype=complex)
    jet[0] = z
    if order >= 1:
        jet[1] = 1
    return jet


def jet_array(p: Polynomial, z, order: int) -> np.ndarray:
    """Order-`order` jet array of a coefficient polynomial at the points `z`."""
    return jet_compose(p, variable_jet(z, order))


def iterate_jet_array(P: Polynomial, k: int, z, order: int) -> np.ndarray:
    """
    Order-`order` jet array of the k-th iterate of `P` at the points `z`.

    Raises EscapeError carrying the first step at which any value overflowed.
    """
    if P.degree < 2:
        raise PolynomialError(f"Iteration needs degree >= 2, got {P.degree}")
    if k < 1:
        raise ValueError(f"Iteration count must be positive, got {k}")

    jet = variable_jet(z, order)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, k + 1):
            jet = jet_compose(P, jet)
            if not np.all(np.isfinite(jet)):
                raise EscapeError(step)
    return jet


def iterate_jet_scaled(P: Polynomial, k: int, z, order: int):
    """
    Jet array of P^k at the points `z` as a pair (log_scale, jet).

    The true jet is exp(log_scale) * jet per point. Jets are renormalized
    whenever their largest entry exceeds one, so no step overflows.
    """
    if P.degree < 2:
        raise PolynomialError(f"Iteration needs degree >= 2, got {P.degree}")
    if k < 1:
        raise ValueError(f"Iteration count must be positive, got {k}")

    degree = P.degree
    jet = variable_jet(z, order)
    log_scale = np.zeros(jet.shape[1:])

    with np.errstate(under="ignore"):
        for _ in range(k):
            # P(s J) = s^d * sum_i a_i s^(i - d) J^i
            result = np.zeros_like(jet)
            result[0] = P.coeffs[-1]
            for power in range(degree - 1, -1, -1):
                result = jet_product(result, jet)
                result[0] += P.coeffs[power] * np.exp((power - degree) * log_scale)
            log_scale = degree * log_scale

            norm = np.abs(result).max(axis=0)
            factor = np.where(norm > 1, norm, 1.0)
            jet = result / factor
            log_scale = log_scale + np.log(factor)

    return log_scale, jet


@dataclass(frozen=True)
class Jet:
    """Truncated Taylor expansion c_0..c_m of a holomorphic map at a point."""

    taylor: tuple[complex, ...]

    def __post_init__(self):
        taylor = tuple(complex(value) for value in self.taylor)
        if not taylor:
            raise ValueError("A jet needs at least its value")
        object.__setattr__(self, "taylor", taylor)

    @classmethod
    def from_array(cls, values) -> "Jet":
        """Build from a one-dimensional jet array."""
        return cls(tuple(np.asarray(values, dtype=complex).ravel()))

    @classmethod
    def variable(cls, z: ComplexLike, order: int) -> "Jet":
        """Jet of the identity map at z."""
        return cls.from_array(variable_jet(z, order))

    @classmethod
    def constant(cls, value: ComplexLike, order: int) -> "Jet":
        """Jet of a constant map."""
        return cls((value,) + (0,) * order)

    @property
    def order(self) -> int:
        """Truncation order m."""
        return len(self.taylor) - 1

    @property
    def value(self) -> complex:
        """The function value c_0."""
        return self.taylor[0]

    @property
    def array(self) -> np.ndarray:
        """Scaled Taylor coefficients as an array."""
        return np.array(self.taylor, dtype=complex)

    def derivative(self, j: int) -> complex:
        """Raw derivative f^(j) = j! * c_j."""
        return self.taylor[j] * math.factorial(j)

    def derivatives(self) -> list[complex]:
        """All raw derivatives f, f', ..., f^(m)."""
        return [self.derivative(j) for j in range(self.order + 1)]

    def _check_order(self, other: "Jet"):
        if other.order != self.order:
            raise ValueError(f"Jet orders differ: {self.order} != {other.order}")

    def __add__(self, other: "Jet") -> "Jet":
        self._check_order(other)
        return Jet.from_array(self.array + other.array)

    def __mul__(self, other: "Jet") -> "Jet":
        self._check_order(other)
        return Jet.from_array(jet_product(self.array, other.array))

    def __pow__(self, exponent: int) -> "Jet":
        if exponent < 0:
            raise ValueError("Only nonnegative integer powers are supported")
        return Jet.from_array(jet_power(self.array, exponent))

    def compose(self, p: Polynomial) -> "Jet":
        """Jet of p(f) where self is the jet of f."""
        return Jet.from_array(jet_compose(p, self.array))


def jet_of(p: Polynomial, z: ComplexLike, order: int) -> Jet:
    """Order-`order` jet of a coefficient polynomial at z."""
    return Jet.from_array(jet_array(p, complex(z), order))


def iterate_jet(P: Polynomial, k: int, z: ComplexLike, m: int) -> Jet:
    """Order-m jet of P^k at z, by k-fold jet composition."""
    return Jet.from_array(iterate_jet_array(P, k, complex(z), m))
