"""Generators for the polynomial sequences q_k studied by the experiments."""

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import linalg

from .dynamics import DynSystem, log_modulus_iterate
from .logging import LoggingMixin
from .poly import (
    Jet,
    Polynomial,
    compose,
    eval_horner,
    from_roots,
    iterate_jet_array,
    iterate_jet_scaled,
    jet_array,
    jet_power,
    jet_product,
    variable_jet,
)
from .potential import DiscreteMeasure
from .rootfind import JetFunction, aberth_roots


# Largest degree for which coefficient-form iterates are produced
COEFF_DEGREE_LIMIT = 64

# Conditioning cap on orthogonal polynomial degrees in double precision
ORTHOGONAL_DEGREE_CAP = 64


class DegreeTooLargeError(Exception):
    """Indicate a coefficient form requested beyond the supported degree."""


class SupportTooSmallError(Exception):
    """Indicate a measure with too few atoms for the requested degrees."""


class FamilyHandle(LoggingMixin, ABC):
    """A sequence of polynomials q_k with strictly increasing degrees."""

    kind: str = ""

    @property
    def first_index(self) -> int:
        """Smallest valid k."""
        return 1

    @property
    def last_index(self) -> float:
        """Largest valid k (infinite for unbounded families)."""
        return float("inf")

    def _check_index(self, k: int):
        if not self.first_index <= k <= self.last_index:
            raise ValueError(
                f"k={k} outside [{self.first_index}, {self.last_index}] "
                f"for {self.kind} family"
            )

    @abstractmethod
    def degree(self, k: int) -> int:
        """Degree n_k of q_k."""

    @abstractmethod
    def jet_array(self, k: int, z, order: int) -> np.ndarray:
        """Jet array of q_k at the points `z`."""

    @abstractmethod
    def coeffs(self, k: int) -> Polynomial:
        """Coefficient form of q_k."""

    def jet_eval(self, k: int, z: complex, m: int) -> Jet:
        """Order-m jet of q_k at z."""
        return Jet.from_array(self.jet_array(k, complex(z), m))

    def jet_function(self, k: int) -> JetFunction:
        """Batch jet evaluator of q_k for the root finders."""
        self._check_index(k)

        def evaluate(z: np.ndarray, order: int) -> np.ndarray:
            return self.jet_array(k, z, order)

        return evaluate

    def log_modulus(self, k: int, z):
        """log|q_k(z)|; -inf at roots."""
        with np.errstate(divide="ignore"):
            values = np.log(np.abs(self.jet_array(k, z, 0)[0]))
        return float(values) if np.ndim(z) == 0 else values


class IterateFamily(FamilyHandle):
    """Iterates q_k = P^k of a polynomial dynamical system."""

    kind = "iterates"

    def __init__(self, system: DynSystem):
        self.system = system

    def degree(self, k: int) -> int:
        self._check_index(k)
        return self.system.degree**k

    def jet_array(self, k: int, z, order: int) -> np.ndarray:
        self._check_index(k)
        return iterate_jet_array(self.system.P, k, z, order)

    def jet_function(self, k: int) -> JetFunction:
        """Jet evaluator of P^k, rescaled per point so it never overflows."""
        self._check_index(k)

        def evaluate(z: np.ndarray, order: int) -> np.ndarray:
            _, jet = iterate_jet_scaled(self.system.P, k, z, order)
            return jet

        return evaluate

    def coeffs(self, k: int) -> Polynomial:
        if self.degree(k) > COEFF_DEGREE_LIMIT:
            raise DegreeTooLargeError(
                f"degree-too-large: P^{k} has degree {self.degree(k)} > "
                f"{COEFF_DEGREE_LIMIT}"
            )
        result = self.system.P
        for _ in range(k - 1):
            result = compose(self.system.P, result)
        return result

    def log_modulus(self, k: int, z):
        self._check_index(k)
        return log_modulus_iterate(self.system.P, k, z)


class OrthogonalFamily(FamilyHandle):
    """
    Monic orthogonal polynomials q_0..q_kmax of a discrete measure.

    The recurrence q_{k+1} = z q_k - sum_{j <= k} h_jk q_j is built by the
    Stieltjes procedure for real atoms and by Arnoldi iteration with one
    reorthogonalization pass otherwise; only h_kk and h_(k-1)k are nonzero
    in the real case.
    """

    kind = "orthogonal"

    def __init__(self, measure: DiscreteMeasure, k_max: int):
        atoms = len(measure.atoms)
        if k_max < 1:
            raise ValueError(f"k_max must be positive, got {k_max}")
        if k_max > atoms - 1:
            raise SupportTooSmallError(
                f"measure-support-too-small: degree {k_max} needs more than "
                f"{atoms} atoms"
            )
        if k_max > ORTHOGONAL_DEGREE_CAP:
            self.logger.warning(
                "Capping orthogonal degree %d at %d", k_max, ORTHOGONAL_DEGREE_CAP
            )
            k_max = ORTHOGONAL_DEGREE_CAP

        self.measure = measure
        self.k_max = k_max
        self.real = bool(np.all(measure.points.imag == 0))
        if self.real:
            self.recurrence = self._stieltjes()
        else:
            self.recurrence = self._arnoldi()

    @property
    def first_index(self) -> int:
        return 0

    @property
    def last_index(self) -> float:
        return self.k_max

    def _stieltjes(self) -> np.ndarray:
        points, weights = self.measure.points.real, self.measure.weights
        recurrence = np.zeros((self.k_max, self.k_max), dtype=complex)

        previous = np.zeros_like(points)
        current = np.ones_like(points)
        previous_norm = 1.0
        for k in range(self.k_max):
            norm = float((weights * current**2).sum())
            alpha = float((weights * points * current**2).sum()) / norm
            beta = norm / previous_norm if k else 0.0
            recurrence[k, k] = alpha
            if k:
                recurrence[k - 1, k] = beta
            previous, current = current, (points - alpha) * current - beta * previous
            previous_norm = norm
        return recurrence

    def _arnoldi(self) -> np.ndarray:
        points, weights = self.measure.points, self.measure.weights
        root_weights = np.sqrt(weights)
        recurrence = np.zeros((self.k_max, self.k_max), dtype=complex)

        vectors = [root_weights.astype(complex)]
        for k in range(self.k_max):
            candidate = points * vectors[k]
            scale = np.linalg.norm(candidate)
            for _ in range(2):
                for j, vector in enumerate(vectors):
                    coefficient = np.vdot(vector, candidate) / np.vdot(vector, vector)
                    recurrence[j, k] += coefficient
                    candidate = candidate - coefficient * vector

            if np.linalg.norm(candidate) <= 1e-13 * scale:
                raise SupportTooSmallError(
                    f"measure-support-too-small: Krylov space exhausted at degree "
                    f"{k + 1}"
                )
            vectors.append(candidate)
        return recurrence

    def degree(self, k: int) -> int:
        self._check_index(k)
        return k

    def jet_array(self, k: int, z, order: int) -> np.ndarray:
        self._check_index(k)
        variable = variable_jet(z, order)
        jets = [np.zeros_like(variable)]
        jets[0][0] = 1

        for n in range(k):
            following = jet_product(variable, jets[n])
            for j in range(n + 1):
                following = following - self.recurrence[j, n] * jets[j]
            jets.append(following)
        return jets[k]

    def coeffs(self, k: int) -> Polynomial:
        self._check_index(k)
        polys = [np.array([1], dtype=complex)]
        for n in range(k):
            following = npoly.polymulx(polys[n])
            for j in range(n + 1):
                following = npoly.polysub(following, self.recurrence[j, n] * polys[j])
            polys.append(following)
        return Polynomial.from_array(polys[k])

    def roots(self, k: int) -> np.ndarray:
        """
        Zeros of q_k as eigenvalues of the leading k x k recurrence matrix.

        Real atoms give a symmetric tridiagonal (Jacobi) matrix with real
        eigenvalues; complex atoms give an upper Hessenberg matrix.
        """
        self._check_index(k)
        if k == 0:
            return np.zeros(0, dtype=complex)

        if self.real:
            diagonal = np.diag(self.recurrence).real[:k]
            off_diagonal = np.sqrt(np.diag(self.recurrence, 1).real[: k - 1])
            return linalg.eigh_tridiagonal(
                diagonal, off_diagonal, eigvals_only=True
            ).astype(complex)

        hessenberg = self.recurrence[:k, :k] + np.diag(np.ones(k - 1), -1)
        return np.sort_complex(linalg.eigvals(hessenberg))

    def values_at_atoms(self, k_max: int) -> np.ndarray:
        """Matrix whose column k holds q_k at the atoms."""
        return np.column_stack([
            self.jet_array(k, self.measure.points, 0)[0] for k in range(k_max + 1)
        ])

    def orthogonality_residual(self, k_max: int) -> float:
        """max over i != j <= k_max of |<q_i, q_j>| / (||q_i|| ||q_j||)."""
        values = self.values_at_atoms(k_max)
        gram = values.conj().T @ (self.measure.weights[:, None] * values)
        norms = np.sqrt(np.abs(np.diag(gram)))
        normalized = np.abs(gram) / np.outer(norms, norms)
        np.fill_diagonal(normalized, 0.0)
        return float(normalized.max())

    def norm_squared(self, coeffs: Polynomial) -> float:
        """||f||^2 in L^2 of the measure."""
        values = eval_horner(coeffs, self.measure.points)
        return float((self.measure.weights * np.abs(values) ** 2).sum())


class BinomialFamily(FamilyHandle):
    """q_k = (z^2 - c^2)^k, whose root distributions are half at each of +-c."""

    kind = "binomial"

    def __init__(self, c: complex):
        c = complex(c)
        if c == 0:
            raise ValueError("The binomial family needs c != 0")
        self.c = c
        self.base = Polynomial((-(c**2), 0, 1))

    def degree(self, k: int) -> int:
        self._check_index(k)
        return 2 * k

    def jet_array(self, k: int, z, order: int) -> np.ndarray:
        self._check_index(k)
        return jet_power(jet_array(self.base, z, order), k)

    def coeffs(self, k: int) -> Polynomial:
        self._check_index(k)
        return Polynomial.from_array(npoly.polypow(self.base.array, k))

    def log_modulus(self, k: int, z):
        self._check_index(k)
        with np.errstate(divide="ignore"):
            values = k * np.log(np.abs(np.asarray(z, dtype=complex) ** 2 - self.c**2))
        return float(values) if np.ndim(z) == 0 else values


class ExplicitFamily(FamilyHandle):
    """An explicit list of polynomials indexed from `start`."""

    def __init__(self, polys: Sequence[Polynomial], start: int = 1, kind="explicit"):
        polys = list(polys)
        if not polys:
            raise ValueError("An explicit family needs at least one polynomial")
        degrees = [p.degree for p in polys]
        if degrees[0] < 1 or any(b <= a for a, b in zip(degrees, degrees[1:])):
            raise ValueError(f"Degrees must be positive and increasing: {degrees}")

        self.polys = polys
        self.start = start
        self.kind = kind

    @property
    def first_index(self) -> int:
        return self.start

    @property
    def last_index(self) -> float:
        return self.start + len(self.polys) - 1

    def coeffs(self, k: int) -> Polynomial:
        self._check_index(k)
        return self.polys[k - self.start]

    def degree(self, k: int) -> int:
        return self.coeffs(k).degree

    def jet_array(self, k: int, z, order: int) -> np.ndarray:
        return jet_array(self.coeffs(k), z, order)


def gen_iterates(sys: DynSystem) -> IterateFamily:
    """The family of iterates P^k, k >= 1."""
    return IterateFamily(sys)


def gen_orthogonal(mu: DiscreteMeasure, k_max: int) -> OrthogonalFamily:
    """Monic orthogonal polynomials of mu up to degree k_max."""
    return OrthogonalFamily(mu, k_max)


def gen_binomial(c: complex) -> BinomialFamily:
    """(z^2 - c^2)^k for k >= 1."""
    return BinomialFamily(c)


def gen_monomial(k_max: int) -> ExplicitFamily:
    """z^k for k = 1..k_max; every window around 0 holds k roots."""
    return ExplicitFamily(
        [Polynomial.monomial(k) for k in range(1, k_max + 1)], kind="monomial"
    )


def gen_chebyshev_roots(k_max: int) -> ExplicitFamily:
    """Monic polynomials with the Chebyshev nodes cos((2j - 1) pi / 2k) as roots."""
    polys = []
    for k in range(1, k_max + 1):
        j = np.arange(1, k + 1)
        polys.append(from_roots(np.cos((2 * j - 1) * np.pi / (2 * k))))
    return ExplicitFamily(polys, kind="chebyshev")


def root_distribution(q: Polynomial) -> DiscreteMeasure:
    """Normalized root-counting measure of q."""
    if q.degree < 1:
        raise ValueError("A constant polynomial has no root distribution")
    roots = aberth_roots(q)
    return DiscreteMeasure(
        tuple((location, mult / q.degree) for location, mult in roots.roots)
    )
