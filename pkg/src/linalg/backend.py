"""
Scalar backends.

Every analysis in opalgs runs over one of two interchangeable scalar fields:

- **ExactBackend**: Gaussian rationals ``a/b + (c/d)i`` (sympy's ``QQ_I``).
  Arithmetic is exact and equality is literal. Row reduction, inverses and
  characteristic polynomials go through sympy's ``DomainMatrix``.
- **NumericBackend**: ``complex128`` with a :class:`ToleranceConfig`. Two
  scalars are equal iff ``|x - y| <= eps_abs + eps_rel * max(|x|, |y|)``;
  ranks are decided by ``rank_threshold`` through ``scipy.linalg``.

Matrices and vectors are numpy arrays in both cases (``dtype=object`` holding
``QQ_I`` elements in exact mode), so higher layers use ``@``, ``.conj()`` and
slicing without caring which field they are in.
"""

from __future__ import annotations

import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import sympy
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from src import settings
from src.exceptions import EigenvalueAmbiguityError, PreconditionError, SingularMatrixError

logger = logging.getLogger(__name__)

_EIGEN_SYMBOL = sympy.Symbol("t")

# "a/b+c/d i", "a/b-c/d i", "c/d i" or a plain rational (spaces removed)
_RATIONAL = r"\d+(?:\.\d+)?(?:/\d+)?"
_SCALAR_PATTERN = re.compile(
    rf"^(?:[+-]?{_RATIONAL}(?:[+-](?:{_RATIONAL})?i)?|[+-]?(?:{_RATIONAL})?i)$"
)


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances of the numeric backend (ignored by the exact backend)."""

    eps_abs: float = 1e-10
    eps_rel: float = 1e-9
    rank_threshold: float = 1e-8

    def __post_init__(self):
        for name in ("eps_abs", "eps_rel", "rank_threshold"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be strictly positive", "ToleranceConfig")

    @classmethod
    def from_settings(cls) -> "ToleranceConfig":
        return cls(
            eps_abs=settings.EPS_ABS,
            eps_rel=settings.EPS_REL,
            rank_threshold=settings.RANK_THRESHOLD,
        )


@dataclass(frozen=True)
class EigenvalueSet:
    """Distinct eigenvalues found by a backend.

    ``complete`` is False when the characteristic polynomial did not split
    over the backend's field (exact mode only).
    """

    values: list
    complete: bool


def _rational_to_qq(text: str):
    value = sympy.Rational(text)
    return QQ(int(value.p), int(value.q))


def parse_exact_scalar(text: str):
    """Parse ``"a/b+c/d i"`` (or a plain rational) into a ``QQ_I`` element."""
    compact = text.replace(" ", "")
    if not _SCALAR_PATTERN.match(compact):
        raise ValueError(f"not a Gaussian rational: {text!r}")
    if compact.endswith("i"):
        body = compact[:-1]
        split = max(body.rfind("+"), body.rfind("-"))
        if split > 0:
            real_text, imag_text = body[:split], body[split:]
        else:
            real_text, imag_text = "0", body
        if imag_text in ("", "+", "-"):
            imag_text += "1"
    else:
        real_text, imag_text = compact, "0"
    return QQ_I(_rational_to_qq(real_text), _rational_to_qq(imag_text))


def _format_rational(value) -> str:
    numerator, denominator = int(value.numerator), int(value.denominator)
    return str(numerator) if denominator == 1 else f"{numerator}/{denominator}"


def format_exact_scalar(value) -> str:
    """Inverse of :func:`parse_exact_scalar`."""
    real = _format_rational(value.x)
    if not value.y:
        return real
    imag = value.y
    sign = "-" if imag < 0 else "+"
    return f"{real}{sign}{_format_rational(abs(imag))} i"


class Backend(ABC):
    """Field operations shared by every module."""

    name: str = ""

    # --- construction ----------------------------------------------------

    @abstractmethod
    def scalar(self, value):
        """Convert a Python number, string or field element into this field."""

    @property
    @abstractmethod
    def dtype(self):
        """numpy dtype of arrays in this backend."""

    def asarray(self, data) -> np.ndarray:
        raw = np.asarray(data, dtype=object)
        if raw.shape == ():
            return np.asarray(self.scalar(raw.item()), dtype=self.dtype)
        converted = np.empty(raw.shape, dtype=object)
        for index, value in np.ndenumerate(raw):
            converted[index] = self.scalar(value)
        return converted.astype(self.dtype)

    @abstractmethod
    def zeros(self, shape) -> np.ndarray:
        pass

    def eye(self, n: int) -> np.ndarray:
        identity = self.zeros((n, n))
        for i in range(n):
            identity[i, i] = self.scalar(1)
        return identity

    def unit_vector(self, n: int, index: int) -> np.ndarray:
        vector = self.zeros(n)
        vector[index] = self.scalar(1)
        return vector

    def matrix_unit(self, n: int, row: int, column: int) -> np.ndarray:
        unit = self.zeros((n, n))
        unit[row, column] = self.scalar(1)
        return unit

    @abstractmethod
    def random_scalars(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Seeded random coefficients (small integers in exact mode)."""

    # --- predicates ------------------------------------------------------

    @abstractmethod
    def is_zero(self, value) -> bool:
        pass

    @abstractmethod
    def equal(self, a, b) -> bool:
        pass

    def is_zero_array(self, array: np.ndarray) -> bool:
        return all(self.is_zero(value) for value in np.asarray(array).flat)

    def arrays_equal(self, a: np.ndarray, b: np.ndarray) -> bool:
        a, b = np.asarray(a), np.asarray(b)
        if a.shape != b.shape:
            return False
        return all(self.equal(x, y) for x, y in zip(a.flat, b.flat))

    # --- elementwise -----------------------------------------------------

    @abstractmethod
    def real_part(self, value):
        """Real part, as an element of this field."""

    @abstractmethod
    def imag_part(self, value):
        """Imaginary part, as an element of this field."""

    def real(self, array: np.ndarray) -> np.ndarray:
        out = self.zeros(np.shape(array))
        for index, value in np.ndenumerate(array):
            out[index] = self.real_part(value)
        return out

    def imag(self, array: np.ndarray) -> np.ndarray:
        out = self.zeros(np.shape(array))
        for index, value in np.ndenumerate(array):
            out[index] = self.imag_part(value)
        return out

    def conj(self, array: np.ndarray) -> np.ndarray:
        return np.conj(array)

    def adjoint(self, matrix: np.ndarray) -> np.ndarray:
        return self.conj(matrix).T.copy()

    def inner(self, u: np.ndarray, v: np.ndarray):
        """Inner product, conjugate-linear in the first argument."""
        total = self.scalar(0)
        for a, b in zip(self.conj(u), v):
            total = total + a * b
        return total

    def norm_sq(self, v: np.ndarray):
        return self.inner(v, v)

    @abstractmethod
    def magnitude(self, value) -> float:
        """|value| as a float, for margins and reports."""

    def to_complex(self, array) -> np.ndarray:
        out = np.empty(np.shape(array), dtype=complex)
        for index, value in np.ndenumerate(np.asarray(array, dtype=object)):
            out[index] = self.as_complex(value)
        return out

    @abstractmethod
    def as_complex(self, value) -> complex:
        pass

    @abstractmethod
    def sort_key(self, value) -> tuple:
        """Total order on scalars used for deterministic merges."""

    @property
    def can_normalize(self) -> bool:
        """Whether square roots (unit normalization) stay inside the field."""
        return False

    def normalize(self, v: np.ndarray) -> np.ndarray:
        raise PreconditionError("normalization leaves the field", "normalize", self.name)

    # --- linear algebra --------------------------------------------------

    @abstractmethod
    def rref(self, rows: np.ndarray) -> tuple[np.ndarray, tuple]:
        """Reduced row echelon form of ``rows`` (zero rows dropped) and pivots."""

    def nullspace(self, matrix: np.ndarray) -> np.ndarray:
        """Rows spanning {x : matrix @ x = 0}."""
        matrix = np.asarray(matrix)
        columns = matrix.shape[1]
        if matrix.shape[0] == 0:
            return self.eye(columns)
        reduced, pivots = self.rref(matrix)
        free = [j for j in range(columns) if j not in pivots]
        basis = self.zeros((len(free), columns))
        for row, j in enumerate(free):
            basis[row, j] = self.scalar(1)
            for i, p in enumerate(pivots):
                basis[row, p] = -reduced[i, j]
        return basis

    def solve(self, matrix: np.ndarray, rhs: np.ndarray) -> Optional[np.ndarray]:
        """A solution x of ``matrix @ x = rhs``, or None when inconsistent."""
        matrix = np.asarray(matrix)
        rows, columns = matrix.shape
        if columns == 0:
            return self.zeros(0) if self.is_zero_array(rhs) else None
        augmented = np.concatenate([matrix, np.asarray(rhs).reshape(rows, 1)], axis=1)
        reduced, pivots = self.rref(augmented)
        if columns in pivots:
            return None
        solution = self.zeros(columns)
        for i, p in enumerate(pivots):
            solution[p] = reduced[i, columns]
        return solution

    @abstractmethod
    def inv(self, matrix: np.ndarray) -> np.ndarray:
        pass

    def rank(self, rows: np.ndarray) -> int:
        if np.asarray(rows).shape[0] == 0:
            return 0
        return len(self.rref(rows)[1])

    @abstractmethod
    def eigenvalues(self, matrix: np.ndarray) -> EigenvalueSet:
        """Distinct eigenvalues available in this field."""

    def __repr__(self):
        return f"{type(self).__name__}()"


class ExactBackend(Backend):
    """Exact arithmetic over the Gaussian rationals."""

    name = "exact"

    @property
    def dtype(self):
        return object

    def scalar(self, value):
        if isinstance(value, QQ_I.dtype):
            return value
        if isinstance(value, (bool, np.bool_)):
            return QQ_I(int(value))
        if isinstance(value, (int, np.integer)):
            return QQ_I(int(value))
        if isinstance(value, str):
            return parse_exact_scalar(value)
        if isinstance(value, (float, np.floating)):
            return QQ_I(_rational_to_qq(repr(float(value))))
        if isinstance(value, (complex, np.complexfloating)):
            return QQ_I(_rational_to_qq(repr(value.real)), _rational_to_qq(repr(value.imag)))
        if isinstance(value, sympy.Basic):
            return QQ_I.from_sympy(sympy.nsimplify(value))
        if hasattr(value, "numerator") and hasattr(value, "denominator"):
            return QQ_I(QQ(int(value.numerator), int(value.denominator)))
        return QQ_I.convert(value)

    def zeros(self, shape) -> np.ndarray:
        return np.full(shape, QQ_I.zero, dtype=object)

    def random_scalars(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.asarray([int(x) for x in rng.integers(-3, 4, size=count)])

    def is_zero(self, value) -> bool:
        return not self.scalar(value)

    def equal(self, a, b) -> bool:
        return self.scalar(a) == self.scalar(b)

    def conj(self, array: np.ndarray) -> np.ndarray:
        array = np.asarray(array, dtype=object)
        out = np.empty(array.shape, dtype=object)
        for index, value in np.ndenumerate(array):
            value = self.scalar(value)
            out[index] = QQ_I(value.x, -value.y)
        return out

    def real_part(self, value):
        return QQ_I(self.scalar(value).x)

    def imag_part(self, value):
        return QQ_I(self.scalar(value).y)

    def magnitude(self, value) -> float:
        return abs(self.as_complex(value))

    def as_complex(self, value) -> complex:
        value = self.scalar(value)
        return complex(float(value.x), float(value.y))

    def sort_key(self, value) -> tuple:
        value = self.scalar(value)
        return (value.x, value.y)

    def _domain_matrix(self, matrix: np.ndarray) -> DomainMatrix:
        rows, columns = matrix.shape
        return DomainMatrix([list(row) for row in matrix], (rows, columns), QQ_I)

    def _from_domain_matrix(self, dm: DomainMatrix) -> np.ndarray:
        rows, columns = dm.shape
        out = self.zeros((rows, columns))
        for i, row in enumerate(dm.to_list()):
            for j, value in enumerate(row):
                out[i, j] = value
        return out

    def rref(self, rows: np.ndarray) -> tuple[np.ndarray, tuple]:
        rows = np.asarray(rows, dtype=object)
        if rows.shape[0] == 0:
            return self.zeros((0, rows.shape[1])), ()
        reduced, pivots = self._domain_matrix(rows).rref()
        dense = self._from_domain_matrix(reduced)
        return dense[: len(pivots)], tuple(pivots)

    def inv(self, matrix: np.ndarray) -> np.ndarray:
        n = matrix.shape[0]
        reduced, pivots = self.rref(np.concatenate([matrix, self.eye(n)], axis=1))
        if tuple(pivots[:n]) != tuple(range(n)):
            raise SingularMatrixError(f"matrix of size {n} is singular")
        return reduced[:, n:]

    def eigenvalues(self, matrix: np.ndarray) -> EigenvalueSet:
        n = matrix.shape[0]
        coefficients = self._domain_matrix(np.asarray(matrix, dtype=object)).charpoly()
        expression = sum(
            QQ_I.to_sympy(c) * _EIGEN_SYMBOL ** (n - k) for k, c in enumerate(coefficients)
        )
        # Linear factors over Q(i) are exactly the Gaussian rational roots
        _, factors = sympy.factor_list(sympy.expand(expression), _EIGEN_SYMBOL, extension=sympy.I)
        roots = {}
        for factor, multiplicity in factors:
            linear = sympy.Poly(factor, _EIGEN_SYMBOL)
            if linear.degree() != 1:
                continue
            leading, constant = linear.all_coeffs()
            root = QQ_I.from_sympy(sympy.expand(-constant / leading))
            roots[root] = roots.get(root, 0) + multiplicity
        values = sorted(roots, key=self.sort_key)
        complete = sum(roots.values()) == n
        if not complete:
            logger.debug("Characteristic polynomial does not split over QQ_I (degree %d)", n)
        return EigenvalueSet(values, complete)


class NumericBackend(Backend):
    """Floating complex arithmetic with tolerance-based equality."""

    name = "numeric"

    def __init__(self, tolerance: ToleranceConfig = None):
        self.tolerance = tolerance or ToleranceConfig.from_settings()

    @property
    def dtype(self):
        return complex

    def scalar(self, value):
        if isinstance(value, QQ_I.dtype):
            return complex(float(value.x), float(value.y))
        if isinstance(value, str):
            return self.scalar(parse_exact_scalar(value))
        return complex(value)

    def asarray(self, data) -> np.ndarray:
        try:
            return np.asarray(data, dtype=complex)
        except (TypeError, ValueError):
            return super().asarray(data)

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=complex)

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=complex)

    def random_scalars(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.standard_normal(count) + 1j * rng.standard_normal(count)

    def is_zero(self, value) -> bool:
        return abs(value) <= self.tolerance.eps_abs

    def equal(self, a, b) -> bool:
        a, b = complex(a), complex(b)
        scale = max(abs(a), abs(b))
        return abs(a - b) <= self.tolerance.eps_abs + self.tolerance.eps_rel * scale

    def is_zero_array(self, array: np.ndarray) -> bool:
        array = np.asarray(array, dtype=complex)
        return array.size == 0 or float(np.max(np.abs(array))) <= self.tolerance.eps_abs

    def arrays_equal(self, a: np.ndarray, b: np.ndarray) -> bool:
        a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
        if a.shape != b.shape:
            return False
        scale = np.maximum(np.abs(a), np.abs(b))
        return bool(np.all(np.abs(a - b) <= self.tolerance.eps_abs + self.tolerance.eps_rel * scale))

    def real_part(self, value):
        return complex(complex(value).real)

    def imag_part(self, value):
        return complex(complex(value).imag)

    def real(self, array: np.ndarray) -> np.ndarray:
        return np.asarray(array, dtype=complex).real.astype(complex)

    def imag(self, array: np.ndarray) -> np.ndarray:
        return np.asarray(array, dtype=complex).imag.astype(complex)

    def inner(self, u: np.ndarray, v: np.ndarray):
        return complex(np.vdot(u, v))

    def magnitude(self, value) -> float:
        return abs(complex(value))

    def as_complex(self, value) -> complex:
        return complex(value)

    def to_complex(self, array) -> np.ndarray:
        return np.asarray(array, dtype=complex)

    def sort_key(self, value) -> tuple:
        value = complex(value)
        return (round(value.real, 9), round(value.imag, 9))

    @property
    def can_normalize(self) -> bool:
        return True

    def normalize(self, v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    def rref(self, rows: np.ndarray) -> tuple[np.ndarray, tuple]:
        rows = np.asarray(rows, dtype=complex)
        if rows.shape[0] == 0 or rows.shape[1] == 0:
            return np.zeros((0, rows.shape[1]), dtype=complex), ()
        orthonormal = scipy.linalg.orth(rows.T, rcond=self.tolerance.rank_threshold).T
        rank = orthonormal.shape[0]
        if rank == 0:
            return np.zeros((0, rows.shape[1]), dtype=complex), ()
        # column-pivoted QR keeps the pivot block well conditioned
        _, _, permutation = scipy.linalg.qr(orthonormal, mode="economic", pivoting=True)
        pivots = sorted(int(j) for j in permutation[:rank])
        reduced = scipy.linalg.solve(orthonormal[:, pivots], orthonormal)
        reduced[np.abs(reduced) <= self.tolerance.eps_abs] = 0
        return reduced, tuple(pivots)

    def nullspace(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape[0] == 0:
            return np.eye(matrix.shape[1], dtype=complex)
        return scipy.linalg.null_space(matrix, rcond=self.tolerance.rank_threshold).T

    def solve(self, matrix: np.ndarray, rhs: np.ndarray) -> Optional[np.ndarray]:
        matrix = np.asarray(matrix, dtype=complex)
        rhs = np.asarray(rhs, dtype=complex)
        if matrix.shape[1] == 0:
            return np.zeros(0, dtype=complex) if self.is_zero_array(rhs) else None
        solution, *_ = scipy.linalg.lstsq(matrix, rhs, cond=self.tolerance.rank_threshold)
        residual = np.linalg.norm(matrix @ solution - rhs)
        scale = max(1.0, np.linalg.norm(rhs))
        if residual > self.tolerance.rank_threshold * scale:
            return None
        return solution

    def inv(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=complex)
        singular_values = scipy.linalg.svdvals(matrix)
        if singular_values.min() <= self.tolerance.rank_threshold * max(1.0, singular_values.max()):
            raise SingularMatrixError(
                f"matrix of size {matrix.shape[0]} is numerically singular "
                f"(smallest singular value {singular_values.min():.3e})"
            )
        return scipy.linalg.inv(matrix)

    def rank(self, rows: np.ndarray) -> int:
        rows = np.asarray(rows, dtype=complex)
        if rows.size == 0:
            return 0
        return int(np.linalg.matrix_rank(rows, tol=self.tolerance.rank_threshold))

    def cluster_radius(self, matrix: np.ndarray) -> float:
        """Radius within which computed eigenvalues are treated as one.

        Eigenvalues of a defective block of size n move by roughly eps**(1/n).
        """
        n = matrix.shape[0]
        scale = max(1.0, float(np.max(np.abs(matrix))) if matrix.size else 1.0)
        return max(self.tolerance.rank_threshold, 10 * (1e-15 * scale) ** (1.0 / n))

    def eigenvalues(self, matrix: np.ndarray) -> EigenvalueSet:
        matrix = np.asarray(matrix, dtype=complex)
        raw = scipy.linalg.eigvals(matrix)
        radius = self.cluster_radius(matrix)
        clusters: list[list[complex]] = []
        for value in sorted(raw, key=self.sort_key):
            for cluster in clusters:
                if abs(value - np.mean(cluster)) <= radius:
                    cluster.append(value)
                    break
            else:
                clusters.append([value])
        centers = [complex(np.mean(cluster)) for cluster in clusters]
        for i, a in enumerate(centers):
            for b in centers[i + 1 :]:
                if abs(a - b) <= 10 * radius:
                    raise EigenvalueAmbiguityError(
                        f"eigenvalues {a:.3g} and {b:.3g} are too close to separate; "
                        "rerun with the exact backend"
                    )
        return EigenvalueSet(sorted(centers, key=self.sort_key), True)

    def __repr__(self):
        return f"NumericBackend({self.tolerance!r})"


def get_backend(name: str = None, tolerance: ToleranceConfig = None) -> Backend:
    """Backend by name ("exact" / "numeric"); defaults come from settings."""
    name = (name or settings.BACKEND).lower()
    if name == "exact":
        return ExactBackend()
    if name == "numeric":
        return NumericBackend(tolerance)
    raise PreconditionError(f"unknown backend {name!r}", "get_backend")
