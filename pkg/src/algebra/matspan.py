"""
Linear spans of matrices and operator algebras.

A :class:`MatSpan` is a subspace of M_n stored through its row-major
vectorization: echelon rows in exact mode, Frobenius-orthonormal rows in
numeric mode. An :class:`OperatorAlgebra` is a
product-stable span together with the operator space it acts on: all of C^n
by default, or a subspace E for compressions, in which case every element
satisfies ``B = P_E B P_E`` and the algebra's unit is ``P_E``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from src.exceptions import DimensionMismatchError, PreconditionError
from src.linalg.backend import Backend, NumericBackend, get_backend
from src.linalg.subspace import (
    EchelonBuilder,
    Subspace,
    canonical_basis,
    full_space,
    intersect,
    orth_projection,
)

if TYPE_CHECKING:
    from src.algebra.families import FamilyProvenance

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MatSpan:
    """A linear subspace of M_n stored as vectorized rows."""

    n: int
    rows: np.ndarray  # dim x n^2
    backend: Backend = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.rows.shape[0])

    @property
    def basis(self) -> list[np.ndarray]:
        return [row.reshape(self.n, self.n).copy() for row in self.rows]

    @cached_property
    def _echelon(self) -> EchelonBuilder:
        builder = EchelonBuilder(self.backend, self.n * self.n)
        for row in self.rows:
            builder.add(row)
        return builder

    def contains(self, matrix: np.ndarray) -> bool:
        matrix = self.backend.asarray(matrix)
        if matrix.shape != (self.n, self.n):
            raise DimensionMismatchError("matrix size does not match the span", self.n, matrix.shape[0])
        return self._echelon.contains(matrix.reshape(-1))

    def combination(self, coefficients: Sequence) -> np.ndarray:
        total = self.backend.zeros((self.n, self.n))
        for coefficient, matrix in zip(coefficients, self.basis):
            total = total + matrix * self.backend.scalar(coefficient)
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatSpan):
            return NotImplemented
        if self.n != other.n or self.dim != other.dim:
            return False
        if isinstance(self.backend, NumericBackend):
            return all(other.contains(matrix) for matrix in self.basis)
        return self.backend.arrays_equal(self.rows, other.rows)

    __hash__ = None

    def __repr__(self) -> str:
        return f"MatSpan(n={self.n}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class OperatorAlgebra:
    """A product-stable span of matrices acting on ``space``."""

    span: MatSpan
    unital: bool
    space: Subspace
    provenance: Optional["FamilyProvenance"] = None

    @property
    def n(self) -> int:
        return self.span.n

    @property
    def dim(self) -> int:
        return self.span.dim

    @property
    def basis(self) -> list[np.ndarray]:
        return self.span.basis

    @property
    def backend(self) -> Backend:
        return self.span.backend

    @property
    def is_compressed(self) -> bool:
        return not self.space.is_full()

    @cached_property
    def unit(self) -> np.ndarray:
        """Identity of the operator space: I, or the projection onto ``space``."""
        if self.space.is_full():
            return self.backend.eye(self.n)
        return orth_projection(self.space)

    def is_full(self) -> bool:
        """Whether the algebra is all of B(space)."""
        return self.dim == self.space.dim**2

    def contains(self, matrix: np.ndarray) -> bool:
        return self.span.contains(matrix)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorAlgebra):
            return NotImplemented
        return self.span == other.span and self.space == other.space

    __hash__ = None

    def __repr__(self) -> str:
        kind = self.provenance.kind if self.provenance is not None else "Generic"
        return f"OperatorAlgebra(n={self.n}, dim={self.dim}, unital={self.unital}, kind={kind})"


def _vectorize(matrices: Iterable[np.ndarray], backend: Backend, n: int) -> list[np.ndarray]:
    vectors = []
    for matrix in matrices:
        matrix = backend.asarray(matrix)
        if matrix.shape != (n, n):
            raise DimensionMismatchError("generators must share one size", n, matrix.shape[0])
        vectors.append(matrix.reshape(-1))
    return vectors


def span_of_matrices(
    matrices: Iterable[np.ndarray], backend: Backend = None, n: Optional[int] = None
) -> MatSpan:
    """Canonical span of a list of matrices."""
    backend = backend or get_backend()
    matrices = list(matrices)
    if n is None:
        if not matrices:
            raise DimensionMismatchError("matrix size of an empty span is unknown")
        n = np.shape(matrices[0])[0]
    builder = EchelonBuilder(backend, n * n)
    for vector in _vectorize(matrices, backend, n):
        builder.add(vector)
    return MatSpan(n, builder.rows(), backend)


def close_algebra(
    generators: Iterable[np.ndarray],
    unital: bool,
    backend: Backend = None,
    n: Optional[int] = None,
    space: Optional[Subspace] = None,
    provenance: Optional["FamilyProvenance"] = None,
) -> OperatorAlgebra:
    """Smallest product-stable span containing ``generators`` (and the unit if unital).

    Each round multiplies the newly added elements against everything kept so
    far, so every pair is multiplied exactly once; the loop stops when a round
    adds nothing or the span is all of B(space).
    """
    backend = backend or get_backend()
    generators = list(generators)
    if n is None:
        if space is not None:
            n = space.ambient_dim
        elif generators:
            n = np.shape(generators[0])[0]
        else:
            raise DimensionMismatchError("matrix size of an empty generator list is unknown")
    space = space if space is not None else full_space(n, backend)
    ceiling = space.dim**2

    builder = EchelonBuilder(backend, n * n)
    kept: list[np.ndarray] = []
    seeds = list(generators)
    if unital:
        seeds.insert(0, backend.eye(n) if space.is_full() else orth_projection(space))
    for vector in _vectorize(seeds, backend, n):
        if builder.add(vector):
            kept.append(vector.reshape(n, n))

    frontier = list(kept)
    rounds = 0
    while frontier and len(builder) < ceiling:
        rounds += 1
        added: list[np.ndarray] = []
        settled = kept[: len(kept) - len(frontier)]
        pairs = [(new, old) for new in frontier for old in settled + frontier]
        for new, old in pairs:
            if len(builder) == ceiling:
                break
            for product in (new @ old, old @ new):
                if builder.add(product.reshape(-1)):
                    added.append(product)
        kept.extend(added)
        frontier = added
        logger.debug("closure round %d: dim %d", rounds, len(builder))

    span = MatSpan(n, builder.rows(), backend)
    logger.debug("Closed %d generators to an algebra of dimension %d", len(generators), span.dim)
    return OperatorAlgebra(span, unital, space, provenance)


def algebra_from_span(
    span: MatSpan,
    unital: bool,
    space: Optional[Subspace] = None,
    provenance: Optional["FamilyProvenance"] = None,
) -> OperatorAlgebra:
    """Wrap a span already known to be product stable (checked)."""
    space = space if space is not None else full_space(span.n, span.backend)
    algebra = OperatorAlgebra(span, unital, space, provenance)
    basis = algebra.basis
    for a in basis:
        for b in basis:
            if not span.contains(a @ b):
                raise PreconditionError("span is not closed under products", "algebra_from_span")
    if unital and not span.contains(algebra.unit):
        raise PreconditionError("unital span misses the unit", "algebra_from_span")
    return algebra


def member(s, matrix: np.ndarray) -> bool:
    """Whether ``matrix`` lies in a MatSpan or OperatorAlgebra."""
    span = s.span if isinstance(s, OperatorAlgebra) else s
    return span.contains(matrix)


def coordinates(s, matrix: np.ndarray):
    """Coefficients of ``matrix`` in the canonical basis, or None when outside."""
    span = s.span if isinstance(s, OperatorAlgebra) else s
    backend = span.backend
    vector = backend.asarray(matrix).reshape(-1)
    if span.dim == 0:
        return backend.zeros(0) if backend.is_zero_array(vector) else None
    return backend.solve(span.rows.T, vector)


def adjoint_span(s) -> MatSpan:
    span = s.span if isinstance(s, OperatorAlgebra) else s
    backend = span.backend
    return span_of_matrices([backend.adjoint(b) for b in span.basis], backend, span.n)


def _as_subspace(span: MatSpan) -> Subspace:
    return canonical_basis(list(span.rows), span.backend, span.n * span.n)


def intersect_spans(s1, s2) -> MatSpan:
    """Intersection of two spans under vectorization."""
    s1 = s1.span if isinstance(s1, OperatorAlgebra) else s1
    s2 = s2.span if isinstance(s2, OperatorAlgebra) else s2
    if s1.n != s2.n:
        raise DimensionMismatchError("spans of different matrix sizes", s1.n, s2.n)
    common = intersect(_as_subspace(s1), _as_subspace(s2))
    return MatSpan(s1.n, common.basis, s1.backend)


def conjugate(algebra: OperatorAlgebra, similarity: np.ndarray) -> OperatorAlgebra:
    """S A S^-1 for an invertible S."""
    if algebra.is_compressed:
        raise PreconditionError("conjugation is defined for algebras on all of C^n", "conjugate")
    backend = algebra.backend
    similarity = backend.asarray(similarity)
    inverse = backend.inv(similarity)
    span = span_of_matrices([similarity @ b @ inverse for b in algebra.basis], backend, algebra.n)
    return OperatorAlgebra(span, algebra.unital, algebra.space)


def unitize(algebra: OperatorAlgebra) -> OperatorAlgebra:
    """Closure of A together with its unit."""
    if algebra.unital or algebra.contains(algebra.unit):
        return replace(algebra, unital=True)
    return close_algebra(
        algebra.basis, True, algebra.backend, algebra.n, algebra.space, algebra.provenance
    )


def random_element(algebra, rng: np.random.Generator) -> np.ndarray:
    """Seeded random combination of the canonical basis."""
    span = algebra.span if isinstance(algebra, OperatorAlgebra) else algebra
    return span.combination(span.backend.random_scalars(rng, span.dim))


def full_algebra(n: int, backend: Backend = None) -> OperatorAlgebra:
    """M_n."""
    backend = backend or get_backend()
    units = [backend.matrix_unit(n, i, j) for i in range(n) for j in range(n)]
    return OperatorAlgebra(span_of_matrices(units, backend, n), True, full_space(n, backend))


def scalar_algebra(n: int, backend: Backend = None) -> OperatorAlgebra:
    """C·I."""
    backend = backend or get_backend()
    return OperatorAlgebra(
        span_of_matrices([backend.eye(n)], backend, n), True, full_space(n, backend)
    )


def is_product_stable(algebra) -> bool:
    span = algebra.span if isinstance(algebra, OperatorAlgebra) else algebra
    basis = span.basis
    return all(span.contains(a @ b) for a in basis for b in basis)
