"""
Subspaces of C^n and the orthogonality toolkit built on them.

A :class:`Subspace` stores its basis as rows: reduced row echelon form in
exact mode, so equal subspaces have literally equal bases, and an orthonormal
basis in numeric mode, where equality is mutual containment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from src.exceptions import ContainmentError, DimensionMismatchError, RankDeficiencyError
from src.linalg.backend import Backend, NumericBackend

logger = logging.getLogger(__name__)

SUBSPACE_OPERATIONS = ("sum", "intersect", "orth_complement", "orth_difference")


class EchelonBuilder:
    """Incrementally grows a span, reporting whether each vector was new.

    Exact mode keeps a reduced echelon basis; numeric mode keeps an orthonormal
    basis re-orthogonalized on every insertion.
    """

    def __init__(self, backend: Backend, length: int):
        self.backend = backend
        self.length = length
        self._rows: list[np.ndarray] = []
        self._pivots: list[int] = []

    def __len__(self) -> int:
        return len(self._rows)

    def residual(self, vector: np.ndarray) -> np.ndarray:
        vector = self.backend.asarray(vector).copy()
        if isinstance(self.backend, NumericBackend):
            for _ in range(2):
                for row in self._rows:
                    vector = vector - np.vdot(row, vector) * row
            return vector
        for row, pivot in zip(self._rows, self._pivots):
            coefficient = vector[pivot]
            if coefficient:
                vector = vector - row * coefficient
        return vector

    def contains(self, vector: np.ndarray) -> bool:
        return self._is_negligible(self.residual(vector), vector)

    def _is_negligible(self, residual: np.ndarray, original: np.ndarray) -> bool:
        if isinstance(self.backend, NumericBackend):
            scale = max(1.0, float(np.linalg.norm(np.asarray(original, dtype=complex))))
            return float(np.linalg.norm(residual)) <= self.backend.tolerance.rank_threshold * scale
        return self.backend.is_zero_array(residual)

    def add(self, vector: np.ndarray) -> bool:
        """Add a vector; return True if it enlarged the span."""
        if len(self._rows) == self.length:
            return False
        residual = self.residual(vector)
        if self._is_negligible(residual, vector):
            return False
        if isinstance(self.backend, NumericBackend):
            self._rows.append(residual / np.linalg.norm(residual))
            return True
        pivot = next(i for i, value in enumerate(residual) if value)
        residual = residual / residual[pivot]
        for index, row in enumerate(self._rows):
            if row[pivot]:
                self._rows[index] = row - residual * row[pivot]
        position = sum(1 for p in self._pivots if p < pivot)
        self._rows.insert(position, residual)
        self._pivots.insert(position, pivot)
        return True

    def rows(self) -> np.ndarray:
        """Reduced echelon rows (exact) or orthonormal rows (numeric) of the span."""
        if not self._rows:
            return self.backend.zeros((0, self.length))
        return np.array(self._rows, dtype=self.backend.dtype)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of C^n (echelon basis in exact mode, orthonormal in numeric)."""

    ambient_dim: int
    basis: np.ndarray
    backend: Backend = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def vectors(self) -> list[np.ndarray]:
        return [row.copy() for row in self.basis]

    @property
    def columns(self) -> np.ndarray:
        """Basis vectors as the columns of an ambient_dim x dim matrix."""
        return self.basis.T.copy()

    def is_zero(self) -> bool:
        return self.dim == 0

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def contains(self, vector: np.ndarray) -> bool:
        _check_length(vector, self.ambient_dim)
        builder = EchelonBuilder(self.backend, self.ambient_dim)
        for row in self.basis:
            builder.add(row)
        return builder.contains(vector)

    def is_subspace_of(self, other: "Subspace") -> bool:
        _check_same_ambient(self, other)
        if self.dim > other.dim:
            return False
        return all(other.contains(row) for row in self.basis)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        if self.ambient_dim != other.ambient_dim or self.dim != other.dim:
            return False
        if isinstance(self.backend, NumericBackend):
            return all(other.contains(row) for row in self.basis)
        return self.backend.arrays_equal(self.basis, other.basis)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def _check_length(vector, n: int):
    if len(vector) != n:
        raise DimensionMismatchError("vector has the wrong length", n, len(vector))


def _check_same_ambient(a: Subspace, b: Subspace):
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatchError("subspaces of different spaces", a.ambient_dim, b.ambient_dim)


def canonical_basis(
    vectors: Iterable[np.ndarray], backend: Backend, ambient_dim: Optional[int] = None
) -> Subspace:
    """Span of ``vectors`` with the backend's canonical rows."""
    vectors = [backend.asarray(v) for v in vectors]
    if ambient_dim is None:
        if not vectors:
            raise DimensionMismatchError("ambient dimension of an empty spanning set is unknown")
        ambient_dim = len(vectors[0])
    builder = EchelonBuilder(backend, ambient_dim)
    for vector in vectors:
        _check_length(vector, ambient_dim)
        builder.add(vector)
    return Subspace(ambient_dim, builder.rows(), backend)


def zero_subspace(n: int, backend: Backend) -> Subspace:
    return Subspace(n, backend.zeros((0, n)), backend)


def full_space(n: int, backend: Backend) -> Subspace:
    return Subspace(n, backend.eye(n), backend)


def coordinate_span(n: int, indices: Iterable[int], backend: Backend) -> Subspace:
    """span{e_i : i in indices} (0-based)."""
    return canonical_basis([backend.unit_vector(n, i) for i in indices], backend, n)


def span_of(vectors: Sequence[np.ndarray], indices: Iterable[int], backend: Backend, n: int):
    """span{vectors[i] : i in indices}."""
    return canonical_basis([vectors[i] for i in indices], backend, n)


def sum_subspaces(e1: Subspace, e2: Subspace) -> Subspace:
    _check_same_ambient(e1, e2)
    return canonical_basis(list(e1.basis) + list(e2.basis), e1.backend, e1.ambient_dim)


def orth_complement(e: Subspace) -> Subspace:
    backend = e.backend
    if e.dim == 0:
        return full_space(e.ambient_dim, backend)
    return canonical_basis(backend.nullspace(backend.conj(e.basis)), backend, e.ambient_dim)


def intersect(e1: Subspace, e2: Subspace) -> Subspace:
    _check_same_ambient(e1, e2)
    return orth_complement(sum_subspaces(orth_complement(e1), orth_complement(e2)))


def orth_difference(e1: Subspace, e2: Subspace) -> Subspace:
    """E1 ⊖ E2 = E1 ∩ E2⊥, defined when E2 ⊆ E1."""
    if not e2.is_subspace_of(e1):
        raise ContainmentError("orthogonal difference needs the second subspace inside the first")
    return intersect(e1, orth_complement(e2))


def subspace_ops(e1: Subspace, e2: Optional[Subspace], kind: str) -> Subspace:
    """Dispatch over the four subspace constructions."""
    if kind == "sum":
        return sum_subspaces(e1, e2)
    if kind == "intersect":
        return intersect(e1, e2)
    if kind == "orth_complement":
        return orth_complement(e1)
    if kind == "orth_difference":
        return orth_difference(e1, e2)
    raise ValueError(f"unknown subspace operation {kind!r}; expected one of {SUBSPACE_OPERATIONS}")


@dataclass(frozen=True)
class GramSchmidtResult:
    """Output of :func:`gram_schmidt`.

    In exact mode the vectors are orthogonal but not normalized and
    ``squared_norms`` records their norms; numeric output is orthonormal.
    """

    vectors: list
    squared_norms: list
    normalized: bool


def gram_schmidt(ordered: Sequence[np.ndarray], backend: Backend) -> GramSchmidtResult:
    """Orthogonalize preserving every prefix span."""
    output: list[np.ndarray] = []
    norms: list = []
    for index, vector in enumerate(ordered):
        w = backend.asarray(vector).copy()
        for _ in range(2 if backend.can_normalize else 1):
            for previous, norm in zip(output, norms):
                w = w - previous * (backend.inner(previous, w) / norm)
        norm = backend.norm_sq(w)
        if backend.can_normalize:
            scale = max(1.0, float(np.linalg.norm(np.asarray(vector, dtype=complex))))
            if abs(norm) <= (backend.tolerance.rank_threshold * scale) ** 2:
                raise RankDeficiencyError("gram_schmidt input is linearly dependent", index)
            w = backend.normalize(w)
            norm = backend.scalar(1)
        elif backend.is_zero(norm):
            raise RankDeficiencyError("gram_schmidt input is linearly dependent", index)
        output.append(w)
        norms.append(norm)
    return GramSchmidtResult(output, norms, backend.can_normalize)


def orth_projection(e: Subspace) -> np.ndarray:
    """Orthogonal projection onto E: V (V*V)^-1 V*."""
    backend = e.backend
    n = e.ambient_dim
    if e.dim == 0:
        return backend.zeros((n, n))
    columns = e.columns
    gram = backend.adjoint(columns) @ columns
    return columns @ backend.inv(gram) @ backend.adjoint(columns)


def kernel(matrix: np.ndarray, backend: Backend) -> Subspace:
    """{v : Mv = 0} in canonical form."""
    matrix = backend.asarray(matrix)
    return canonical_basis(backend.nullspace(matrix), backend, matrix.shape[1])


def coordinates(vectors: Sequence[np.ndarray], vector: np.ndarray, backend: Backend):
    """Coefficients c with sum c_i vectors[i] = vector, or None if outside the span."""
    if len(vectors) == 0:
        return backend.zeros(0) if backend.is_zero_array(vector) else None
    return backend.solve(np.array(vectors, dtype=backend.dtype).T, backend.asarray(vector))


def change_of_basis(matrix: np.ndarray, vectors: Sequence[np.ndarray], backend: Backend):
    """Matrix of an operator in the ordered basis ``vectors`` (V^-1 M V)."""
    basis = np.array(vectors, dtype=backend.dtype).T
    return backend.inv(basis) @ backend.asarray(matrix) @ basis


def is_linearly_independent(vectors: Sequence[np.ndarray], backend: Backend) -> bool:
    if not vectors:
        return True
    return backend.rank(np.array(vectors, dtype=backend.dtype)) == len(vectors)
