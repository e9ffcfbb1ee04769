"""
Invariant, coinvariant and semi-invariant subspaces.

Compressions keep their ambient size: ``compress(A, spec)`` returns the
algebra of matrices ``P B P`` (P the orthogonal projection onto
``E = E1 ⊖ E2``) with ``space = E``. Algebras produced this way can be
searched, compressed again and tested for antisymmetry exactly like the
algebras they came from; :func:`local_form` gives the dim(E) x dim(E)
matrices when those are wanted.

The invariant-subspace search is randomized (MeatAxe style):

1. draw a seeded random element B of the algebra,
2. take an eigenvalue λ of B available in the backend's field,
3. take vectors v of E with (B - λ P_E) v = 0,
4. return the orbit span{v, Av, A²v, ...} if it is a proper subspace of E,
5. repeat steps 3-4 on the adjoint algebra and return E ⊖ W for a proper
   coinvariant W.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.linalg

from src import settings
from src.algebra.matspan import OperatorAlgebra, random_element, span_of_matrices
from src.exceptions import (
    ContainmentError,
    EigenvalueAmbiguityError,
    NotInvariantError,
    PreconditionError,
    SingularMatrixError,
)
from src.linalg.backend import Backend, NumericBackend
from src.linalg.subspace import (
    EchelonBuilder,
    Subspace,
    gram_schmidt,
    intersect,
    kernel,
    orth_complement,
    orth_difference,
    orth_projection,
    span_of,
    sum_subspaces,
    zero_subspace,
)

logger = logging.getLogger(__name__)

FOUND = "found"
NONE_EXISTS = "none"
UNKNOWN = "unknown"

# Discovered lattices stop growing past this many subspaces
MAX_DISCOVERED_LATTICE = 64


@dataclass(frozen=True, eq=False)
class SemiInvariantSpec:
    """An orthogonal difference E = E1 ⊖ E2 of nested subspaces."""

    e1: Subspace
    e2: Subspace

    def __post_init__(self):
        if not self.e2.is_subspace_of(self.e1):
            raise ContainmentError("semi-invariant spec needs E2 inside E1")

    @cached_property
    def e(self) -> Subspace:
        return orth_difference(self.e1, self.e2)

    @property
    def dim(self) -> int:
        return self.e1.dim - self.e2.dim

    def __repr__(self) -> str:
        return f"SemiInvariantSpec(dim E1={self.e1.dim}, dim E2={self.e2.dim})"


@dataclass(frozen=True)
class CompanionProjection:
    """Companion subspace F of E2 in E1 and the natural projection onto it."""

    f: Subspace
    q: np.ndarray  # range F, kernel E2 + E1⊥


@dataclass
class InvariantChain:
    """Strictly increasing invariant subspaces ending at the whole space."""

    subspaces: list[Subspace] = field(default_factory=list)

    def verify(self, algebra: OperatorAlgebra) -> bool:
        dims = [s.dim for s in self.subspaces]
        if any(b <= a for a, b in zip(dims, dims[1:])):
            return False
        nested = all(a.is_subspace_of(b) for a, b in zip(self.subspaces, self.subspaces[1:]))
        return nested and all(is_invariant(algebra, s) for s in self.subspaces)


@dataclass
class InvariantSearchResult:
    """Outcome of :func:`find_nontrivial_invariant_subspace`."""

    status: str  # "found" | "none" | "unknown"
    subspace: Optional[Subspace] = None
    attempts: int = 0


@dataclass
class Lattice:
    """A list of invariant subspaces; ``complete`` when it is the whole lattice."""

    subspaces: list[Subspace]
    complete: bool

    def __iter__(self):
        return iter(self.subspaces)

    def __len__(self) -> int:
        return len(self.subspaces)


def _images_stay(matrices: Sequence[np.ndarray], e: Subspace) -> bool:
    builder = EchelonBuilder(e.backend, e.ambient_dim)
    for row in e.basis:
        builder.add(row)
    return all(builder.contains(b @ v) for b in matrices for v in e.basis)


def is_invariant(algebra: OperatorAlgebra, e: Subspace) -> bool:
    """B·v ∈ E for every basis matrix B and basis vector v of E."""
    return _images_stay(algebra.basis, e)


def is_coinvariant(algebra: OperatorAlgebra, e: Subspace) -> bool:
    """E invariant under every adjoint B*."""
    backend = algebra.backend
    return _images_stay([backend.adjoint(b) for b in algebra.basis], e)


def _orbit(matrices: Sequence[np.ndarray], vector: np.ndarray, backend: Backend, n: int):
    builder = EchelonBuilder(backend, n)
    builder.add(vector)
    queue = [backend.asarray(vector)]
    numeric = isinstance(backend, NumericBackend)
    while queue and len(builder) < n:
        current = queue.pop(0)
        for matrix in matrices:
            image = matrix @ current
            if builder.add(image):
                if numeric:
                    image = image / np.linalg.norm(image)
                queue.append(image)
    return Subspace(n, builder.rows(), backend)


def orbit_subspace(algebra: OperatorAlgebra, vector: np.ndarray, adjoint: bool = False) -> Subspace:
    """Smallest invariant subspace containing ``vector``."""
    backend = algebra.backend
    matrices = algebra.basis
    if adjoint:
        matrices = [backend.adjoint(b) for b in matrices]
    return _orbit(matrices, backend.asarray(vector), backend, algebra.n)


def _eigenvectors(matrix: np.ndarray, value, space: Subspace, backend: Backend) -> list:
    """Vectors of ``space`` annihilated (approximately, in numeric mode) by matrix - value."""
    if isinstance(backend, NumericBackend):
        basis = scipy.linalg.orth(np.asarray(space.columns, dtype=complex))
        local = basis.conj().T @ (matrix - value * np.eye(space.ambient_dim)) @ basis
        _, singular, vh = scipy.linalg.svd(local)
        radius = backend.cluster_radius(local) * max(1.0, float(np.max(np.abs(local))))
        chosen = [k for k, s in enumerate(singular) if s <= radius] or [len(singular) - 1]
        return [basis @ vh[k].conj() for k in chosen]
    shifted = matrix - orth_projection(space) * backend.scalar(value)
    return intersect(kernel(shifted, backend), space).vectors


def _candidate_subspaces(
    algebra: OperatorAlgebra, rng: np.random.Generator, restarts: int
) -> Iterator[Subspace]:
    """Proper nonzero invariant subspaces met by the randomized search."""
    backend = algebra.backend
    space = algebra.space
    adjoint_basis = [backend.adjoint(b) for b in algebra.basis]
    for attempt in range(restarts):
        element = random_element(algebra, rng)
        try:
            eigen = backend.eigenvalues(element)
        except EigenvalueAmbiguityError as e:
            logger.debug("restart %d skipped: %s", attempt, e)
            continue
        if not eigen.values:
            logger.debug("restart %d: no eigenvalue in the field, drawing again", attempt)
            continue
        values = eigen.values
        if algebra.is_compressed:
            # P_E B P_E also has the eigenvalue 0 from E⊥, which may be absent on E
            values = sorted(values, key=lambda v: backend.is_zero(v))
        for value in values:
            conjugate_value = backend.conj(np.asarray([value]))[0]
            for side, matrix, basis, target in (
                ("direct", element, algebra.basis, value),
                ("adjoint", backend.adjoint(element), adjoint_basis, conjugate_value),
            ):
                vectors = _eigenvectors(matrix, target, space, backend)
                if len(vectors) > 1:
                    mix = backend.random_scalars(rng, len(vectors))
                    vectors = vectors + [sum(v * c for v, c in zip(vectors, mix))]
                for vector in vectors:
                    if backend.is_zero_array(vector):
                        continue
                    orbit = _orbit(basis, vector, backend, algebra.n)
                    if 0 < orbit.dim < space.dim:
                        found = orbit if side == "direct" else orth_difference(space, orbit)
                        logger.debug(
                            "restart %d: %s orbit gives invariant subspace of dim %d",
                            attempt,
                            side,
                            found.dim,
                        )
                        yield found


def find_nontrivial_invariant_subspace(
    algebra: OperatorAlgebra, seed: Optional[int] = None, budget: Optional[int] = None
) -> InvariantSearchResult:
    """Search the algebra's space for a proper nonzero invariant subspace.

    ``none`` is a certificate (the algebra is all of B(E), or dim E <= 1);
    ``unknown`` means the restart budget ran out.
    """
    seed = settings.SEED if seed is None else seed
    budget = settings.SEARCH_BUDGET if budget is None else budget
    if algebra.space.dim <= 1 or algebra.is_full():
        return InvariantSearchResult(NONE_EXISTS)

    rng = np.random.default_rng(seed)
    for found in _candidate_subspaces(algebra, rng, budget):
        if is_invariant(algebra, found):
            return InvariantSearchResult(FOUND, found)
        logger.debug("discarding a candidate that failed the invariance check")
    logger.warning("invariant subspace search exhausted its budget of %d restarts", budget)
    return InvariantSearchResult(UNKNOWN, attempts=budget)


def is_semi_invariant(algebra: OperatorAlgebra, e: Subspace) -> bool:
    """Whether B ↦ P B P is multiplicative on the canonical basis."""
    backend = algebra.backend
    p = orth_projection(e)
    compressed = [p @ b @ p for b in algebra.basis]
    basis = algebra.basis
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            if not backend.arrays_equal(p @ a @ b @ p, compressed[i] @ compressed[j]):
                return False
    return True


def validate_spec(algebra: OperatorAlgebra, spec: SemiInvariantSpec):
    """Raise NotInvariantError unless E1 and E2 are invariant (inside the algebra's space)."""
    for name, subspace in (("E1", spec.e1), ("E2", spec.e2)):
        if not subspace.is_subspace_of(algebra.space):
            raise ContainmentError(f"{name} is not inside the space the algebra acts on")
        if not is_invariant(algebra, subspace):
            raise NotInvariantError(f"{name} is not invariant", "compress")


def make_spec(algebra: OperatorAlgebra, e1: Subspace, e2: Optional[Subspace] = None):
    """Build and validate the spec for E1 ⊖ E2 (E2 defaults to {0})."""
    e2 = e2 if e2 is not None else zero_subspace(e1.ambient_dim, e1.backend)
    spec = SemiInvariantSpec(e1, e2)
    validate_spec(algebra, spec)
    return spec


def compress(
    algebra: OperatorAlgebra, spec: SemiInvariantSpec, validate: bool = True
) -> OperatorAlgebra:
    """The algebra P A P on E = E1 ⊖ E2, as ambient matrices."""
    if validate:
        validate_spec(algebra, spec)
    e = spec.e
    p = orth_projection(e)
    span = span_of_matrices([p @ b @ p for b in algebra.basis], algebra.backend, algebra.n)
    return OperatorAlgebra(span, algebra.unital, e)


def compose_specs(outer: SemiInvariantSpec, inner: SemiInvariantSpec) -> SemiInvariantSpec:
    """Spec of a subquotient of a subquotient, as one subquotient: (E2 + F1, E2 + F2)."""
    e = outer.e
    if not inner.e1.is_subspace_of(e):
        raise ContainmentError("inner spec must live inside the outer orthogonal difference")
    return SemiInvariantSpec(sum_subspaces(outer.e2, inner.e1), sum_subspaces(outer.e2, inner.e2))


def natural_projection(spec: SemiInvariantSpec, f: Subspace) -> CompanionProjection:
    """The projection with range F and kernel E2 ⊕ E1⊥."""
    e1, e2 = spec.e1, spec.e2
    backend = f.backend
    if not f.is_subspace_of(e1):
        raise ContainmentError("companion subspace must lie inside E1")
    if intersect(f, e2).dim != 0 or f.dim + e2.dim != e1.dim:
        raise PreconditionError(
            "F must be a direct complement of E2 inside E1", "natural_projection"
        )
    pieces = [f, e2, orth_complement(e1)]
    columns = [v for piece in pieces for v in piece.vectors]
    basis = np.array(columns, dtype=backend.dtype).T
    selector = backend.zeros((f.ambient_dim, f.ambient_dim))
    for i in range(f.dim):
        selector[i, i] = backend.scalar(1)
    q = basis @ selector @ backend.inv(basis)
    return CompanionProjection(f, q)


def companion_basis_projection(
    spec: SemiInvariantSpec, vectors: Sequence[np.ndarray], indices: Sequence[int]
) -> CompanionProjection:
    """Companion spanned by basis vectors (the Y∖X vectors of a coordinate spec)."""
    backend = spec.e1.backend
    f = span_of(vectors, indices, backend, spec.e1.ambient_dim)
    return natural_projection(spec, f)


def coordinate_matrix(columns: np.ndarray, targets: np.ndarray, backend: Backend) -> np.ndarray:
    """Coordinates of the columns of ``targets`` in the (independent) columns of ``columns``."""
    gram = backend.adjoint(columns) @ columns
    return backend.inv(gram) @ backend.adjoint(columns) @ targets


def compression_isomorphism_check(
    algebra: OperatorAlgebra, spec: SemiInvariantSpec, companion: CompanionProjection
) -> bool:
    """Check P0 (Q B Q|F) = (P B P|E) P0 for every basis element, P0 = P restricted to F."""
    backend = algebra.backend
    e = spec.e
    p = orth_projection(e)
    q = companion.q
    f_columns = companion.f.columns
    e_columns = e.columns
    try:
        p0 = coordinate_matrix(e_columns, p @ f_columns, backend)
        p0_inverse = backend.inv(p0)
    except SingularMatrixError as err:
        raise PreconditionError(
            "restriction of P to the companion subspace is singular", "compression_isomorphism_check"
        ) from err
    for b in algebra.basis:
        on_f = coordinate_matrix(f_columns, q @ b @ q @ f_columns, backend)
        on_e = coordinate_matrix(e_columns, p @ b @ p @ e_columns, backend)
        if not backend.arrays_equal(p0 @ on_f @ p0_inverse, on_e):
            return False
    return True


def _sort_key(subspace: Subspace):
    backend = subspace.backend
    # numeric bases are not unique; the projection is
    entries = orth_projection(subspace) if isinstance(backend, NumericBackend) else subspace.basis
    return (subspace.dim, [backend.sort_key(x) for x in entries.flat])


def sort_lattice(subspaces: Sequence[Subspace]) -> list[Subspace]:
    """Deterministic order: by dimension, then canonical basis entries; duplicates removed."""
    ordered: list[Subspace] = []
    for candidate in sorted(subspaces, key=_sort_key):
        if not any(candidate == kept for kept in ordered):
            ordered.append(candidate)
    return ordered


def _meet_join_closure(subspaces: list[Subspace], space: Subspace) -> list[Subspace]:
    lattice = sort_lattice(subspaces)
    changed = True
    while changed and len(lattice) < MAX_DISCOVERED_LATTICE:
        changed = False
        for a in list(lattice):
            for b in list(lattice):
                for combined in (sum_subspaces(a, b), intersect(a, b)):
                    if not any(combined == kept for kept in lattice):
                        lattice.append(combined)
                        changed = True
        lattice = sort_lattice(lattice)
    if len(lattice) <= MAX_DISCOVERED_LATTICE:
        return lattice
    logger.warning(
        "invariant lattice truncated to %d of at least %d subspaces",
        MAX_DISCOVERED_LATTICE,
        len(lattice),
    )
    ends = [zero_subspace(space.ambient_dim, space.backend), space]
    middle = [e for e in lattice if not e.is_zero() and not e == space]
    return sort_lattice(ends + middle[: MAX_DISCOVERED_LATTICE - len(ends)])


def invariant_lattice(
    algebra: OperatorAlgebra, budget: Optional[int] = None, seed: Optional[int] = None
) -> Lattice:
    """Exact lattice for family-built algebras, otherwise the discovered one."""
    from src.algebra.families import GENERIC, classify_invariants

    if algebra.provenance is not None and algebra.provenance.kind != GENERIC:
        if not algebra.is_compressed:
            return classify_invariants(algebra)

    seed = settings.SEED if seed is None else seed
    budget = settings.SEARCH_BUDGET if budget is None else budget
    space = algebra.space
    backend = algebra.backend
    found = [zero_subspace(algebra.n, backend), space]
    if algebra.space.dim > 1 and not algebra.is_full():
        rng = np.random.default_rng(seed)
        for candidate in _candidate_subspaces(algebra, rng, budget):
            if is_invariant(algebra, candidate):
                found.append(candidate)
        for b in algebra.basis:
            try:
                eigen = backend.eigenvalues(b)
            except EigenvalueAmbiguityError:
                continue
            for value in eigen.values:
                for vector in _eigenvectors(b, value, space, backend):
                    orbit = orbit_subspace(algebra, vector)
                    if is_invariant(algebra, orbit):
                        found.append(orbit)
    lattice = _meet_join_closure(found, space)
    logger.info("Discovered %d invariant subspaces (incomplete lattice)", len(lattice))
    return Lattice(lattice, complete=algebra.space.dim <= 1 or algebra.is_full())


def lattice_pairs(subspaces: Sequence[Subspace]) -> Iterator[tuple[Subspace, Subspace]]:
    """Ordered pairs E2 ⊊ E1 in deterministic (lexicographic) order."""
    ordered = sort_lattice(subspaces)
    for e1 in ordered:
        for e2 in ordered:
            if e2.dim < e1.dim and e2.is_subspace_of(e1):
                yield e1, e2


def full_subquotient_witness(
    algebra: OperatorAlgebra, lattice: Sequence[Subspace]
) -> Optional[SemiInvariantSpec]:
    """First lattice pair whose compression is all of B(E1 ⊖ E2) with dim >= 2."""
    for e1, e2 in lattice_pairs(lattice):
        if e1.dim - e2.dim < 2:
            continue
        spec = SemiInvariantSpec(e1, e2)
        if compress(algebra, spec).is_full():
            return spec
    return None


@dataclass(frozen=True)
class LocalForm:
    """Matrices of a compressed algebra in a basis of its space."""

    basis: list
    matrices: list
    orthonormal: bool


def local_form(algebra: OperatorAlgebra, orthonormal: bool = True) -> LocalForm:
    """dim(E) x dim(E) matrices of the algebra in an (orthonormal if possible) basis of E."""
    backend = algebra.backend
    gs = gram_schmidt(algebra.space.vectors, backend)
    unit_norms = all(backend.equal(norm, 1) for norm in gs.squared_norms)
    if orthonormal and not unit_norms:
        raise PreconditionError(
            "the space has no orthonormal basis over this field; use the numeric backend "
            "or orthonormal=False",
            "local_form",
        )
    columns = np.array(gs.vectors, dtype=backend.dtype).T
    matrices = [coordinate_matrix(columns, b @ columns, backend) for b in algebra.basis]
    return LocalForm(gs.vectors, matrices, unit_norms)
