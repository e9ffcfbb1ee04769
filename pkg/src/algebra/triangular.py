"""
Triangular structure of operator algebras.

- :func:`upper_triangularize` splits the algebra's space along invariant
  subspaces until every piece is a line (success) or a piece carries all of
  B(E) with dim E >= 2 (the obstruction).
- :func:`spectral_idempotent_poly` builds the idempotent onto the blocks with
  diagonal value λ as an explicit polynomial in the matrix, so it stays inside
  the non-unital algebra the matrix generates.
- :func:`jordanesque_basis` grows a block ordered basis one vector at a time in
  which every element of a hereditarily antisymmetric algebra is Jordanesque
  (block diagonal, each block upper triangular with constant diagonal).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src import settings
from src.algebra.invariant import (
    FOUND,
    NONE_EXISTS,
    InvariantChain,
    SemiInvariantSpec,
    compress,
    coordinate_matrix,
    find_nontrivial_invariant_subspace,
    natural_projection,
    sort_lattice,
)
from src.algebra.matspan import MatSpan, OperatorAlgebra, span_of_matrices, unitize
from src.exceptions import (
    EigenvalueNotFoundError,
    JordanesqueConstructionError,
    NotJordanesqueError,
    PreconditionError,
    RankDeficiencyError,
    UnsupportedEigenvalueError,
)
from src.linalg.backend import Backend
from src.linalg.subspace import (
    EchelonBuilder,
    Subspace,
    canonical_basis,
    gram_schmidt,
    intersect,
    is_linearly_independent,
    sum_subspaces,
    zero_subspace,
)

logger = logging.getLogger(__name__)

BASIS = "basis"
OBSTRUCTION = "obstruction"
UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class BlockOrderedBasis:
    """An ordered basis split into consecutive blocks of sizes n_1..n_k."""

    vectors: list
    block_sizes: tuple
    backend: Backend = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))
        object.__setattr__(self, "vectors", [self.backend.asarray(v) for v in self.vectors])
        if any(size <= 0 for size in self.block_sizes):
            raise PreconditionError("block sizes must be positive", "BlockOrderedBasis")
        if sum(self.block_sizes) != len(self.vectors):
            raise PreconditionError(
                f"block sizes sum to {sum(self.block_sizes)} but there are "
                f"{len(self.vectors)} vectors",
                "BlockOrderedBasis",
            )
        if self.vectors and len(self.vectors) != len(self.vectors[0]):
            raise PreconditionError("a block ordered basis must have n vectors in C^n")
        if not is_linearly_independent(self.vectors, self.backend):
            raise RankDeficiencyError("block ordered basis vectors are dependent")
        if self.normalized and not self.blocks_orthonormal():
            raise PreconditionError("basis flagged normalized but a block is not orthonormal")

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[np.ndarray]], backend: Backend):
        vectors = [v for block in blocks for v in block]
        basis = cls(vectors, tuple(len(block) for block in blocks), backend)
        if basis.blocks_orthonormal():
            return cls(vectors, basis.block_sizes, backend, normalized=True)
        return basis

    @property
    def n(self) -> int:
        return len(self.vectors)

    @property
    def k(self) -> int:
        return len(self.block_sizes)

    @property
    def block_ranges(self) -> list[range]:
        ranges, start = [], 0
        for size in self.block_sizes:
            ranges.append(range(start, start + size))
            start += size
        return ranges

    @property
    def blocks(self) -> list[list[np.ndarray]]:
        return [[self.vectors[i] for i in r] for r in self.block_ranges]

    def block_of(self, index: int) -> int:
        for j, r in enumerate(self.block_ranges):
            if index in r:
                return j
        raise IndexError(index)

    @property
    def matrix(self) -> np.ndarray:
        """Basis vectors as columns."""
        return np.array(self.vectors, dtype=self.backend.dtype).T

    def _block_gram_ok(self, require_unit: bool) -> bool:
        backend = self.backend
        for block in self.blocks:
            for i, u in enumerate(block):
                for j, v in enumerate(block):
                    value = backend.inner(u, v)
                    if i == j:
                        if require_unit and not backend.equal(value, 1):
                            return False
                    elif not backend.is_zero(value):
                        return False
        return True

    def blocks_orthonormal(self) -> bool:
        return self._block_gram_ok(require_unit=True)

    def blocks_orthogonal(self) -> bool:
        return self._block_gram_ok(require_unit=False)

    def prefix_subspace(self, counts: Sequence[int]) -> Subspace:
        """The (m_1, ..., m_k) subspace: first m_j vectors of every block j."""
        chosen = [v for block, m in zip(self.blocks, counts) for v in block[:m]]
        return canonical_basis(chosen, self.backend, self.n)


@dataclass
class JordanesqueCheck:
    """Result of testing one matrix against a block ordered basis."""

    matrix: np.ndarray
    basis: BlockOrderedBasis
    ok: bool
    violation: Optional[tuple] = None  # (row, column), 0-based, in the basis coordinates
    local: Optional[np.ndarray] = None  # the matrix written in the basis

    @property
    def block_values(self) -> list:
        """Constant diagonal value of each block."""
        return [self.local[r.start, r.start] for r in self.basis.block_ranges]


def matrix_in_basis(matrix: np.ndarray, vectors: Sequence[np.ndarray], backend: Backend):
    """Matrix of an operator restricted to span(vectors), in that ordered basis."""
    columns = np.array(list(vectors), dtype=backend.dtype).T
    return coordinate_matrix(columns, backend.asarray(matrix) @ columns, backend)


def check_jordanesque(matrix: np.ndarray, basis: BlockOrderedBasis) -> JordanesqueCheck:
    """Block diagonal, upper triangular blocks, constant block diagonals; first violation reported."""
    backend = basis.backend
    local = matrix_in_basis(matrix, basis.vectors, backend)
    owner = [basis.block_of(i) for i in range(basis.n)]
    starts = [r.start for r in basis.block_ranges]
    for i in range(basis.n):
        for j in range(basis.n):
            value = local[i, j]
            if owner[i] != owner[j] or i > j:
                bad = not backend.is_zero(value)
            elif i == j:
                bad = not backend.equal(value, local[starts[owner[i]], starts[owner[i]]])
            else:
                bad = False
            if bad:
                return JordanesqueCheck(matrix, basis, False, (i, j), local)
    return JordanesqueCheck(matrix, basis, True, None, local)


def is_upper_triangular(local: np.ndarray, backend: Backend) -> bool:
    return all(
        backend.is_zero(local[i, j]) for i in range(local.shape[0]) for j in range(min(i, local.shape[1]))
    )


def upper_triangular_check(algebra: OperatorAlgebra, vectors: Sequence[np.ndarray]) -> bool:
    """Every canonical element is upper triangular in the ordered basis ``vectors``."""
    backend = algebra.backend
    return all(
        is_upper_triangular(matrix_in_basis(b, vectors, backend), backend) for b in algebra.basis
    )


@dataclass
class TriangularizationResult:
    """Outcome of :func:`upper_triangularize`."""

    status: str  # "basis" | "obstruction" | "unknown"
    vectors: list = field(default_factory=list)
    squared_norms: list = field(default_factory=list)
    chain: Optional[InvariantChain] = None
    obstruction: Optional[SemiInvariantSpec] = None
    compressed: Optional[OperatorAlgebra] = None
    normalized: bool = False


class _Stop(Exception):
    def __init__(self, result: TriangularizationResult):
        self.result = result


def upper_triangularize(
    algebra: OperatorAlgebra,
    lattice: Optional[Sequence[Subspace]] = None,
    seed: Optional[int] = None,
    budget: Optional[int] = None,
) -> TriangularizationResult:
    """Ordered orthogonal basis making every element upper triangular, or an obstruction."""
    seed = settings.SEED if seed is None else seed
    budget = settings.SEARCH_BUDGET if budget is None else budget
    backend = algebra.backend
    known = sort_lattice(list(lattice)) if lattice is not None else []
    node_counter = [0]

    def split(e1: Subspace, e2: Subspace) -> Optional[Subspace]:
        for candidate in known:
            g = sum_subspaces(intersect(candidate, e1), e2)
            if e2.dim < g.dim < e1.dim:
                return g
        return None

    def visit(e1: Subspace, e2: Subspace) -> list:
        spec = SemiInvariantSpec(e1, e2)
        e = spec.e
        node_counter[0] += 1
        if e.dim <= 1:
            return e.vectors
        g = split(e1, e2)
        if g is None:
            compressed = compress(algebra, spec, validate=False)
            search = find_nontrivial_invariant_subspace(
                compressed, seed=seed + node_counter[0], budget=budget
            )
            logger.debug(
                "triangularize node %d (dim %d): %s", node_counter[0], e.dim, search.status
            )
            if search.status == NONE_EXISTS:
                raise _Stop(TriangularizationResult(OBSTRUCTION, obstruction=spec, compressed=compressed))
            if search.status != FOUND:
                raise _Stop(TriangularizationResult(UNKNOWN))
            g = sum_subspaces(e2, search.subspace)
        return visit(g, e2) + visit(e1, g)

    space = algebra.space
    try:
        vectors = visit(space, zero_subspace(algebra.n, backend))
    except _Stop as stop:
        if stop.result.status == OBSTRUCTION:
            logger.info("Algebra has a full subquotient of dimension %d", stop.result.obstruction.dim)
        return stop.result

    if backend.can_normalize:
        vectors = [backend.normalize(v) for v in vectors]
    norms = [backend.norm_sq(v) for v in vectors]
    if not upper_triangular_check(algebra, vectors):
        raise PreconditionError("triangularizing basis failed verification", "upper_triangularize")
    prefixes = [zero_subspace(algebra.n, backend)] + [
        canonical_basis(vectors[: m + 1], backend, algebra.n) for m in range(len(vectors))
    ]
    logger.info("Upper triangularized an algebra of dimension %d", algebra.dim)
    normalized = all(backend.equal(x, 1) for x in norms)
    return TriangularizationResult(BASIS, vectors, norms, InvariantChain(prefixes), normalized=normalized)


def _power(matrix: np.ndarray, exponent: int, backend: Backend) -> np.ndarray:
    result = backend.eye(matrix.shape[0])
    for _ in range(exponent):
        result = result @ matrix
    return result


def spectral_projection(matrix: np.ndarray, value, eigenvalues: Sequence, backend: Backend):
    """Idempotent onto the generalized λ-eigenspace as a polynomial without constant term.

    X = Π (M² - μM)^n over eigenvalues μ ∉ {0, λ} (M^n when there are none),
    Y = X / λ' with λ' = λ^{kn} Π (λ - μ)^n, then Σ_{j<n} (-1)^j (Y - I)^j Y.
    """
    if backend.is_zero(value):
        raise UnsupportedEigenvalueError("the idempotent polynomial needs a nonzero eigenvalue")
    matrix = backend.asarray(matrix)
    n = matrix.shape[0]
    value = backend.scalar(value)
    others = []
    for mu in eigenvalues:
        if backend.is_zero(mu) or backend.equal(mu, value):
            continue
        if not any(backend.equal(mu, kept) for kept in others):
            others.append(backend.scalar(mu))
    if others:
        x = backend.eye(n)
        scale = value ** (len(others) * n)
        for mu in others:
            x = x @ _power(matrix @ matrix - matrix * mu, n, backend)
            scale = scale * (value - mu) ** n
    else:
        x = _power(matrix, n, backend)
        scale = value**n
    y = x * (backend.scalar(1) / scale)
    shifted = y - backend.eye(n)
    term = y
    total = y
    for _ in range(1, n):
        term = -(shifted @ term)
        total = total + term
    return total


def spectral_idempotent_poly(matrix: np.ndarray, basis: BlockOrderedBasis, value) -> np.ndarray:
    """Idempotent that is 1 on the blocks whose diagonal is λ, inside the algebra M generates."""
    backend = basis.backend
    check = check_jordanesque(matrix, basis)
    if not check.ok:
        raise NotJordanesqueError("matrix is not Jordanesque in the given basis", check.violation)
    if backend.is_zero(value):
        raise UnsupportedEigenvalueError("the idempotent polynomial needs a nonzero eigenvalue")
    diagonal = check.block_values
    if not any(backend.equal(value, d) for d in diagonal):
        raise EigenvalueNotFoundError(f"{value} is not on the diagonal of the matrix")
    return spectral_projection(matrix, value, diagonal, backend)


def diagonal_part(matrix: np.ndarray, basis: BlockOrderedBasis) -> np.ndarray:
    """Block-constant diagonal part, rebuilt as Σ λ P_λ over the nonzero block values."""
    backend = basis.backend
    check = check_jordanesque(matrix, basis)
    if not check.ok:
        raise NotJordanesqueError("matrix is not Jordanesque in the given basis", check.violation)
    total = backend.zeros((basis.n, basis.n))
    seen: list = []
    for value in check.block_values:
        if backend.is_zero(value) or any(backend.equal(value, s) for s in seen):
            continue
        seen.append(value)
        total = total + spectral_projection(matrix, value, check.block_values, backend) * value
    return total


@dataclass
class DiagNilDecomposition:
    """A = A_diag + A_nil for an algebra Jordanesque in a block basis."""

    diag: OperatorAlgebra
    nil: MatSpan


def diag_nil_decompose(algebra: OperatorAlgebra, basis: BlockOrderedBasis) -> DiagNilDecomposition:
    """Split an algebra into its diagonal subalgebra and nilpotent ideal (both verified)."""
    backend = algebra.backend
    for b in algebra.basis:
        check = check_jordanesque(b, basis)
        if not check.ok:
            raise NotJordanesqueError("algebra element is not Jordanesque", check.violation)
    diagonal = [diagonal_part(b, basis) for b in algebra.basis]
    nilpotent = [b - d for b, d in zip(algebra.basis, diagonal)]
    diag_span = span_of_matrices(diagonal, backend, algebra.n)
    nil_span = span_of_matrices(nilpotent, backend, algebra.n)

    if not all(algebra.contains(m) for m in diag_span.basis + nil_span.basis):
        raise PreconditionError("decomposition left the algebra", "diag_nil_decompose")
    if diag_span.dim + nil_span.dim != algebra.dim:
        raise PreconditionError("diagonal and nilpotent parts overlap", "diag_nil_decompose")
    for x in nil_span.basis:
        for b in algebra.basis:
            if not (nil_span.contains(x @ b) and nil_span.contains(b @ x)):
                raise PreconditionError("nilpotent part is not an ideal", "diag_nil_decompose")
    logger.debug("diag/nil split: %d + %d", diag_span.dim, nil_span.dim)
    return DiagNilDecomposition(OperatorAlgebra(diag_span, algebra.unital, algebra.space), nil_span)


@dataclass
class DiagonalClasses:
    """Diagonal positions on which every element of the algebra agrees."""

    classes: list  # lists of 0-based positions, ordered by first position
    zero_class: Optional[int] = None  # index of the class where every element vanishes


def _diagonals(algebra: OperatorAlgebra, vectors: Sequence[np.ndarray]) -> list[list]:
    backend = algebra.backend
    diagonals = []
    for b in algebra.basis:
        local = matrix_in_basis(b, vectors, backend)
        diagonals.append([local[i, i] for i in range(len(vectors))])
    return diagonals


def diagonal_classes(algebra: OperatorAlgebra, vectors: Sequence[np.ndarray]) -> DiagonalClasses:
    backend = algebra.backend
    diagonals = _diagonals(algebra, vectors)
    classes: list[list[int]] = []
    for i in range(len(vectors)):
        for members in classes:
            j = members[0]
            if all(backend.equal(d[i], d[j]) for d in diagonals):
                members.append(i)
                break
        else:
            classes.append([i])
    zero_class = None
    for index, members in enumerate(classes):
        if all(backend.is_zero(d[members[0]]) for d in diagonals):
            zero_class = index
    return DiagonalClasses(classes, zero_class)


def separating_element(algebra: OperatorAlgebra, vectors: Sequence[np.ndarray]) -> np.ndarray:
    """An element with real diagonal taking a distinct value on each diagonal class.

    The class where every element vanishes gets 0, the others 1, 2, 3, ...
    """
    backend = algebra.backend
    if not upper_triangular_check(algebra, vectors):
        raise PreconditionError("algebra is not upper triangular in the basis", "separating_element")
    found = diagonal_classes(algebra, vectors)
    target = backend.zeros(len(vectors))
    label = 0
    for index, members in enumerate(found.classes):
        if index == found.zero_class:
            continue
        label += 1
        for i in members:
            target[i] = backend.scalar(label)
    if algebra.dim == 0:
        return backend.zeros((algebra.n, algebra.n))
    system = np.array(_diagonals(algebra, vectors), dtype=backend.dtype).T
    coefficients = backend.solve(system, target)
    if coefficients is None:
        raise PreconditionError("diagonal values are not realized by the algebra", "separating_element")
    return algebra.span.combination(coefficients)


def _extension_vector(
    s: np.ndarray,
    value,
    e_m: Subspace,
    matched: list,
    others: list,
    w_m: np.ndarray,
    backend: Backend,
    step: int,
):
    """Eigenvector for λ of the separating element compressed to the companion of the matched block."""
    n = e_m.ambient_dim
    g = canonical_basis(matched, backend, n) if matched else zero_subspace(n, backend)
    f_vectors = others + [w_m]
    f = canonical_basis(f_vectors, backend, n)
    q = natural_projection(SemiInvariantSpec(e_m, g), f).q
    columns = np.array(f_vectors, dtype=backend.dtype).T
    local = coordinate_matrix(columns, q @ s @ columns, backend)
    d = len(f_vectors)
    c = backend.zeros(d)
    c[d - 1] = backend.scalar(1)
    if d > 1:
        top = local[: d - 1, : d - 1] - backend.eye(d - 1) * backend.scalar(value)
        solution = backend.solve(top, -local[: d - 1, d - 1])
        if solution is None:
            raise JordanesqueConstructionError("no eigenvector in the companion subspace", step)
        c[: d - 1] = solution
    return columns @ c


def jordanesque_basis(
    algebra: OperatorAlgebra,
    lattice: Optional[Sequence[Subspace]] = None,
    seed: Optional[int] = None,
    budget: Optional[int] = None,
) -> BlockOrderedBasis:
    """Block ordered basis in which every element is Jordanesque.

    Works for hereditarily antisymmetric algebras; other inputs end in a
    JordanesqueConstructionError naming the basis position that failed.
    """
    if algebra.is_compressed:
        raise PreconditionError("needs an algebra acting on all of C^n", "jordanesque_basis")
    backend = algebra.backend
    unital = unitize(algebra)
    if lattice is None and algebra.provenance is not None:
        from src.algebra.invariant import invariant_lattice

        lattice = invariant_lattice(unital).subspaces
    triangular = upper_triangularize(unital, lattice, seed=seed, budget=budget)
    if triangular.status != BASIS:
        raise JordanesqueConstructionError(f"algebra could not be triangularized ({triangular.status})")
    w = triangular.vectors
    s = separating_element(unital, w)
    s_local = matrix_in_basis(s, w, backend)

    blocks: list[dict] = []  # {"value": λ, "vectors": [...]}
    for m in range(len(w)):
        value = s_local[m, m]
        e_m = canonical_basis(w[: m + 1], backend, algebra.n)
        match = next((j for j, b in enumerate(blocks) if backend.equal(b["value"], value)), None)
        matched = blocks[match]["vectors"] if match is not None else []
        others = [v for j, b in enumerate(blocks) if j != match for v in b["vectors"]]
        v = _extension_vector(s, value, e_m, matched, others, w[m], backend, m)

        allowed = EchelonBuilder(backend, algebra.n)
        for u in matched + [v]:
            allowed.add(u)
        for b in unital.basis:
            if not allowed.contains(b @ v):
                raise JordanesqueConstructionError(
                    "element does not act triangularly on the new vector", m
                )
        if match is None:
            blocks.append({"value": value, "vectors": [v]})
            logger.debug("step %d: new block with value %s", m, value)
        else:
            block = blocks.pop(match)
            block["vectors"].append(v)
            blocks.append(block)
            logger.debug("step %d: extended block to size %d", m, len(block["vectors"]))

    orthogonalized = [gram_schmidt(b["vectors"], backend).vectors for b in blocks]
    result = BlockOrderedBasis.from_blocks(orthogonalized, backend)
    for index, b in enumerate(unital.basis):
        check = check_jordanesque(b, result)
        if not check.ok:
            raise JordanesqueConstructionError(
                f"element {index} is not Jordanesque in the constructed basis "
                f"(row {check.violation[0]}, column {check.violation[1]})"
            )
    logger.info("Jordanesque basis with block sizes %s", result.block_sizes)
    return result
