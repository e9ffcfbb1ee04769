"""
Structured algebra families with exactly known invariant subspaces.

- ``Tn``: upper triangular matrices with constant diagonal.
- ``Dv``: operators diagonal in a basis v.
- ``PreorderAlg``: span of the v-basis units E_ij with i ⪯ j for a preorder.
- ``Jv``: operators Jordanesque in a block ordered basis.

Every constructor tags the algebra with a :class:`FamilyProvenance`, which
:func:`classify_invariants` uses to return the complete invariant lattice.
Indices in violations and user-facing pairs are 1-based.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from src import settings
from src.algebra.invariant import Lattice, SemiInvariantSpec, is_invariant, sort_lattice
from src.algebra.matspan import (
    OperatorAlgebra,
    algebra_from_span,
    close_algebra,
    span_of_matrices,
)
from src.algebra.triangular import BlockOrderedBasis, check_jordanesque
from src.exceptions import (
    BudgetExhaustedError,
    GuardExceededError,
    InvalidPreorderError,
    NotJordanesqueError,
    PreconditionError,
    RankDeficiencyError,
    UnsupportedProvenanceError,
)
from src.linalg.backend import Backend, get_backend
from src.linalg.subspace import (
    canonical_basis,
    coordinates,
    gram_schmidt,
    is_linearly_independent,
    orth_projection,
    span_of,
)

logger = logging.getLogger(__name__)

TN = "Tn"
DV = "Dv"
JV = "Jv"
PREORDER_ALG = "PreorderAlg"
GENERIC = "Generic"
FAMILY_KINDS = (TN, DV, JV, PREORDER_ALG, GENERIC)


@dataclass(frozen=True, eq=False)
class Preorder:
    """Reflexive, transitive relation on {1..n}; ``rel[i, j]`` means i ⪯ j (0-based storage)."""

    n: int
    rel: np.ndarray

    def __post_init__(self):
        rel = np.asarray(self.rel, dtype=bool)
        object.__setattr__(self, "rel", rel)
        if rel.shape != (self.n, self.n):
            raise InvalidPreorderError(f"relation table must be {self.n}x{self.n}", "Preorder")
        missing = [i + 1 for i in range(self.n) if not rel[i, i]]
        if missing:
            raise InvalidPreorderError("relation is not reflexive", "Preorder", f"missing {missing}")
        composed = (rel.astype(int) @ rel.astype(int)) > 0
        broken = np.argwhere(composed & ~rel)
        if len(broken):
            i, j = broken[0]
            raise InvalidPreorderError(
                "relation is not transitive", "Preorder", f"{i + 1} ⪯ {j + 1} is implied but absent"
            )

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence[int]], close: bool = False) -> "Preorder":
        """Preorder from 1-based pairs (i, j) meaning i ⪯ j; reflexivity is added.

        With ``close`` the transitive closure is taken instead of requiring it.
        """
        graph = nx.DiGraph()
        graph.add_nodes_from(range(n))
        for i, j in pairs:
            if not (1 <= i <= n and 1 <= j <= n):
                raise InvalidPreorderError(f"pair ({i}, {j}) is outside 1..{n}", "Preorder")
            graph.add_edge(i - 1, j - 1)
        if close:
            graph = nx.transitive_closure(graph, reflexive=False)
        rel = np.eye(n, dtype=bool)
        for i, j in graph.edges:
            rel[i, j] = True
        return cls(n, rel)

    @classmethod
    def equality(cls, n: int) -> "Preorder":
        return cls(n, np.eye(n, dtype=bool))

    @classmethod
    def total_order(cls, n: int) -> "Preorder":
        return cls(n, np.triu(np.ones((n, n), dtype=bool)))

    @classmethod
    def random(cls, n: int, seed: Optional[int] = None, density: float = 0.3) -> "Preorder":
        """Transitive closure of a seeded random directed graph."""
        rng = np.random.default_rng(settings.SEED if seed is None else seed)
        graph = nx.DiGraph()
        graph.add_nodes_from(range(n))
        for i in range(n):
            for j in range(n):
                if i != j and rng.random() < density:
                    graph.add_edge(i, j)
        closed = nx.transitive_closure(graph, reflexive=False)
        return cls.from_pairs(n, [(i + 1, j + 1) for i, j in closed.edges])

    def leq(self, i: int, j: int) -> bool:
        """1-based i ⪯ j."""
        return bool(self.rel[i - 1, j - 1])

    def pairs(self) -> list[tuple[int, int]]:
        """1-based strict comparabilities (i ≠ j)."""
        return [(i + 1, j + 1) for i, j in zip(*np.nonzero(self.rel)) if i != j]

    def is_partial_order(self) -> bool:
        return not np.any(self.rel & self.rel.T & ~np.eye(self.n, dtype=bool))

    def to_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from((i - 1, j - 1) for i, j in self.pairs())
        return graph

    def lower_sets(self) -> list[frozenset]:
        """All 0-based X with j ∈ X, i ⪯ j ⇒ i ∈ X.

        Lower sets correspond to antichains of the condensed order (the lower
        set generated by an antichain of strongly connected classes).
        """
        condensed = nx.condensation(self.to_graph())
        members = nx.get_node_attributes(condensed, "members")
        found = set()
        for antichain in nx.antichains(condensed):
            classes = set(antichain)
            for c in antichain:
                classes |= nx.ancestors(condensed, c)
            found.add(frozenset(i for c in classes for i in members[c]))
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Preorder):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.rel, other.rel))

    __hash__ = None


@dataclass
class NonorthGraph:
    """Vertices 1..n (stored 0-based), an edge where ⟨v_i, v_j⟩ ≠ 0."""

    n: int
    graph: nx.Graph

    @property
    def adjacency(self) -> np.ndarray:
        table = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.graph.edges:
            table[i, j] = table[j, i] = True
        return table


@dataclass
class FamilyProvenance:
    """Which family built an algebra, with the parameters its classification needs."""

    kind: str  # "Tn" | "Dv" | "Jv" | "PreorderAlg" | "Generic"
    vectors: Optional[list] = None
    preorder: Optional[Preorder] = None
    basis: Optional[BlockOrderedBasis] = None
    n: Optional[int] = None


@dataclass
class AntiOrthogonalityResult:
    ok: bool
    violation: Optional[tuple] = None  # (i, j, X), 1-based
    margin: float = 0.0  # smallest |⟨P v_i, v_j⟩| seen


@dataclass
class SuitabilityResult:
    ok: bool
    violation: Optional[tuple] = None  # ((m_1..m_k), j, j'), blocks 1-based
    margin: float = 0.0


@dataclass
class SuitabilityCounterexample:
    """The (m′) ⊖ (m) subquotient and an element compressing to a non-scalar projection."""

    spec: SemiInvariantSpec
    witness: np.ndarray
    violation: tuple


@dataclass
class EnlargementWitness:
    """Invariant span{v_i : i ⪯ j} and an element compressing to a multiple of a rank-one projection."""

    subspace: object
    element: np.ndarray
    column: int  # the j of the construction, 1-based
    vector: np.ndarray


def _columns(vectors: Sequence[np.ndarray], backend: Backend) -> np.ndarray:
    return np.array([backend.asarray(v) for v in vectors], dtype=backend.dtype).T


def _require_basis(vectors: Sequence[np.ndarray], backend: Backend):
    n = len(vectors)
    if any(len(v) != n for v in vectors) or not is_linearly_independent(list(vectors), backend):
        raise RankDeficiencyError(f"expected a basis of C^{n}")


class _Units:
    """Matrix units E_ij of the basis v: E_ij v_j = v_i, E_ij v_k = 0 otherwise."""

    def __init__(self, vectors: Sequence[np.ndarray], backend: Backend):
        _require_basis(vectors, backend)
        self.backend = backend
        self.columns = _columns(vectors, backend)
        self.inverse = backend.inv(self.columns)

    def __call__(self, i: int, j: int) -> np.ndarray:
        return self.columns[:, [i]] @ self.inverse[[j], :]


def v_matrix_unit(vectors: Sequence[np.ndarray], i: int, j: int, backend: Backend = None):
    """E_ij for the basis v, 0-based."""
    backend = backend or get_backend()
    return _Units(vectors, backend)(i, j)


def shift_matrix(n: int, backend: Backend = None) -> np.ndarray:
    """Σ E_{i,i+1}."""
    backend = backend or get_backend()
    shift = backend.zeros((n, n))
    for i in range(n - 1):
        shift[i, i + 1] = backend.scalar(1)
    return shift


def make_Tn(n: int, backend: Backend = None) -> OperatorAlgebra:
    """Upper triangular n x n matrices with constant diagonal."""
    if n < 1:
        raise PreconditionError("n must be at least 1", "make_Tn")
    backend = backend or get_backend()
    generators = [backend.eye(n)] + [
        backend.matrix_unit(n, i, j) for i in range(n) for j in range(i + 1, n)
    ]
    span = span_of_matrices(generators, backend, n)
    return algebra_from_span(span, True, provenance=FamilyProvenance(TN, n=n))


def make_Dv(vectors: Sequence[np.ndarray], backend: Backend = None) -> OperatorAlgebra:
    backend = backend or get_backend()
    vectors = [backend.asarray(v) for v in vectors]
    units = _Units(vectors, backend)
    n = len(vectors)
    span = span_of_matrices([units(i, i) for i in range(n)], backend, n)
    return algebra_from_span(span, True, provenance=FamilyProvenance(DV, vectors=vectors, n=n))


def make_preorder_algebra(
    preorder: Preorder, vectors: Sequence[np.ndarray], backend: Backend = None
) -> OperatorAlgebra:
    """span{E_ij : i ⪯ j} in the basis v."""
    backend = backend or get_backend()
    vectors = [backend.asarray(v) for v in vectors]
    if len(vectors) != preorder.n:
        raise PreconditionError("preorder size does not match the basis", "make_preorder_algebra")
    units = _Units(vectors, backend)
    n = preorder.n
    matrices = [units(i, j) for i in range(n) for j in range(n) if preorder.rel[i, j]]
    span = span_of_matrices(matrices, backend, n)
    provenance = FamilyProvenance(PREORDER_ALG, vectors=vectors, preorder=preorder, n=n)
    return algebra_from_span(span, True, provenance=provenance)


def _check_block_basis(basis: BlockOrderedBasis, operation: str):
    backend = basis.backend
    if backend.can_normalize and not basis.blocks_orthonormal():
        raise PreconditionError("block ordered basis is not normalized", operation)
    if not basis.blocks_orthogonal():
        raise PreconditionError("blocks of the basis are not orthogonal", operation)


def make_Jv(basis: BlockOrderedBasis) -> OperatorAlgebra:
    """All matrices Jordanesque in ``basis``: block constants plus strictly upper in-block units.

    Exact mode accepts orthogonal blocks; the algebra only depends on the
    flags of each block, which normalization keeps.
    """
    _check_block_basis(basis, "make_Jv")
    backend = basis.backend
    units = _Units(basis.vectors, backend)
    n = basis.n
    matrices = []
    for block in basis.block_ranges:
        total = backend.zeros((n, n))
        for i in block:
            total = total + units(i, i)
        matrices.append(total)
        matrices.extend(units(a, b) for a in block for b in block if a < b)
    span = span_of_matrices(matrices, backend, n)
    return algebra_from_span(span, True, provenance=FamilyProvenance(JV, basis=basis, n=n))


def nonorth_graph(vectors: Sequence[np.ndarray], backend: Backend = None) -> NonorthGraph:
    backend = backend or get_backend()
    vectors = [backend.asarray(v) for v in vectors]
    graph = nx.Graph()
    graph.add_nodes_from(range(len(vectors)))
    for i, j in itertools.combinations(range(len(vectors)), 2):
        if not backend.is_zero(backend.inner(vectors[i], vectors[j])):
            graph.add_edge(i, j)
    return NonorthGraph(len(vectors), graph)


def is_connected(graph: NonorthGraph) -> bool:
    return graph.n <= 1 or nx.is_connected(graph.graph)


def _projected_inner(vectors, i: int, j: int, hidden: Sequence[int], backend: Backend):
    """⟨P v_i, v_j⟩ with P the projection onto span{v_k : k ∈ hidden}⊥."""
    n = len(vectors[0])
    vector = vectors[i]
    if hidden:
        vector = vector - orth_projection(span_of(vectors, hidden, backend, n)) @ vector
    return backend.inner(vector, vectors[j])


def is_anti_orthogonal(vectors: Sequence[np.ndarray], backend: Backend = None) -> AntiOrthogonalityResult:
    """Exhaustive check of ⟨P v_i, v_j⟩ ≠ 0 over all pairs and hidden sets X."""
    backend = backend or get_backend()
    vectors = [backend.asarray(v) for v in vectors]
    n = len(vectors)
    if n > settings.ENUMERATION_GUARD:
        raise GuardExceededError("anti-orthogonality enumeration is too large", settings.ENUMERATION_GUARD, n)
    _require_basis(vectors, backend)
    margin = float("inf")
    for i, j in itertools.combinations(range(n), 2):
        rest = [k for k in range(n) if k not in (i, j)]
        for size in range(len(rest) + 1):
            for hidden in itertools.combinations(rest, size):
                value = _projected_inner(vectors, i, j, hidden, backend)
                margin = min(margin, backend.magnitude(value))
                if backend.is_zero(value):
                    violation = (i + 1, j + 1, tuple(k + 1 for k in hidden))
                    logger.debug("anti-orthogonality fails at %s", violation)
                    return AntiOrthogonalityResult(False, violation, backend.magnitude(value))
    return AntiOrthogonalityResult(True, None, margin if n > 1 else 0.0)


def _count_tuples(sizes: Sequence[int]) -> int:
    total = 1
    for size in sizes:
        total *= size + 1
    return total


def is_suitably_nonorthogonal(basis: BlockOrderedBasis) -> SuitabilityResult:
    """Enumerate every (m_1..m_k) subspace and block pair j < j' for the (*) condition."""
    _check_block_basis(basis, "is_suitably_nonorthogonal")
    backend = basis.backend
    count = _count_tuples(basis.block_sizes)
    if count > 2**settings.ENUMERATION_GUARD:
        raise GuardExceededError(
            "suitable nonorthogonality enumeration is too large", 2**settings.ENUMERATION_GUARD, count
        )
    blocks = basis.blocks
    margin = float("inf")
    for counts in itertools.product(*(range(size + 1) for size in basis.block_sizes)):
        open_blocks = [j for j, m in enumerate(counts) if m < basis.block_sizes[j]]
        if len(open_blocks) < 2:
            continue
        projection = backend.eye(basis.n) - orth_projection(basis.prefix_subspace(counts))
        for j, k in itertools.combinations(open_blocks, 2):
            value = backend.inner(projection @ blocks[j][counts[j]], blocks[k][counts[k]])
            margin = min(margin, backend.magnitude(value))
            if backend.is_zero(value):
                return SuitabilityResult(False, (tuple(counts), j + 1, k + 1), backend.magnitude(value))
    return SuitabilityResult(True, None, margin if margin != float("inf") else 0.0)


def suitable_nonorthogonality_counterexample(basis: BlockOrderedBasis) -> Optional[SuitabilityCounterexample]:
    """The (m′) ⊖ (m) subquotient on which the block-j unit compresses to a non-scalar projection."""
    result = is_suitably_nonorthogonal(basis)
    if result.ok:
        return None
    counts, j, k = result.violation
    raised = list(counts)
    raised[j - 1] += 1
    raised[k - 1] += 1
    spec = SemiInvariantSpec(basis.prefix_subspace(raised), basis.prefix_subspace(counts))
    backend = basis.backend
    units = _Units(basis.vectors, backend)
    witness = backend.zeros((basis.n, basis.n))
    for i in basis.block_ranges[j - 1]:
        witness = witness + units(i, i)
    return SuitabilityCounterexample(spec, witness, result.violation)


def distinguishes_blocks(algebra: OperatorAlgebra, basis: BlockOrderedBasis) -> bool:
    """Whether for every pair of blocks some element has different diagonal values on them."""
    values = []
    for element in algebra.basis:
        check = check_jordanesque(element, basis)
        if not check.ok:
            raise NotJordanesqueError("algebra element is not Jordanesque", check.violation)
        values.append(check.block_values)
    backend = algebra.backend
    for j, k in itertools.combinations(range(basis.k), 2):
        if all(backend.equal(row[j], row[k]) for row in values):
            return False
    return True


def extract_preorder(algebra: OperatorAlgebra, vectors: Sequence[np.ndarray]) -> Preorder:
    """The preorder ⪯ with A = A_⪯, for an algebra containing D_v."""
    backend = algebra.backend
    vectors = [backend.asarray(v) for v in vectors]
    units = _Units(vectors, backend)
    n = len(vectors)
    diagonal = [units(i, i) for i in range(n)]
    missing = [i + 1 for i, e in enumerate(diagonal) if not algebra.contains(e)]
    if missing:
        raise PreconditionError("algebra does not contain D_v", "extract_preorder", f"missing E_ii for {missing}")
    rel = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            rel[i, j] = any(
                not backend.is_zero_array(diagonal[i] @ b @ diagonal[j]) for b in algebra.basis
            )
    preorder = Preorder(n, rel)
    if int(rel.sum()) != algebra.dim:
        raise PreconditionError("algebra is not spanned by v-basis units", "extract_preorder")
    return preorder


def _verified(algebra: OperatorAlgebra, subspaces) -> Lattice:
    ordered = sort_lattice(subspaces)
    for subspace in ordered:
        if not is_invariant(algebra, subspace):
            raise PreconditionError(
                "classified subspace failed the invariance check", "classify_invariants"
            )
    return Lattice(ordered, complete=True)


def classify_invariants(algebra: OperatorAlgebra) -> Lattice:
    """Complete invariant lattice of a family-built algebra (every entry re-verified)."""
    provenance = algebra.provenance
    if provenance is None or provenance.kind == GENERIC:
        raise UnsupportedProvenanceError(
            "no exact classification for a generic algebra; use the discovered lattice",
            "classify_invariants",
        )
    backend = algebra.backend
    n = algebra.n
    if provenance.kind == TN:
        chain = [canonical_basis([backend.unit_vector(n, i) for i in range(m)], backend, n) for m in range(n + 1)]
        return _verified(algebra, chain)
    if provenance.kind == DV:
        if n > settings.ENUMERATION_GUARD:
            raise GuardExceededError("coordinate span enumeration is too large", settings.ENUMERATION_GUARD, n)
        vectors = provenance.vectors
        spans = [
            span_of(vectors, chosen, backend, n)
            for size in range(n + 1)
            for chosen in itertools.combinations(range(n), size)
        ]
        return _verified(algebra, spans)
    if provenance.kind == PREORDER_ALG:
        vectors = provenance.vectors
        spans = [
            span_of(vectors, sorted(lower), backend, n)
            for lower in provenance.preorder.lower_sets()
        ]
        return _verified(algebra, spans)
    if provenance.kind == JV:
        basis = provenance.basis
        spans = [
            basis.prefix_subspace(counts)
            for counts in itertools.product(*(range(size + 1) for size in basis.block_sizes))
        ]
        return _verified(algebra, spans)
    raise UnsupportedProvenanceError(f"unknown family {provenance.kind!r}", "classify_invariants")


def enlarging_unit(vectors: Sequence[np.ndarray], backend: Backend = None) -> tuple[int, int]:
    """1-based (i, j) such that D_v + C·E_ij is still antisymmetric.

    An orthogonal pair when one exists, else the pair of normalized vectors
    with the smallest |⟨v_i, v_j⟩|. Needs n > 2 and a connected graph.
    """
    backend = backend or get_backend()
    vectors = [backend.asarray(v) for v in vectors]
    n = len(vectors)
    if n <= 2:
        raise PreconditionError("D_v is maximal antisymmetric for n <= 2", "enlarging_unit")
    if not is_connected(nonorth_graph(vectors, backend)):
        raise PreconditionError("nonorthogonality graph is disconnected", "enlarging_unit")
    best, best_value = None, float("inf")
    for i, j in itertools.combinations(range(n), 2):
        inner = backend.inner(vectors[i], vectors[j])
        if backend.is_zero(inner):
            return i + 1, j + 1
        scale = backend.magnitude(backend.norm_sq(vectors[i])) * backend.magnitude(backend.norm_sq(vectors[j]))
        value = backend.magnitude(inner) / scale**0.5
        if value < best_value:
            best, best_value = (i + 1, j + 1), value
    return best


def enlarged_diagonal_algebra(
    vectors: Sequence[np.ndarray], pair: tuple[int, int], backend: Backend = None
) -> OperatorAlgebra:
    """Closure of D_v together with the unit E_ij (1-based pair)."""
    backend = backend or get_backend()
    base = make_Dv(vectors, backend)
    extra = v_matrix_unit(base.provenance.vectors, pair[0] - 1, pair[1] - 1, backend)
    return close_algebra(base.basis + [extra], True, backend, base.n)


def enlargement_witness(
    vectors: Sequence[np.ndarray], preorder: Preorder, backend: Backend = None
) -> EnlargementWitness:
    """Certificate that A_⪯ is not hereditarily antisymmetric when ⪯ is not equality."""
    backend = backend or get_backend()
    vectors = [backend.asarray(v) for v in vectors]
    n = len(vectors)
    for j in range(n):
        below = [i for i in range(n) if preorder.rel[i, j]]
        if len(below) > 1:
            break
    else:
        raise PreconditionError("preorder is the equality relation", "enlargement_witness")
    subspace = span_of(vectors, below, backend, n)
    others = [vectors[i] for i in below if i != j]
    vector = vectors[j] - orth_projection(canonical_basis(others, backend, n)) @ vectors[j]
    weights = coordinates([vectors[i] for i in below], vector, backend)
    units = _Units(vectors, backend)
    element = backend.zeros((n, n))
    for weight, i in zip(weights, below):
        element = element + units(i, j) * weight
    return EnlargementWitness(subspace, element, j + 1, vector)


def fullsubex_constraints_hold(vectors: Sequence[np.ndarray], backend: Backend = None) -> bool:
    """All ⟨v_i, v_j⟩ ≠ 0 and span{v1, v2} ∩ span{v3, v4}⊥ = {0}."""
    backend = backend or get_backend()
    vectors = [backend.asarray(v) for v in vectors]
    if len(vectors) != 4 or not is_linearly_independent(vectors, backend):
        return False
    if any(backend.is_zero(backend.inner(a, b)) for a, b in itertools.combinations(vectors, 2)):
        return False
    cross = backend.zeros((2, 2))
    for a in range(2):
        for b in range(2):
            cross[a, b] = backend.inner(vectors[2 + b], vectors[a])
    return backend.rank(cross) == 2


def make_fullsubex_fixture(
    seed: Optional[int] = None, budget: int = 200, backend: Backend = None
) -> tuple[list, OperatorAlgebra]:
    """Seeded search for a basis of C^4 meeting the constraints, with A_⪯ for 1 ⪯ 2 ⪯ 1."""
    backend = backend or get_backend()
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    for attempt in range(1, budget + 1):
        vectors = [backend.asarray([int(x) for x in rng.integers(-2, 3, size=4)]) for _ in range(4)]
        if fullsubex_constraints_hold(vectors, backend):
            logger.debug("fullsubex basis found after %d attempts", attempt)
            preorder = Preorder.from_pairs(4, [(1, 2), (2, 1)])
            return vectors, make_preorder_algebra(preorder, vectors, backend)
    raise BudgetExhaustedError(f"no admissible basis in {budget} attempts; retry with another seed")


def _random_vector(rng: np.random.Generator, n: int, backend: Backend) -> np.ndarray:
    real = backend.random_scalars(rng, n)
    imaginary = backend.random_scalars(rng, n)
    if backend.can_normalize:
        return real
    return real + imaginary * backend.scalar("i")


def random_unitary(n: int, rng: np.random.Generator, backend: Backend) -> np.ndarray:
    """Cayley transform (I - K)(I + K)^-1 of a random skew-Hermitian K (rational in exact mode)."""
    x = np.array([_random_vector(rng, n, backend) for _ in range(n)], dtype=backend.dtype)
    skew = x - backend.adjoint(x)
    identity = backend.eye(n)
    return (identity - skew) @ backend.inv(identity + skew)


def random_anti_orthogonal_basis(
    n: int, seed: Optional[int] = None, backend: Backend = None, budget: int = 500
) -> list:
    """Rejection-sampled anti-orthogonal basis; the acceptance rate is logged."""
    backend = backend or get_backend()
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    for attempt in range(1, budget + 1):
        vectors = [_random_vector(rng, n, backend) for _ in range(n)]
        if not is_linearly_independent(vectors, backend):
            continue
        if is_anti_orthogonal(vectors, backend).ok:
            logger.info("anti-orthogonal basis accepted after %d samples (rate %.3f)", attempt, 1 / attempt)
            return vectors
    raise BudgetExhaustedError(f"no anti-orthogonal basis in {budget} samples")


def random_block_basis(
    sizes: Sequence[int],
    seed: Optional[int] = None,
    backend: Backend = None,
    suitable: Optional[bool] = True,
    budget: int = 200,
) -> BlockOrderedBasis:
    """Seeded block ordered basis with orthonormal blocks.

    ``suitable=True`` rejects samples that fail the (*) conditions; ``False``
    makes the first vectors of blocks 1 and 2 orthogonal (an orthogonal, not
    normalized, second block in exact mode); ``None`` accepts anything.
    """
    backend = backend or get_backend()
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    n = sum(sizes)
    if suitable is False and len(sizes) < 2:
        raise PreconditionError("a violation needs two blocks", "random_block_basis")
    accepted_after = None
    for attempt in range(1, budget + 1):
        blocks = []
        for index, size in enumerate(sizes):
            if suitable is False and index == 1:
                first = blocks[0][0]
                start = _random_vector(rng, n, backend)
                start = start - first * (backend.inner(first, start) / backend.norm_sq(first))
                rest = [_random_vector(rng, n, backend) for _ in range(size - 1)]
                try:
                    blocks.append(gram_schmidt([start] + rest, backend).vectors)
                except RankDeficiencyError:
                    blocks = None
                    break
                continue
            unitary = random_unitary(n, rng, backend)
            blocks.append([unitary[:, c].copy() for c in range(size)])
        if blocks is None:
            continue
        vectors = [v for block in blocks for v in block]
        if not is_linearly_independent(vectors, backend):
            continue
        basis = BlockOrderedBasis.from_blocks(blocks, backend)
        if suitable is None or is_suitably_nonorthogonal(basis).ok == suitable:
            accepted_after = attempt
            break
    else:
        raise BudgetExhaustedError(f"no block basis with suitable={suitable} in {budget} samples")
    logger.info("block basis accepted after %d samples (rate %.3f)", accepted_after, 1 / accepted_after)
    return basis
