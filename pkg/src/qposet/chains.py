"""
Quantum chains and quantum antichains of nilpotent operator algebras.

- A quantum chain is a list of nonzero vectors with v_{i+1} ∈ A·v_i.
- A quantum antichain is a subspace E with P·A·P = 0 (P projecting onto E).
- An antichain partition splits C^n orthogonally into antichains; it is
  ordered when every prefix sum is invariant.

The longest chain and the smallest ordered partition both have the
nilpotency index r as their size, and the two filtrations below realize it.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src import settings
from src.algebra.invariant import is_invariant
from src.algebra.matspan import OperatorAlgebra, span_of_matrices
from src.exceptions import GuardExceededError, NotNilpotentError, PreconditionError
from src.linalg.subspace import (
    EchelonBuilder,
    Subspace,
    canonical_basis,
    coordinate_span,
    full_space,
    kernel,
    orth_complement,
    orth_difference,
    orth_projection,
    sum_subspaces,
    zero_subspace,
)

logger = logging.getLogger(__name__)


@dataclass
class PowerFiltration:
    """A^0(C^n) = C^n ⊋ A^1(C^n) ⊋ ... ⊋ A^r(C^n) = {0}."""

    spans: list[Subspace]
    nilpotency_index: int

    @property
    def layers(self) -> list[Subspace]:
        """E_i = A^i(C^n) ⊖ A^{i+1}(C^n), i = 0..r-1."""
        return [orth_difference(a, b) for a, b in zip(self.spans, self.spans[1:])]

    @property
    def layer_dims(self) -> list[int]:
        return [a.dim - b.dim for a, b in zip(self.spans, self.spans[1:])]


@dataclass
class QuantumChain:
    """v_1..v_k with witnesses[i] @ vectors[i] == vectors[i+1]."""

    vectors: list
    witnesses: list = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.vectors)


@dataclass
class AntichainPartition:
    parts: list[Subspace]
    ordered: bool

    @property
    def size(self) -> int:
        return len(self.parts)


def _image(algebra: OperatorAlgebra, subspace: Subspace) -> Subspace:
    backend = algebra.backend
    images = [b @ v for b in algebra.basis for v in subspace.basis]
    return canonical_basis(images, backend, algebra.n)


def power_filtration(algebra: OperatorAlgebra) -> PowerFiltration:
    """Iterated images A^i(C^n); raises NotNilpotentError when they stop shrinking."""
    spans = [full_space(algebra.n, algebra.backend)]
    while not spans[-1].is_zero():
        following = _image(algebra, spans[-1])
        if following.dim >= spans[-1].dim:
            raise NotNilpotentError(
                f"A^{len(spans)}(C^n) stays at dimension {following.dim}", "power_filtration"
            )
        spans.append(following)
    return PowerFiltration(spans, len(spans) - 1)


def is_nilpotent_algebra(algebra: OperatorAlgebra) -> bool:
    try:
        power_filtration(algebra)
    except NotNilpotentError:
        return False
    return True


def kernel_tower(algebra: OperatorAlgebra) -> list[Subspace]:
    """E_1 = joint kernel, E_{i+1} = {v : A v ⊆ E_i}, up to C^n.

    Each level must strictly contain the previous one, so the tower has at
    most n levels.
    """
    backend = algebra.backend
    n = algebra.n
    tower: list[Subspace] = []
    current = zero_subspace(n, backend)
    while not current.is_full():
        if len(tower) >= n:
            raise NotNilpotentError(f"kernel tower did not reach C^n in {n} levels", "kernel_tower")
        annihilator = backend.conj(orth_complement(current).basis)
        rows = [annihilator @ b for b in algebra.basis]
        stacked = np.concatenate(rows, axis=0) if rows else backend.zeros((0, n))
        following = kernel(stacked, backend) if len(stacked) else full_space(n, backend)
        if following.dim <= current.dim or not current.is_subspace_of(following):
            raise NotNilpotentError(
                f"kernel tower stopped at dimension {current.dim} below C^n", "kernel_tower"
            )
        tower.append(following)
        current = following
    return tower


def is_quantum_antichain(algebra: OperatorAlgebra, subspace: Subspace) -> bool:
    """P B P = 0 for every basis element B."""
    if subspace.is_zero():
        raise PreconditionError("a quantum antichain must be nonzero", "is_quantum_antichain")
    backend = algebra.backend
    p = orth_projection(subspace)
    return all(backend.is_zero_array(p @ b @ p) for b in algebra.basis)


def _step_witness(algebra: OperatorAlgebra, source: np.ndarray, target: np.ndarray):
    """An element B of A with B·source = target, or None."""
    backend = algebra.backend
    if algebra.dim == 0:
        return None
    images = np.array([b @ source for b in algebra.basis], dtype=backend.dtype).T
    weights = backend.solve(images, target)
    if weights is None:
        return None
    return algebra.span.combination(weights)


def verify_quantum_chain(algebra: OperatorAlgebra, vectors: Sequence[np.ndarray]) -> Optional[QuantumChain]:
    """Witness every step v_i -> v_{i+1}; None (failing step logged) when a step is impossible."""
    backend = algebra.backend
    vectors = [backend.asarray(v) for v in vectors]
    for index, vector in enumerate(vectors):
        if backend.is_zero_array(vector):
            logger.debug("chain vector %d is zero", index + 1)
            return None
    witnesses = []
    for index, (source, target) in enumerate(zip(vectors, vectors[1:])):
        witness = _step_witness(algebra, source, target)
        if witness is None:
            logger.debug("chain step %d -> %d has no witness in the algebra", index + 1, index + 2)
            return None
        witnesses.append(witness)
    return QuantumChain(vectors, witnesses)


def is_valid_chain(algebra: OperatorAlgebra, chain: QuantumChain) -> bool:
    """Re-check a chain through its stored witnesses."""
    backend = algebra.backend
    if len(chain.witnesses) != max(chain.length - 1, 0):
        return False
    if any(backend.is_zero_array(v) for v in chain.vectors):
        return False
    for witness, source, target in zip(chain.witnesses, chain.vectors, chain.vectors[1:]):
        if not algebra.contains(witness) or not backend.arrays_equal(witness @ source, target):
            return False
    return True


def _pairwise_orthogonal(parts: Sequence[Subspace]) -> bool:
    for a, b in itertools.combinations(parts, 2):
        backend = a.backend
        if not backend.is_zero_array(backend.conj(a.basis) @ b.basis.T):
            return False
    return True


def verify_partition(algebra: OperatorAlgebra, parts: Sequence[Subspace], ordered: bool = False) -> bool:
    """Orthogonal antichains summing to C^n (with invariant prefix sums when ``ordered``)."""
    n = algebra.n
    if sum(p.dim for p in parts) != n or any(p.is_zero() for p in parts):
        return False
    if not _pairwise_orthogonal(parts):
        return False
    if not all(is_quantum_antichain(algebra, p) for p in parts):
        return False
    if ordered:
        prefix = zero_subspace(n, algebra.backend)
        for part in parts:
            prefix = sum_subspaces(prefix, part)
            if not is_invariant(algebra, prefix):
                return False
    return True


def is_ordered_partition(algebra: OperatorAlgebra, parts: Sequence[Subspace]) -> bool:
    return verify_partition(algebra, parts, ordered=True)


def top_down_partition(algebra: OperatorAlgebra) -> AntichainPartition:
    """A^{r-1}, A^{r-2} ⊖ A^{r-1}, ..., C^n ⊖ A^1."""
    filtration = power_filtration(algebra)
    parts = list(reversed(filtration.layers))
    if not is_ordered_partition(algebra, parts):
        raise PreconditionError("top-down layers failed verification", "top_down_partition")
    return AntichainPartition(parts, ordered=True)


def bottom_up_partition(algebra: OperatorAlgebra) -> AntichainPartition:
    """E_1, E_2 ⊖ E_1, ... from the kernel tower."""
    tower = kernel_tower(algebra)
    previous = zero_subspace(algebra.n, algebra.backend)
    parts = []
    for level in tower:
        parts.append(orth_difference(level, previous))
        previous = level
    if not is_ordered_partition(algebra, parts):
        raise PreconditionError("bottom-up layers failed verification", "bottom_up_partition")
    expected = power_filtration(algebra).nilpotency_index
    if len(parts) != expected:
        raise PreconditionError(
            f"bottom-up size {len(parts)} differs from the nilpotency index {expected}",
            "bottom_up_partition",
        )
    return AntichainPartition(parts, ordered=True)


def _longest_from(algebra: OperatorAlgebra, start: np.ndarray, target: Optional[int], cap: int):
    """Depth-first search over basis products; returns (vectors, witnesses) of the longest path."""
    backend = algebra.backend
    basis = algebra.basis
    best = ([start], [])
    stack = [([start], [])]
    while stack:
        vectors, witnesses = stack.pop()
        if len(vectors) > len(best[0]):
            best = (vectors, witnesses)
            if target is not None and len(vectors) >= target:
                return best
        if len(vectors) >= cap:
            continue
        for b in reversed(basis):
            image = b @ vectors[-1]
            if not backend.is_zero_array(image):
                stack.append((vectors + [image], witnesses + [b]))
    return best


def max_quantum_chain(algebra: OperatorAlgebra, seed: Optional[int] = None) -> QuantumChain:
    """A chain of length r, found over basis products applied to basis vectors."""
    filtration = power_filtration(algebra)
    r = filtration.nilpotency_index
    backend = algebra.backend
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    starts = [backend.unit_vector(algebra.n, i) for i in range(algebra.n)]
    starts += [backend.random_scalars(rng, algebra.n) for _ in range(algebra.n)]
    for start in starts:
        vectors, witnesses = _longest_from(algebra, start, r, r)
        if len(vectors) == r:
            chain = QuantumChain(vectors, witnesses)
            if not is_valid_chain(algebra, chain):
                raise PreconditionError("constructed chain failed verification", "max_quantum_chain")
            return chain
    raise PreconditionError(f"no chain of length {r} found", "max_quantum_chain")


def brute_force_max_chain(algebra: OperatorAlgebra, depth_cap: Optional[int] = None) -> int:
    """Longest chain from a standard basis vector, read off products of basis elements.

    e_i, B_1 e_i, ..., B_k...B_1 e_i is a chain for some i exactly when the
    word B_k...B_1 is nonzero, so the answer is one more than the largest k
    with a nonzero word of length k. Words of each length are kept as a span.
    """
    if algebra.n > settings.BRUTE_FORCE_GUARD:
        raise GuardExceededError("brute-force chain search is too large", settings.BRUTE_FORCE_GUARD, algebra.n)
    cap = algebra.n + 1 if depth_cap is None else depth_cap
    if algebra.n == 0 or cap == 0:
        return 0
    backend = algebra.backend
    words = algebra.span
    longest = 1
    while longest < cap and words.dim:
        longest += 1
        products = [b @ w for b in algebra.basis for w in words.basis]
        words = span_of_matrices(products, backend, algebra.n)
    return longest


def coordinate_antichain_width(algebra: OperatorAlgebra) -> int:
    """Largest |S| with span{e_i : i ∈ S} a quantum antichain (0 if none)."""
    n = algebra.n
    if n > settings.BRUTE_FORCE_GUARD:
        raise GuardExceededError("coordinate antichain search is too large", settings.BRUTE_FORCE_GUARD, n)
    backend = algebra.backend
    for size in range(n, 0, -1):
        for chosen in itertools.combinations(range(n), size):
            if is_quantum_antichain(algebra, coordinate_span(n, chosen, backend)):
                return size
    return 0


def antichain_width_lower_bound(algebra: OperatorAlgebra) -> int:
    """max_i dim of the top-down layers, raised by the coordinate search when n is small."""
    bound = max(power_filtration(algebra).layer_dims, default=0)
    if algebra.n <= settings.BRUTE_FORCE_GUARD:
        bound = max(bound, coordinate_antichain_width(algebra))
    return bound


def is_basis(vectors: Sequence[np.ndarray], n: int, backend) -> bool:
    if len(vectors) != n:
        return False
    builder = EchelonBuilder(backend, n)
    return all(builder.add(v) for v in vectors)
