"""
Partitions of C^n into quantum chains, no more chains than the widest top-down layer.

Stage i fixes the (i+1)st vector of every chain so that the first d_i of them
project onto a basis of the layer E_i = A^i(C^n) ⊖ A^{i+1}(C^n). When no
basis element extends a chain out of the span F already covered, the chain is
perturbed as

    t B_i (A_{i-1} + t B_{i-1}) ... (A_1 + t B_1)(v + t w)

for the first t in 1, 1/2, 1/4, ... (then random complex directions) that keeps
every earlier stage spanning. The chains are finally pruned to a basis.
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from src import settings
from src.algebra.matspan import OperatorAlgebra
from src.exceptions import BudgetExhaustedError, PreconditionError
from src.linalg.subspace import EchelonBuilder, orth_projection
from src.qposet.chains import QuantumChain, is_basis, is_valid_chain, power_filtration

logger = logging.getLogger(__name__)

HALVINGS = 24


class _Chain:
    """Start vector and step operators of one chain under construction."""

    def __init__(self, start: np.ndarray):
        self.start = start
        self.steps: list[np.ndarray] = []

    def vector(self, stage: int) -> np.ndarray:
        vector = self.start
        for step in self.steps[:stage]:
            vector = step @ vector
        return vector


def _independent(vectors: Sequence[np.ndarray], backend, length: int) -> bool:
    builder = EchelonBuilder(backend, length)
    return all(builder.add(v) for v in vectors)


def _stage_ok(chains: list[_Chain], stage: int, count: int, projection, backend, n: int) -> bool:
    """Projections of the first ``count`` chains' stage vectors are independent."""
    return _independent([projection @ c.vector(stage) for c in chains[:count]], backend, n)


def _basis_products(algebra: OperatorAlgebra, length: int):
    """Sequences (B_1..B_length) of basis elements in canonical order."""
    basis = algebra.basis
    if length == 0:
        yield []
        return
    for head in _basis_products(algebra, length - 1):
        for b in basis:
            yield head + [b]


def _direction(algebra: OperatorAlgebra, stage: int, covered: EchelonBuilder, projection, starts):
    """(w, [B_1..B_stage]) whose product leaves the covered span after projecting."""
    for w in starts:
        for product in _basis_products(algebra, stage):
            image = w
            for b in product:
                image = b @ image
            if not covered.contains(projection @ image):
                return w, product
    return None


def dilworth_chain_partition(
    algebra: OperatorAlgebra, seed: Optional[int] = None, budget: Optional[int] = None
) -> list[QuantumChain]:
    """Chains partitioning C^n, at most max_i dim E_i of them (each verified)."""
    seed = settings.SEED if seed is None else seed
    budget = settings.SEARCH_BUDGET if budget is None else budget
    backend = algebra.backend
    n = algebra.n
    rng = np.random.default_rng(seed)
    filtration = power_filtration(algebra)
    layers = filtration.layers
    dims = filtration.layer_dims
    projections = [orth_projection(layer) for layer in layers]
    d = max(dims, default=0)

    chains = [_Chain(v) for v in layers[0].vectors] if layers else []
    chains += [_Chain(backend.zeros(n)) for _ in range(d - len(chains))]
    unit_starts = [backend.unit_vector(n, i) for i in range(n)]
    random_starts = [backend.random_scalars(rng, n) for _ in range(budget)]

    for stage in range(1, len(layers)):
        projection = projections[stage]
        for j in range(d):
            if j >= dims[stage]:
                chains[j].steps = chains[j].steps[: stage - 1] + [backend.zeros((n, n))]
                continue
            covered = EchelonBuilder(backend, n)
            for other in chains[:j]:
                covered.add(projection @ other.vector(stage))
            chain = chains[j]
            current = chain.vector(stage - 1)
            direct = next(
                (b for b in algebra.basis if not covered.contains(projection @ (b @ current))),
                None,
            )
            if direct is not None:
                chain.steps = chain.steps[: stage - 1] + [direct]
                continue
            # A zero start gains nothing from a basis vector another chain already uses
            starts = random_starts + unit_starts if backend.is_zero_array(chain.start) else unit_starts + random_starts
            found = _direction(algebra, stage, covered, projection, starts)
            if found is None:
                raise BudgetExhaustedError(f"no extension direction at stage {stage}, chain {j + 1}")
            w, product = found
            if not _perturb(chain, stage, w, product, chains, j, projections, dims, rng, backend, n):
                raise BudgetExhaustedError(
                    f"no perturbation kept earlier stages spanning (stage {stage}, chain {j + 1})"
                )
            logger.debug("stage %d chain %d extended by perturbation", stage, j + 1)

    raw = []
    for chain in chains:
        vectors, witnesses = [], []
        for stage in range(len(layers)):
            vector = chain.vector(stage)
            if backend.is_zero_array(vector) or stage > len(chain.steps):
                break
            if stage:
                witnesses.append(chain.steps[stage - 1])
            vectors.append(vector)
        if vectors:
            raw.append(QuantumChain(vectors, witnesses))

    result = prune_chains(raw, algebra)
    if not verify_chain_partition(algebra, result):
        raise PreconditionError("chain partition failed verification", "dilworth_chain_partition")
    logger.info("Partitioned C^%d into %d quantum chains (widest layer %d)", n, len(result), d)
    return result


def _scales(rng: np.random.Generator, backend):
    t = backend.scalar(1)
    half = backend.scalar("1/2")
    for _ in range(HALVINGS):
        yield t
        t = t * half
    for _ in range(HALVINGS):
        a, b = (int(x) for x in rng.integers(-3, 4, size=2))
        yield backend.scalar(a) + backend.scalar(b) * backend.scalar("i") if (a or b) else backend.scalar(1)


def _perturb(chain, stage, w, product, chains, j, projections, dims, rng, backend, n) -> bool:
    """Try t values until the perturbed chain extends and earlier stages still span."""
    original_start, original_steps = chain.start, list(chain.steps)
    for t in _scales(rng, backend):
        chain.start = original_start + w * t
        steps = [step + b * t for step, b in zip(original_steps[: stage - 1], product)]
        chain.steps = steps + [product[stage - 1] * t]
        earlier_ok = all(
            _stage_ok(chains, s, dims[s], projections[s], backend, n) for s in range(stage)
        )
        if earlier_ok and _stage_ok(chains, stage, j + 1, projections[stage], backend, n):
            return True
    chain.start, chain.steps = original_start, original_steps
    return False


def prune_chains(chains: Sequence[QuantumChain], algebra: OperatorAlgebra) -> list[QuantumChain]:
    """Drop vectors dependent on earlier ones; witnesses are composed across dropped vectors."""
    backend = algebra.backend
    n = algebra.n
    builder = EchelonBuilder(backend, n)
    pruned = []
    for chain in chains:
        kept, witnesses = [], []
        pending = None  # product of witnesses since the last kept vector
        for index, vector in enumerate(chain.vectors):
            if index:
                step = chain.witnesses[index - 1]
                pending = step if pending is None else step @ pending
            if builder.add(vector):
                if kept:
                    witnesses.append(pending)
                kept.append(vector)
                pending = None
            elif not kept:
                pending = None
        if kept:
            pruned.append(QuantumChain(kept, witnesses))
    if len(builder) != n:
        raise PreconditionError("chains do not span C^n", "prune_chains")
    return pruned


def verify_chain_partition(algebra: OperatorAlgebra, chains: Sequence[QuantumChain]) -> bool:
    """Every chain verified through its witnesses and the vectors form a basis."""
    vectors = [v for chain in chains for v in chain.vectors]
    return all(is_valid_chain(algebra, c) for c in chains) and is_basis(vectors, algebra.n, algebra.backend)
