"""
Antisymmetry of operator algebras.

An algebra is antisymmetric when its only self-adjoint elements are real
multiples of its unit. The tests here work on D = A ∩ A*: D is closed under
adjoints, so whenever it holds a non-scalar element, the real or imaginary
part of that element is a self-adjoint non-scalar witness.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from src import settings
from src.algebra.invariant import (
    Lattice,
    SemiInvariantSpec,
    compress,
    invariant_lattice,
    is_invariant,
    lattice_pairs,
)
from src.algebra.matspan import (
    OperatorAlgebra,
    adjoint_span,
    intersect_spans,
    random_element,
    span_of_matrices,
)
from src.algebra.triangular import spectral_projection
from src.exceptions import NotInvariantError
from src.linalg.subspace import EchelonBuilder, Subspace, full_space, zero_subspace

logger = logging.getLogger(__name__)

YES = "yes"
NO = "no"
UNKNOWN = "unknown"


@dataclass
class AntisymmetryReport:
    antisymmetric: bool
    witness: Optional[np.ndarray] = None  # self-adjoint, in A, not a multiple of the unit
    source: Optional[np.ndarray] = None  # element of A ∩ A* the witness was taken from
    method_notes: str = ""


@dataclass
class HereditaryCounterexample:
    """Invariant E2 ⊆ E1 whose compression to E1 ⊖ E2 is not antisymmetric."""

    e1: Subspace
    e2: Subspace
    compressed_witness: np.ndarray


@dataclass
class HereditaryVerdict:
    status: str  # "yes" | "no" | "unknown"
    counterexample: Optional[HereditaryCounterexample] = None
    lattice_complete: bool = False


def _is_scalar(algebra: OperatorAlgebra, matrix: np.ndarray) -> bool:
    unit_span = span_of_matrices([algebra.unit], algebra.backend, algebra.n)
    return unit_span.contains(matrix)


def _real_and_imaginary(matrix: np.ndarray, backend) -> tuple[np.ndarray, np.ndarray]:
    """(M + M*)/2 and (M - M*)/(2i), both self-adjoint."""
    adjoint = backend.adjoint(matrix)
    half = backend.scalar("1/2")
    real = (matrix + adjoint) * half
    imaginary = (matrix - adjoint) * backend.scalar("-1/2i")
    return real, imaginary


def self_adjoint_intersection(algebra: OperatorAlgebra):
    """A ∩ A* as a span of matrices."""
    return intersect_spans(algebra.span, adjoint_span(algebra))


def is_antisymmetric(algebra: OperatorAlgebra) -> AntisymmetryReport:
    """Antisymmetry test with a self-adjoint witness on failure."""
    backend = algebra.backend
    common = self_adjoint_intersection(algebra)
    for element in common.basis:
        if _is_scalar(algebra, element):
            continue
        for part in _real_and_imaginary(element, backend):
            if not _is_scalar(algebra, part):
                logger.debug("A ∩ A* has dimension %d; found a non-scalar witness", common.dim)
                return AntisymmetryReport(
                    False,
                    witness=part,
                    source=element,
                    method_notes=f"A ∩ A* has dimension {common.dim}; witness is the real or "
                    "imaginary part of a non-scalar element",
                )
    return AntisymmetryReport(True, method_notes=f"A ∩ A* has dimension {common.dim}, all scalar")


def hermitian_part(algebra: OperatorAlgebra) -> list[np.ndarray]:
    """Real-linear basis of the self-adjoint elements of A.

    The self-adjoint elements H of D = A ∩ A* satisfy D = H + iH with
    H ∩ iH = 0, so real and imaginary parts of a basis of D span H and any
    complex-independent selection of them is a real basis.
    """
    backend = algebra.backend
    common = self_adjoint_intersection(algebra)
    builder = EchelonBuilder(backend, algebra.n * algebra.n)
    selected: list[np.ndarray] = []
    for element in common.basis:
        for part in _real_and_imaginary(element, backend):
            if len(selected) == common.dim:
                break
            if builder.add(part.reshape(-1)):
                selected.append(part)
    return selected


def _projection_from(algebra: OperatorAlgebra, element: np.ndarray, eigen) -> Optional[np.ndarray]:
    backend = algebra.backend
    for value in eigen.values:
        if backend.is_zero(value):
            continue
        projection = spectral_projection(element, value, eigen.values, backend)
        if backend.is_zero_array(projection) or backend.arrays_equal(projection, algebra.unit):
            continue
        if backend.arrays_equal(projection @ projection, projection) and algebra.contains(projection):
            return projection
    return None


def find_nonscalar_projection(
    algebra: OperatorAlgebra, seed: Optional[int] = None, sample_size: Optional[int] = None
) -> Optional[np.ndarray]:
    """An idempotent of A other than 0 and the unit, or None.

    Scans the canonical basis and then a seeded random sample; None means no
    sampled element had two distinct eigenvalues, not a proof of absence.
    """
    seed = settings.SEED if seed is None else seed
    sample_size = settings.SAMPLE_SIZE if sample_size is None else sample_size
    backend = algebra.backend
    rng = np.random.default_rng(seed)
    candidates = list(algebra.basis)
    candidates += [random_element(algebra, rng) for _ in range(sample_size)]
    skipped = 0
    for element in candidates:
        eigen = backend.eigenvalues(element)
        if not eigen.complete:
            skipped += 1
            continue
        projection = _projection_from(algebra, element, eigen)
        if projection is not None:
            return projection
    logger.info(
        "No non-scalar projection among %d sampled elements (%d skipped: eigenvalues outside the field)",
        len(candidates),
        skipped,
    )
    return None


def is_hereditarily_antisymmetric(
    algebra: OperatorAlgebra,
    lattice: Union[Lattice, Sequence[Subspace], None] = None,
    lattice_complete: Optional[bool] = None,
) -> HereditaryVerdict:
    """Check antisymmetry of every compression to a pair of lattice subspaces.

    Without a lattice the exact one is used for family-built algebras and a
    discovered one otherwise. Yes needs a complete lattice.
    """
    if lattice is None:
        lattice = invariant_lattice(algebra)
    if isinstance(lattice, Lattice):
        complete = lattice.complete if lattice_complete is None else lattice_complete
        subspaces = list(lattice.subspaces)
    else:
        complete = bool(lattice_complete)
        subspaces = list(lattice)

    backend = algebra.backend
    for index, subspace in enumerate(subspaces):
        if not is_invariant(algebra, subspace):
            raise NotInvariantError(
                f"lattice entry {index} is not invariant", "is_hereditarily_antisymmetric"
            )
    subspaces += [zero_subspace(algebra.n, backend), algebra.space]
    if not algebra.is_compressed:
        subspaces.append(full_space(algebra.n, backend))

    checked = 0
    for e1, e2 in lattice_pairs(subspaces):
        if e1.dim - e2.dim <= 1 or not e1.is_subspace_of(algebra.space):
            continue
        checked += 1
        report = is_antisymmetric(compress(algebra, SemiInvariantSpec(e1, e2), validate=False))
        if not report.antisymmetric:
            logger.info("Subquotient of dimension %d is not antisymmetric", e1.dim - e2.dim)
            return HereditaryVerdict(
                NO, HereditaryCounterexample(e1, e2, report.witness), complete
            )
    logger.debug("All %d subquotients are antisymmetric", checked)
    return HereditaryVerdict(YES if complete else UNKNOWN, None, complete)
