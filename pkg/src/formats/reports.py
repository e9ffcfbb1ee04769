"""
Analysis reports and their independent re-check.

A report records the command, input digests, backend, seed, the verdicts and
one certificate per verdict. Certificates carry the witness objects (matrices,
subspaces, chains) so :func:`verify_report` can re-validate them with the
verifier functions alone, without rerunning any search.

Report bodies serialize with a fixed field order; ``timing_ms`` is the only
field that varies between identical runs and is left out of :meth:`Report.body`.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from src.algebra.invariant import SemiInvariantSpec, compress, is_invariant
from src.algebra.matspan import OperatorAlgebra, adjoint_span, close_algebra, span_of_matrices
from src.algebra.triangular import (
    BlockOrderedBasis,
    check_jordanesque,
    upper_triangular_check,
)
from src.exceptions import DocumentFormatError, OpalgsError
from src.formats.documents import (
    algebra_from_document,
    algebra_to_document,
    block_basis_from_document,
    block_basis_to_document,
    channels_from_document,
    decode_matrix,
    decode_scalar,
    decode_vector,
    document_backend,
    encode_matrix,
    encode_vector,
    subspace_from_document,
    subspace_to_document,
)
from src.linalg.backend import Backend
from src.linalg.subspace import Subspace, is_linearly_independent
from src.qposet.chains import QuantumChain, is_valid_chain, power_filtration, verify_partition
from src.qposet.dilworth import verify_chain_partition

logger = logging.getLogger(__name__)

OK = "ok"
NEGATIVE = "negative"
UNKNOWN = "unknown"


@dataclass
class Report:
    """Result of one CLI command."""

    command: str
    backend: str
    seed: int
    inputs: dict = field(default_factory=dict)  # input name -> sha256
    verdicts: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)
    detail: str = OK  # "ok" | "negative" | "unknown"
    algebra: Optional[dict] = None  # algebra document the certificates refer to
    timing_ms: float = 0.0

    @property
    def exit_code(self) -> int:
        return 1 if self.detail == NEGATIVE else 0

    def body(self) -> dict:
        """Everything except the timing, in a fixed order."""
        return {
            "kind": "report",
            "command": self.command,
            "backend": self.backend,
            "seed": self.seed,
            "detail": self.detail,
            "inputs": dict(sorted(self.inputs.items())),
            "verdicts": self.verdicts,
            "certificates": self.certificates,
            "algebra": self.algebra,
        }

    def to_document(self, include_timing: bool = True) -> dict:
        document = self.body()
        if include_timing:
            document["timing_ms"] = round(self.timing_ms, 3)
        return document

    @classmethod
    def from_document(cls, document: dict) -> "Report":
        if document.get("kind") != "report":
            raise DocumentFormatError("not a report document", field="kind")
        try:
            return cls(
                command=document["command"],
                backend=document["backend"],
                seed=int(document["seed"]),
                inputs=document.get("inputs", {}),
                verdicts=document.get("verdicts", {}),
                certificates=document.get("certificates", []),
                detail=document.get("detail", OK),
                algebra=document.get("algebra"),
                timing_ms=float(document.get("timing_ms", 0.0)),
            )
        except KeyError as e:
            raise DocumentFormatError("missing field", field=str(e.args[0]))


def digest_file(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def encode_value(value, backend: Backend):
    """Certificate field encoding: arrays, subspaces and bases become documents."""
    if isinstance(value, Subspace):
        return subspace_to_document(value)
    if isinstance(value, BlockOrderedBasis):
        return block_basis_to_document(value)
    if isinstance(value, OperatorAlgebra):
        return algebra_to_document(value)
    if isinstance(value, QuantumChain):
        return {
            "vectors": [encode_vector(v, backend) for v in value.vectors],
            "witnesses": [encode_matrix(m, backend) for m in value.witnesses],
        }
    if isinstance(value, np.ndarray):
        return encode_matrix(value, backend) if value.ndim == 2 else encode_vector(value, backend)
    if isinstance(value, (list, tuple)):
        return [encode_value(v, backend) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def certificate(kind: str, backend: Backend, **fields) -> dict:
    entry = {"type": kind}
    for name, value in fields.items():
        entry[name] = encode_value(value, backend)
    return entry


# --- verification ---------------------------------------------------------


@dataclass
class VerificationResult:
    ok: bool
    checked: int = 0
    failures: list = field(default_factory=list)  # (index, type, message)


def _chain(raw: dict, backend: Backend) -> QuantumChain:
    vectors = [decode_vector(v, backend, "vectors") for v in raw["vectors"]]
    witnesses = [decode_matrix(m, backend, "witnesses") for m in raw["witnesses"]]
    return QuantumChain(vectors, witnesses)


def _is_self_adjoint(matrix: np.ndarray, backend: Backend) -> bool:
    return backend.arrays_equal(matrix, backend.adjoint(matrix))


def _is_multiple_of(matrix: np.ndarray, unit: np.ndarray, backend: Backend) -> bool:
    return span_of_matrices([unit], backend, unit.shape[0]).contains(matrix)


def _check_self_adjoint_witness(algebra, entry, backend):
    witness = decode_matrix(entry["matrix"], backend, "matrix", algebra.n)
    return (
        algebra.contains(witness)
        and _is_self_adjoint(witness, backend)
        and not _is_multiple_of(witness, algebra.unit, backend)
    )


def _check_antisymmetric(algebra, entry, backend):
    """The recorded basis of A ∩ A* is scalar and has the full dimension 2 dim A - dim(A + A*)."""
    recorded = [decode_matrix(m, backend, "intersection", algebra.n) for m in entry["intersection"]]
    adjoint = adjoint_span(algebra)
    for matrix in recorded:
        if not (algebra.contains(matrix) and adjoint.contains(matrix)):
            return False
        if not _is_multiple_of(matrix, algebra.unit, backend):
            return False
    both = span_of_matrices(algebra.basis + adjoint.basis, backend, algebra.n)
    return span_of_matrices(recorded, backend, algebra.n).dim == 2 * algebra.dim - both.dim


def _check_invariant(algebra, entry, backend):
    return is_invariant(algebra, subspace_from_document(entry["subspace"], backend))


def _check_lattice(algebra, entry, backend):
    return all(is_invariant(algebra, subspace_from_document(s, backend)) for s in entry["subspaces"])


def _spec(algebra, entry, backend) -> Optional[SemiInvariantSpec]:
    e1 = subspace_from_document(entry["e1"], backend)
    e2 = subspace_from_document(entry["e2"], backend)
    if not (is_invariant(algebra, e1) and is_invariant(algebra, e2) and e2.is_subspace_of(e1)):
        return None
    return SemiInvariantSpec(e1, e2)


def _check_obstruction(algebra, entry, backend):
    spec = _spec(algebra, entry, backend)
    return spec is not None and spec.dim > 1 and compress(algebra, spec, validate=False).dim == spec.dim**2


def _check_hereditary_counterexample(algebra, entry, backend):
    spec = _spec(algebra, entry, backend)
    if spec is None:
        return False
    compressed = compress(algebra, spec, validate=False)
    witness = decode_matrix(entry["witness"], backend, "witness", algebra.n)
    return (
        compressed.contains(witness)
        and _is_self_adjoint(witness, backend)
        and not _is_multiple_of(witness, compressed.unit, backend)
    )


def _check_triangular_basis(algebra, entry, backend):
    vectors = [decode_vector(v, backend, "vectors") for v in entry["vectors"]]
    return (
        len(vectors) == algebra.space.dim
        and is_linearly_independent(vectors, backend)
        and upper_triangular_check(algebra, vectors)
    )


def _check_jordanesque_basis(algebra, entry, backend):
    basis = block_basis_from_document(entry["basis"], backend)
    return all(check_jordanesque(b, basis).ok for b in algebra.basis)


def _algebraic_multiplicity(matrix: np.ndarray, value, backend: Backend) -> int:
    """dim ker (M - λI)^n."""
    n = matrix.shape[0]
    shifted = matrix - backend.eye(n) * value
    power = backend.eye(n)
    for _ in range(n):
        power = power @ shifted
    return n - backend.rank(power)


def _is_nilpotent_matrix(matrix: np.ndarray, backend: Backend) -> bool:
    power = matrix
    for _ in range(matrix.shape[0] - 1):
        power = power @ matrix
    return backend.is_zero_array(power)


def _check_idempotent(algebra, entry, backend):
    matrix = decode_matrix(entry["matrix"], backend, "matrix")
    n = matrix.shape[0]
    projection = decode_matrix(entry["projection"], backend, "projection", n)
    value = decode_scalar(entry["value"], backend, "value")
    if backend.is_zero_array(projection) or not backend.arrays_equal(projection @ projection, projection):
        return False
    if not backend.arrays_equal(projection @ matrix, matrix @ projection):
        return False
    # P must be the whole generalized eigenspace of λ, not a smaller or larger idempotent
    shifted = matrix - backend.eye(n) * value
    if not _is_nilpotent_matrix(shifted @ projection, backend):
        return False
    if backend.rank(projection) != _algebraic_multiplicity(matrix, value, backend):
        return False
    return close_algebra([matrix], False, backend, n).contains(projection)


def _check_quantum_chain(algebra, entry, backend):
    return is_valid_chain(algebra, _chain(entry["chain"], backend))


def _check_antichain_partition(algebra, entry, backend):
    parts = [subspace_from_document(p, backend) for p in entry["parts"]]
    return verify_partition(algebra, parts, ordered=bool(entry.get("ordered", False)))


def _check_chain_partition(algebra, entry, backend):
    chains = [_chain(c, backend) for c in entry["chains"]]
    return verify_chain_partition(algebra, chains)


def _check_nilpotency(algebra, entry, backend):
    return power_filtration(algebra).nilpotency_index == int(entry["index"])


def _check_transition(algebra, entry, backend):
    v = decode_vector(entry["v"], backend, "v")
    w = decode_vector(entry["w"], backend, "w")
    element = decode_matrix(entry["element"], backend, "element", algebra.n)
    return algebra.contains(element) and not backend.is_zero(backend.inner(element @ v, w))


def _check_no_transition(algebra, entry, backend):
    v = decode_vector(entry["v"], backend, "v")
    w = decode_vector(entry["w"], backend, "w")
    return all(backend.is_zero(backend.inner(b @ v, w)) for b in algebra.basis)


def _check_channels(algebra, entry, backend):
    channels_from_document(entry["channels"], backend)
    return True


VERIFIERS: dict[str, Callable] = {
    "self_adjoint_witness": _check_self_adjoint_witness,
    "antisymmetric": _check_antisymmetric,
    "invariant_subspace": _check_invariant,
    "lattice": _check_lattice,
    "obstruction": _check_obstruction,
    "hereditary_counterexample": _check_hereditary_counterexample,
    "triangular_basis": _check_triangular_basis,
    "jordanesque_basis": _check_jordanesque_basis,
    "idempotent": _check_idempotent,
    "quantum_chain": _check_quantum_chain,
    "antichain_partition": _check_antichain_partition,
    "chain_partition": _check_chain_partition,
    "nilpotency": _check_nilpotency,
    "transition": _check_transition,
    "no_transition": _check_no_transition,
    "channels": _check_channels,
}


def verify_report(report: Union[Report, dict], backend: Optional[Backend] = None) -> VerificationResult:
    """Re-validate every certificate of a report."""
    if isinstance(report, dict):
        report = Report.from_document(report)
    backend = document_backend({"backend": report.backend}, backend)
    algebra = algebra_from_document(report.algebra, backend) if report.algebra else None
    result = VerificationResult(True)
    for index, entry in enumerate(report.certificates):
        kind = entry.get("type")
        verifier = VERIFIERS.get(kind)
        if verifier is None:
            result.failures.append((index, kind, "unknown certificate type"))
            continue
        if algebra is None and kind not in ("idempotent", "channels"):
            result.failures.append((index, kind, "report carries no algebra"))
            continue
        try:
            passed = verifier(algebra, entry, backend)
        except (OpalgsError, KeyError, TypeError, ValueError) as e:
            logger.debug("certificate %d (%s) raised %r", index, kind, e)
            passed = False
            result.failures.append((index, kind, f"malformed: {e}"))
        else:
            if not passed:
                result.failures.append((index, kind, "check failed"))
        result.checked += 1
    result.ok = not result.failures
    logger.info(
        "Verified %d certificates of a %s report: %d failures",
        result.checked,
        report.command,
        len(result.failures),
    )
    return result
