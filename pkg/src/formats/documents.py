"""
JSON documents for matrices, algebras, channels and the other shared objects.

Every document is a JSON object with a ``kind`` field and a ``backend`` field.
Scalars are written as:

- exact: strings ``"a/b+c/d i"`` (or plain rationals ``"a/b"``);
- numeric: ``[re, im]`` pairs of floats.

Readers accept both spellings in either backend. Decimal pairs read into the
exact backend are converted to rationals without rounding. Field order in
written documents is fixed, so identical objects serialize byte-identically.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from src.algebra.families import (
    DV,
    GENERIC,
    JV,
    PREORDER_ALG,
    TN,
    FamilyProvenance,
    Preorder,
    make_Dv,
    make_Jv,
    make_preorder_algebra,
    make_Tn,
)
from src.algebra.invariant import Lattice
from src.algebra.matspan import OperatorAlgebra, algebra_from_span, close_algebra, span_of_matrices
from src.algebra.triangular import BlockOrderedBasis
from src.channels.kraus import KrausChannel, validate_channel
from src.exceptions import DocumentFormatError, OpalgsError
from src.linalg.backend import Backend, format_exact_scalar, get_backend
from src.linalg.subspace import Subspace, canonical_basis, full_space

logger = logging.getLogger(__name__)

ALGEBRA_KINDS = ("algebra", "generators", "family")


# --- scalars, vectors, matrices -------------------------------------------


def encode_scalar(value, backend: Backend):
    if backend.name == "exact":
        return format_exact_scalar(backend.scalar(value))
    value = complex(value)
    return [float(value.real), float(value.imag)]


def decode_scalar(raw, backend: Backend, field: str = None):
    try:
        if isinstance(raw, (list, tuple)):
            if len(raw) != 2:
                raise ValueError("expected a [re, im] pair")
            return backend.scalar(complex(float(raw[0]), float(raw[1])))
        if isinstance(raw, (str, int, float)) and not isinstance(raw, bool):
            return backend.scalar(raw)
    except (ValueError, TypeError) as e:
        raise DocumentFormatError(f"bad scalar {raw!r}: {e}", field=field)
    raise DocumentFormatError(f"bad scalar {raw!r}", field=field)


def encode_vector(vector: np.ndarray, backend: Backend) -> list:
    return [encode_scalar(x, backend) for x in np.asarray(vector).flat]


def decode_vector(raw, backend: Backend, field: str = "vector") -> np.ndarray:
    if not isinstance(raw, list):
        raise DocumentFormatError("expected a list of scalars", field=field)
    values = [decode_scalar(x, backend, field) for x in raw]
    vector = backend.zeros(len(values))
    for i, value in enumerate(values):
        vector[i] = value
    return vector


def encode_matrix(matrix: np.ndarray, backend: Backend) -> list:
    return [encode_vector(row, backend) for row in np.asarray(matrix)]


def _decode_sparse(raw: dict, backend: Backend, field: str, n: Optional[int]) -> np.ndarray:
    """``{"entries": [[i, j, value], ...]}`` with 1-based (row, column)."""
    if n is None:
        raise DocumentFormatError("sparse matrices need the document's n", field=field)
    matrix = backend.zeros((n, n))
    for entry in raw["entries"]:
        if not isinstance(entry, list) or len(entry) != 3:
            raise DocumentFormatError("sparse entries are [row, column, value]", field=field)
        i, j, value = entry
        if not (1 <= int(i) <= n and 1 <= int(j) <= n):
            raise DocumentFormatError(f"entry ({i}, {j}) is outside 1..{n}", field=field)
        matrix[int(i) - 1, int(j) - 1] = matrix[int(i) - 1, int(j) - 1] + decode_scalar(value, backend, field)
    return matrix


def decode_matrix(raw, backend: Backend, field: str = "matrix", n: Optional[int] = None) -> np.ndarray:
    if isinstance(raw, dict) and "entries" in raw:
        return _decode_sparse(raw, backend, field, n)
    if not isinstance(raw, list) or not raw:
        raise DocumentFormatError("expected a non-empty list of rows", field=field)
    rows = [decode_vector(row, backend, field) for row in raw]
    size = len(rows)
    if any(len(row) != size for row in rows):
        raise DocumentFormatError("matrix is not square", field=field)
    if n is not None and size != n:
        raise DocumentFormatError(f"expected a {n}x{n} matrix, got {size}x{size}", field=field)
    return np.array(rows, dtype=backend.dtype)


def _decode_vectors(raw, backend: Backend, field: str, n: Optional[int] = None) -> list:
    if not isinstance(raw, list):
        raise DocumentFormatError("expected a list of vectors", field=field)
    vectors = [decode_vector(v, backend, field) for v in raw]
    if n is not None and any(len(v) != n for v in vectors):
        raise DocumentFormatError(f"vectors must have length {n}", field=field)
    return vectors


def _require(document: dict, field: str):
    if field not in document:
        raise DocumentFormatError("missing field", field=field)
    return document[field]


def _header(kind: str, backend: Backend) -> dict:
    return {"kind": kind, "backend": backend.name}


def document_backend(document: dict, backend: Optional[Backend] = None) -> Backend:
    """The requested backend, else the one the document names, else the default."""
    if backend is not None:
        return backend
    return get_backend(document.get("backend"))


# --- subspaces and lattices -----------------------------------------------


def subspace_to_document(subspace: Subspace) -> dict:
    document = _header("subspace", subspace.backend)
    document["n"] = subspace.ambient_dim
    document["basis"] = [encode_vector(v, subspace.backend) for v in subspace.vectors]
    return document


def subspace_from_document(document: dict, backend: Optional[Backend] = None) -> Subspace:
    backend = document_backend(document, backend)
    n = int(_require(document, "n"))
    return canonical_basis(_decode_vectors(_require(document, "basis"), backend, "basis", n), backend, n)


def lattice_to_document(lattice: Lattice, backend: Backend) -> dict:
    document = _header("lattice", backend)
    document["complete"] = lattice.complete
    document["subspaces"] = [subspace_to_document(s) for s in lattice.subspaces]
    return document


def lattice_from_document(document: dict, backend: Optional[Backend] = None) -> Lattice:
    backend = document_backend(document, backend)
    subspaces = [subspace_from_document(s, backend) for s in _require(document, "subspaces")]
    return Lattice(subspaces, bool(document.get("complete", False)))


# --- preorders and block bases --------------------------------------------


def preorder_from_document(document: dict) -> Preorder:
    n = int(_require(document, "n"))
    pairs = _require(document, "pairs")
    if not all(isinstance(p, list) and len(p) == 2 for p in pairs):
        raise DocumentFormatError("pairs must be [i, j] lists", field="pairs")
    return Preorder.from_pairs(n, pairs, close=bool(document.get("close", False)))


def block_basis_to_document(basis: BlockOrderedBasis) -> dict:
    document = _header("block_basis", basis.backend)
    document["block_sizes"] = list(basis.block_sizes)
    document["vectors"] = [encode_vector(v, basis.backend) for v in basis.vectors]
    return document


def block_basis_from_document(document: dict, backend: Optional[Backend] = None) -> BlockOrderedBasis:
    backend = document_backend(document, backend)
    vectors = _decode_vectors(_require(document, "vectors"), backend, "vectors")
    sizes = _require(document, "block_sizes")
    blocks, start = [], 0
    for size in sizes:
        blocks.append(vectors[start : start + int(size)])
        start += int(size)
    if start != len(vectors):
        raise DocumentFormatError("block sizes do not add up to the vector count", field="block_sizes")
    return BlockOrderedBasis.from_blocks(blocks, backend)


# --- algebras -------------------------------------------------------------


def _family_to_document(provenance: FamilyProvenance, backend: Backend) -> Optional[dict]:
    if provenance is None or provenance.kind == GENERIC:
        return None
    family = {"family": provenance.kind, "n": provenance.n}
    if provenance.kind in (DV, PREORDER_ALG):
        family["vectors"] = [encode_vector(v, backend) for v in provenance.vectors]
    if provenance.kind == PREORDER_ALG:
        family["pairs"] = [[int(i), int(j)] for i, j in provenance.preorder.pairs()]
    if provenance.kind == JV:
        family["block_sizes"] = list(provenance.basis.block_sizes)
        family["vectors"] = [encode_vector(v, backend) for v in provenance.basis.vectors]
    return family


def family_from_document(document: dict, backend: Backend) -> OperatorAlgebra:
    """Rebuild a family algebra (with provenance) from its parameters."""
    kind = _require(document, "family")
    if kind == TN:
        return make_Tn(int(_require(document, "n")), backend)
    if kind == DV:
        return make_Dv(_decode_vectors(_require(document, "vectors"), backend, "vectors"), backend)
    if kind == PREORDER_ALG:
        vectors = _decode_vectors(_require(document, "vectors"), backend, "vectors")
        preorder = Preorder.from_pairs(len(vectors), _require(document, "pairs"))
        return make_preorder_algebra(preorder, vectors, backend)
    if kind == JV:
        return make_Jv(block_basis_from_document(document, backend))
    raise DocumentFormatError(f"unknown family {kind!r}", field="family")


def algebra_to_document(algebra: OperatorAlgebra) -> dict:
    backend = algebra.backend
    document = _header("algebra", backend)
    document["n"] = algebra.n
    document["unital"] = algebra.unital
    document["basis"] = [encode_matrix(b, backend) for b in algebra.basis]
    if algebra.is_compressed:
        document["space"] = [encode_vector(v, backend) for v in algebra.space.vectors]
    family = _family_to_document(algebra.provenance, backend)
    if family is not None:
        document["family"] = family
    return document


def algebra_from_document(document: dict, backend: Optional[Backend] = None) -> OperatorAlgebra:
    """Load an ``algebra``, ``generators`` or ``family`` document.

    Stored bases are re-checked for product stability; generator lists are
    closed; family parameters rebuild the algebra with its provenance.
    """
    backend = document_backend(document, backend)
    kind = document.get("kind")
    try:
        if kind == "family":
            return family_from_document(document, backend)
        n = int(_require(document, "n"))
        unital = bool(document.get("unital", True))
        space = full_space(n, backend)
        if "space" in document:
            space = canonical_basis(_decode_vectors(document["space"], backend, "space", n), backend, n)
        if kind == "generators":
            matrices = [decode_matrix(m, backend, "matrices", n) for m in _require(document, "matrices")]
            return close_algebra(matrices, unital, backend, n, space=space)
        if kind != "algebra":
            raise DocumentFormatError(f"expected one of {ALGEBRA_KINDS}, got {kind!r}", field="kind")
        matrices = [decode_matrix(m, backend, "basis", n) for m in _require(document, "basis")]
        span = span_of_matrices(matrices, backend, n)
        if "family" in document:
            rebuilt = family_from_document(document["family"], backend)
            if rebuilt.dim != span.dim or not all(rebuilt.contains(m) for m in span.basis):
                raise DocumentFormatError("basis does not match the family parameters", field="family")
            return rebuilt
        return algebra_from_span(span, unital, space=space)
    except DocumentFormatError:
        raise
    except OpalgsError as e:
        raise DocumentFormatError(f"invalid algebra: {e}")


def generators_to_document(matrices: Sequence[np.ndarray], unital: bool, backend: Backend) -> dict:
    document = _header("generators", backend)
    document["n"] = int(np.shape(matrices[0])[0])
    document["unital"] = unital
    document["matrices"] = [encode_matrix(m, backend) for m in matrices]
    return document


# --- channels -------------------------------------------------------------


def channel_to_document(channel: KrausChannel, backend: Backend) -> dict:
    document = _header("channel", backend)
    document["n"] = channel.n
    document["kraus"] = [encode_matrix(k, backend) for k in channel.kraus]
    return document


def channels_from_document(document: dict, backend: Optional[Backend] = None) -> list[KrausChannel]:
    """A ``channel`` document or a ``channels`` list of them, each validated."""
    backend = document_backend(document, backend)
    kind = document.get("kind")
    if kind == "channels":
        entries = _require(document, "channels")
    elif kind == "channel":
        entries = [document]
    else:
        raise DocumentFormatError(f"expected a channel document, got {kind!r}", field="kind")
    channels = []
    for entry in entries:
        n = int(_require(entry, "n"))
        kraus = [decode_matrix(k, backend, "kraus", n) for k in _require(entry, "kraus")]
        channels.append(validate_channel(kraus, backend))
    return channels


# --- files ----------------------------------------------------------------


def dumps(document: dict) -> str:
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def read_document(path: Union[str, Path, None]) -> dict:
    """Parse a JSON document from a file, or stdin for ``None`` / ``"-"``."""
    name = "<stdin>" if path in (None, "-") else str(path)
    try:
        if path in (None, "-"):
            document = json.load(sys.stdin)
        else:
            with open(path, "r", encoding="utf-8") as f:
                document = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DocumentFormatError(f"cannot read document: {e}", path=name)
    if not isinstance(document, dict) or "kind" not in document:
        raise DocumentFormatError("document must be an object with a 'kind'", path=name, field="kind")
    logger.debug("Read %s document from %s", document["kind"], name)
    return document


def write_document(document: dict, path: Union[str, Path, None] = None):
    """Write to a file, or stdout for ``None`` / ``"-"``."""
    text = dumps(document)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.debug("Wrote %s document to %s", document.get("kind"), path)
