"""
Bundled algebra fixtures.

The worked examples ship as JSON documents under ``fixtures/``; ``tn-<n>``
is generated on demand.
"""

import json
import logging
import re
from importlib import resources

from src.exceptions import DocumentFormatError
from src.formats.documents import algebra_from_document
from src.linalg.backend import Backend

logger = logging.getLogger(__name__)

BUNDLED = ("ex4-7", "ex4-11", "ex5-6", "ex6-7", "ex6-8")

_TN_NAME = re.compile(r"^tn-(\d+)$")


def fixture_names() -> list[str]:
    return list(BUNDLED) + ["tn-<n>"]


def fixture_document(name: str) -> dict:
    """The stored document for ``name`` (``tn-<n>`` as a family document)."""
    match = _TN_NAME.match(name)
    if match:
        return {"kind": "family", "backend": "exact", "family": "Tn", "n": int(match.group(1))}
    if name not in BUNDLED:
        raise DocumentFormatError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    path = resources.files("src.formats").joinpath("fixtures").joinpath(f"{name}.json")
    return json.loads(path.read_text(encoding="utf-8"))


def load_fixture(name: str, backend: Backend = None):
    """Fixture ``name`` as an OperatorAlgebra in ``backend`` (the document's own by default)."""
    document = fixture_document(name)
    algebra = algebra_from_document(document, backend)
    logger.debug("Loaded fixture %s: %r", name, algebra)
    return algebra
