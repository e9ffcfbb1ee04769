"""
Tests for analysis reports and certificate re-checking.
"""

import copy
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.algebra.antisymmetry import is_antisymmetric  # noqa: E402
from src.algebra.families import make_Dv, make_Tn  # noqa: E402
from src.algebra.invariant import invariant_lattice  # noqa: E402
from src.algebra.triangular import upper_triangularize  # noqa: E402
from src.exceptions import DocumentFormatError  # noqa: E402
from src.formats.documents import algebra_to_document, encode_matrix  # noqa: E402
from src.formats.fixtures import load_fixture  # noqa: E402
from src.formats.reports import (  # noqa: E402
    NEGATIVE,
    UNKNOWN,
    VERIFIERS,
    Report,
    certificate,
    digest_file,
    digest_text,
    verify_report,
)
from src.linalg.subspace import coordinate_span  # noqa: E402
from src.qposet.chains import max_quantum_chain, top_down_partition  # noqa: E402
from tests.conftest import unit_matrix  # noqa: E402


def report_for(algebra, command="test"):
    report = Report(command, algebra.backend.name, 0)
    report.algebra = algebra_to_document(algebra)
    return report


class TestReport:
    """Tests for the Report value type."""

    def test_exit_codes(self):
        """Test only negative verdicts exit with 1."""
        report = Report("antisym", "exact", 0)
        assert report.exit_code == 0
        report.detail = UNKNOWN
        assert report.exit_code == 0
        report.detail = NEGATIVE
        assert report.exit_code == 1

    def test_body_excludes_timing(self):
        """Test the body is identical across runs with different timings."""
        a = Report("antisym", "exact", 0, {"b": "2", "a": "1"}, timing_ms=3.0)
        b = Report("antisym", "exact", 0, {"a": "1", "b": "2"}, timing_ms=9.0)
        assert a.body() == b.body()
        assert list(a.body()["inputs"]) == ["a", "b"]
        assert "timing_ms" not in a.to_document(include_timing=False)

    def test_from_document(self):
        """Test a report document reloads."""
        report = Report("hereditary", "numeric", 4, verdicts={"status": "yes"})
        loaded = Report.from_document(report.to_document())
        assert loaded.command == "hereditary"
        assert loaded.seed == 4
        assert loaded.verdicts == {"status": "yes"}

    def test_from_wrong_document(self):
        """Test other documents are refused."""
        with pytest.raises(DocumentFormatError):
            Report.from_document({"kind": "algebra"})
        with pytest.raises(DocumentFormatError):
            Report.from_document({"kind": "report", "backend": "exact", "seed": 0})

    def test_digests(self, tmp_path):
        """Test file and text digests agree."""
        path = tmp_path / "input.json"
        path.write_text("{}", encoding="utf-8")
        assert digest_file(path) == digest_text("{}")


class TestVerification:
    """Tests for verify_report."""

    def test_antisymmetric_certificate(self, exact):
        """Test an antisymmetric verdict re-checks from the recorded A ∩ A*."""
        report = report_for(make_Tn(3, exact))
        report.certificates.append(certificate("antisymmetric", exact, intersection=[exact.eye(3)]))
        result = verify_report(report.to_document())
        assert result.ok
        assert result.checked == 1

    def test_antisymmetric_certificate_must_be_complete(self, exact):
        """Test the certificate fails when A ∩ A* is larger than recorded."""
        algebra = make_Dv([exact.unit_vector(2, i) for i in range(2)], exact)
        report = report_for(algebra)
        report.certificates.append(certificate("antisymmetric", exact, intersection=[exact.eye(2)]))
        assert not verify_report(report).ok

    def test_antisymmetric_certificate_rejects_non_scalar(self, exact):
        """Test a recorded non-scalar element fails the check."""
        algebra = make_Dv([exact.unit_vector(2, i) for i in range(2)], exact)
        report = report_for(algebra)
        recorded = [exact.eye(2), unit_matrix(exact, 2, 1, 1)]
        report.certificates.append(certificate("antisymmetric", exact, intersection=recorded))
        assert not verify_report(report).ok

    def test_self_adjoint_witness(self, exact):
        """Test a diagonal witness passes and a tampered one fails."""
        algebra = make_Dv([exact.unit_vector(2, i) for i in range(2)], exact)
        report = report_for(algebra)
        report.certificates.append(
            certificate("self_adjoint_witness", exact, matrix=is_antisymmetric(algebra).witness)
        )
        assert verify_report(report).ok

        tampered = copy.deepcopy(report.to_document())
        tampered["certificates"][0]["matrix"] = encode_matrix(unit_matrix(exact, 2, 1, 2), exact)
        result = verify_report(tampered)
        assert not result.ok
        assert result.failures[0][1] == "self_adjoint_witness"

    def test_invariant_subspace(self, exact):
        """Test invariant subspace certificates."""
        report = report_for(make_Tn(3, exact))
        report.certificates.append(certificate("invariant_subspace", exact, subspace=coordinate_span(3, [0], exact)))
        report.certificates.append(certificate("invariant_subspace", exact, subspace=coordinate_span(3, [1], exact)))
        result = verify_report(report)
        assert not result.ok
        assert [f[0] for f in result.failures] == [1]

    def test_obstruction_certificate(self):
        """Test a full subquotient certificate re-checks."""
        algebra = load_fixture("ex4-11")
        result = upper_triangularize(algebra, invariant_lattice(algebra).subspaces, seed=0)
        report = report_for(algebra, "triangularize")
        spec = result.obstruction
        report.certificates.append(certificate("obstruction", algebra.backend, e1=spec.e1, e2=spec.e2))
        assert verify_report(report).ok

    def test_triangular_basis(self, exact):
        """Test a triangularizing basis passes and its reversal fails."""
        algebra = make_Tn(3, exact)
        vectors = upper_triangularize(algebra, seed=0).vectors
        report = report_for(algebra)
        report.certificates.append(certificate("triangular_basis", exact, vectors=vectors))
        report.certificates.append(certificate("triangular_basis", exact, vectors=list(reversed(vectors))))
        result = verify_report(report)
        assert [f[0] for f in result.failures] == [1]

    def test_chain_certificates(self):
        """Test chain, partition and nilpotency certificates on the chain fixture."""
        algebra = load_fixture("ex6-7")
        backend = algebra.backend
        report = report_for(algebra, "qposet mirsky")
        report.certificates.append(certificate("nilpotency", backend, index=4))
        report.certificates.append(certificate("quantum_chain", backend, chain=max_quantum_chain(algebra, seed=0)))
        report.certificates.append(
            certificate("antichain_partition", backend, parts=top_down_partition(algebra).parts, ordered=True)
        )
        assert verify_report(report).ok

    def test_wrong_nilpotency_index(self):
        """Test a wrong index fails."""
        algebra = load_fixture("ex6-8")
        report = report_for(algebra)
        report.certificates.append(certificate("nilpotency", algebra.backend, index=3))
        assert not verify_report(report).ok

    def test_unknown_certificate_type(self, exact):
        """Test unknown types are failures."""
        report = report_for(make_Tn(2, exact))
        report.certificates.append({"type": "mystery"})
        result = verify_report(report)
        assert not result.ok
        assert result.failures[0][2] == "unknown certificate type"

    def test_malformed_certificate(self, exact):
        """Test missing fields are reported as malformed."""
        report = report_for(make_Tn(2, exact))
        report.certificates.append({"type": "invariant_subspace"})
        result = verify_report(report)
        assert result.failures[0][2].startswith("malformed")

    def test_idempotent_without_algebra(self, exact):
        """Test idempotent certificates need no algebra."""
        report = Report("idempotent", "exact", 0)
        matrix = exact.asarray([[2, 1], [0, 2]])
        report.certificates.append(
            certificate("idempotent", exact, matrix=matrix, value="2", projection=exact.eye(2))
        )
        assert verify_report(report).ok

    def test_idempotent_for_one_eigenvalue(self, exact):
        """Test the idempotent of diag value 1 in [[1, 1], [0, 2]] is accepted."""
        report = Report("idempotent", "exact", 0)
        matrix = exact.asarray([[1, 1], [0, 2]])
        projection = exact.asarray([[1, -1], [0, 0]])
        report.certificates.append(
            certificate("idempotent", exact, matrix=matrix, value="1", projection=projection)
        )
        assert verify_report(report).ok

    @pytest.mark.parametrize("projection", [[[0, 0], [0, 0]], [[1, 0], [0, 1]], [[0, 1], [0, 1]]])
    def test_idempotent_of_wrong_eigenvalue_rejected(self, exact, projection):
        """Test 0, I and the other eigenvalue's idempotent do not certify the value 1."""
        report = Report("idempotent", "exact", 0)
        matrix = exact.asarray([[1, 1], [0, 2]])
        report.certificates.append(
            certificate("idempotent", exact, matrix=matrix, value="1", projection=exact.asarray(projection))
        )
        result = verify_report(report)
        assert not result.ok
        assert result.failures[0][2] == "check failed"

    def test_idempotent_needs_value(self, exact):
        """Test a certificate without the eigenvalue is malformed."""
        report = Report("idempotent", "exact", 0)
        report.certificates.append(
            certificate("idempotent", exact, matrix=exact.eye(2), projection=exact.eye(2))
        )
        assert verify_report(report).failures[0][2].startswith("malformed")

    def test_certificate_needs_algebra(self, exact):
        """Test algebra certificates fail when the report has none."""
        report = Report("antisym", "exact", 0)
        report.certificates.append(certificate("antisymmetric", exact))
        assert not verify_report(report).ok

    def test_every_verifier_is_registered(self):
        """Test the verifier table covers the certificate types the commands write."""
        for kind in ("hereditary_counterexample", "jordanesque_basis", "chain_partition", "transition"):
            assert kind in VERIFIERS
