"""
Tests for antisymmetry, hereditary antisymmetry and projection finding.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.algebra.antisymmetry import (  # noqa: E402
    NO,
    UNKNOWN,
    YES,
    find_nonscalar_projection,
    hermitian_part,
    is_antisymmetric,
    is_hereditarily_antisymmetric,
    self_adjoint_intersection,
)
from src.algebra.families import make_Dv, make_Tn  # noqa: E402
from src.algebra.invariant import compress, is_invariant, make_spec  # noqa: E402
from src.algebra.matspan import close_algebra, full_algebra  # noqa: E402
from src.exceptions import NotInvariantError  # noqa: E402
from src.formats.fixtures import load_fixture  # noqa: E402
from src.linalg.subspace import coordinate_span  # noqa: E402
from tests.conftest import unit_matrix  # noqa: E402


def diagonal_algebra(backend, n=3):
    return make_Dv([backend.unit_vector(n, i) for i in range(n)], backend)


class TestAntisymmetry:
    """Tests for is_antisymmetric."""

    def test_tn_is_antisymmetric(self, backend):
        """Test T_n only has scalar self-adjoint elements."""
        report = is_antisymmetric(make_Tn(4, backend))
        assert report.antisymmetric
        assert report.witness is None

    def test_diagonal_algebra_is_not(self, backend):
        """Test the witness is self-adjoint, in A and not a multiple of I."""
        algebra = diagonal_algebra(backend)
        report = is_antisymmetric(algebra)
        assert not report.antisymmetric
        witness = report.witness
        assert algebra.contains(witness)
        assert backend.arrays_equal(witness, backend.adjoint(witness))
        assert not close_algebra([backend.eye(3)], False, backend).contains(witness)

    def test_connected_dv_is_antisymmetric(self):
        """Test D_v of a connected basis has no non-scalar self-adjoint element."""
        assert is_antisymmetric(load_fixture("ex4-7")).antisymmetric

    def test_self_adjoint_intersection(self, backend):
        """Test A ∩ A* of M_2 is M_2 and of T_3 is C·I."""
        assert self_adjoint_intersection(full_algebra(2, backend)).dim == 4
        assert self_adjoint_intersection(make_Tn(3, backend)).dim == 1

    def test_hermitian_part(self, backend):
        """Test the self-adjoint elements have real dimension dim(A ∩ A*)."""
        parts = hermitian_part(full_algebra(2, backend))
        assert len(parts) == 4
        for part in parts:
            assert backend.arrays_equal(part, backend.adjoint(part))
        assert len(hermitian_part(make_Tn(3, backend))) == 1

    def test_compressed_unit_is_scalar(self, backend):
        """Test the unit of a compression counts as scalar."""
        algebra = make_Tn(3, backend)
        spec = make_spec(algebra, coordinate_span(3, [0, 1], backend))
        assert is_antisymmetric(compress(algebra, spec)).antisymmetric


class TestProjections:
    """Tests for find_nonscalar_projection."""

    def test_found_in_diagonal_algebra(self, backend):
        """Test a diagonal algebra has a non-trivial idempotent."""
        algebra = diagonal_algebra(backend)
        projection = find_nonscalar_projection(algebra, seed=0, sample_size=5)
        assert projection is not None
        assert backend.arrays_equal(projection @ projection, projection)
        assert algebra.contains(projection)
        assert not backend.arrays_equal(projection, backend.eye(3))

    def test_absent_in_tn(self, backend):
        """Test T_n elements have one eigenvalue, so no projection is found."""
        assert find_nonscalar_projection(make_Tn(3, backend), seed=0, sample_size=5) is None

    def test_non_unital_projection(self, exact):
        """Test a non-unital algebra's own unit counts as non-trivial when it is not I."""
        algebra = close_algebra([unit_matrix(exact, 2, 1, 1)], False, exact)
        projection = find_nonscalar_projection(algebra, seed=0, sample_size=2)
        assert exact.arrays_equal(projection, unit_matrix(exact, 2, 1, 1))


class TestHereditary:
    """Tests for is_hereditarily_antisymmetric."""

    def test_tn_yes(self, backend):
        """Test every subquotient of T_n is antisymmetric."""
        verdict = is_hereditarily_antisymmetric(make_Tn(3, backend))
        assert verdict.status == YES
        assert verdict.lattice_complete

    def test_path_dv_no(self):
        """Test the connected but not anti-orthogonal basis fails on a subquotient."""
        algebra = load_fixture("ex4-7")
        verdict = is_hereditarily_antisymmetric(algebra)
        assert verdict.status == NO
        counterexample = verdict.counterexample
        assert is_invariant(algebra, counterexample.e1)
        assert is_invariant(algebra, counterexample.e2)
        assert counterexample.e1.dim - counterexample.e2.dim >= 2

    def test_suitable_jv_yes(self):
        """Test the bundled Jordanesque algebra is hereditarily antisymmetric."""
        assert is_hereditarily_antisymmetric(load_fixture("ex5-6")).status == YES

    def test_discovered_lattice_gives_unknown(self, exact):
        """Test an incomplete lattice cannot certify yes."""
        shift = unit_matrix(exact, 3, 1, 2) + unit_matrix(exact, 3, 2, 3)
        algebra = close_algebra([shift], True, exact)
        assert is_hereditarily_antisymmetric(algebra).status == UNKNOWN

    def test_supplied_lattice_must_be_invariant(self, backend):
        """Test a non-invariant lattice entry is rejected."""
        algebra = make_Tn(3, backend)
        with pytest.raises(NotInvariantError):
            is_hereditarily_antisymmetric(algebra, [coordinate_span(3, [2], backend)], True)

    def test_supplied_complete_lattice(self, backend):
        """Test a caller-certified lattice is used as given."""
        algebra = make_Tn(3, backend)
        flag = [coordinate_span(3, range(m), backend) for m in range(1, 3)]
        assert is_hereditarily_antisymmetric(algebra, flag, True).status == YES
