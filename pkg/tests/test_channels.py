"""
Tests for Kraus channels and transition analysis.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.channels.kraus import (  # noqa: E402
    can_transition,
    can_transition_composite,
    normalize_kraus,
    reachability_algebra,
    reachable_subspace,
    recombine_kraus,
    transition_witness,
    trap_subspaces,
    validate_channel,
)
from src.exceptions import (  # noqa: E402
    CPTPViolationError,
    DimensionMismatchError,
    PreconditionError,
)
from src.linalg.subspace import coordinate_span  # noqa: E402
from tests.conftest import unit_matrix, vec  # noqa: E402


def amplitude_damping(backend):
    """Full decay |2> -> |1>: Kraus operators E11 and E12."""
    return validate_channel([unit_matrix(backend, 2, 1, 1), unit_matrix(backend, 2, 1, 2)], backend)


def bit_flip(backend):
    """Mixture of I and X with weights 9/25 and 16/25."""
    x = unit_matrix(backend, 2, 1, 2) + unit_matrix(backend, 2, 2, 1)
    return validate_channel([backend.eye(2) * backend.scalar("3/5"), x * backend.scalar("4/5")], backend)


class TestValidation:
    """Tests for channel validation and normalization."""

    def test_valid_channels(self, backend):
        """Test trace preserving Kraus sets are accepted."""
        channel = amplitude_damping(backend)
        assert channel.n == 2
        assert channel.cptp_residual == pytest.approx(0.0, abs=1e-12)
        assert len(bit_flip(backend).kraus) == 2

    def test_cptp_violation(self, backend):
        """Test a lone projection is not trace preserving."""
        with pytest.raises(CPTPViolationError) as info:
            validate_channel([unit_matrix(backend, 2, 1, 1)], backend)
        assert info.value.residual == pytest.approx(1.0)

    def test_empty_channel(self, exact):
        """Test at least one Kraus matrix is needed."""
        with pytest.raises(PreconditionError):
            validate_channel([], exact)

    def test_mixed_sizes(self, exact):
        """Test Kraus matrices must share a size."""
        with pytest.raises(DimensionMismatchError):
            validate_channel([exact.eye(2), exact.eye(3)], exact)

    def test_normalize_kraus(self, numeric):
        """Test normalization makes an arbitrary family trace preserving."""
        kraus = normalize_kraus([np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [0.0, 0.0]])], numeric)
        channel = validate_channel(kraus, numeric)
        assert channel.cptp_residual < 1e-9

    def test_normalize_kraus_needs_numeric(self, exact):
        """Test the inverse square root is refused in exact mode."""
        with pytest.raises(PreconditionError):
            normalize_kraus([exact.eye(2)], exact)

    def test_recombine(self, exact):
        """Test a unitary mix of Kraus operators is again a channel with the same algebra."""
        channel = bit_flip(exact)
        u = exact.asarray([["3/5", "4/5"], ["-4/5", "3/5"]])
        mixed = recombine_kraus(channel, u, exact)
        assert len(mixed.kraus) == 2
        original = reachability_algebra([channel], exact).algebra
        assert reachability_algebra([mixed], exact).algebra == original

    def test_recombine_needs_unitary(self, exact):
        """Test a non-unitary mix is rejected."""
        with pytest.raises(PreconditionError):
            recombine_kraus(bit_flip(exact), exact.asarray([[1, 1], [0, 1]]), exact)

    def test_recombine_size(self, exact):
        """Test the mix must match the Kraus count."""
        with pytest.raises(DimensionMismatchError):
            recombine_kraus(bit_flip(exact), exact.eye(3), exact)


class TestTransitions:
    """Tests for reachability and traps."""

    def test_reachability_algebra(self, backend):
        """Test amplitude damping generates the upper triangular 2x2 matrices."""
        reach = reachability_algebra([amplitude_damping(backend)], backend)
        assert reach.algebra.dim == 3
        assert reach.channel_count == 1

    def test_decay_is_one_way(self, backend):
        """Test |2> can reach |1> and not the reverse."""
        reach = reachability_algebra([amplitude_damping(backend)], backend)
        e1, e2 = vec(backend, 1, 0), vec(backend, 0, 1)
        assert can_transition(reach, e2, e1)
        assert not can_transition(reach, e1, e2)
        assert transition_witness(reach, e1, e2) is None

    def test_bit_flip_reaches_both(self, backend):
        """Test the bit flip connects the two basis states."""
        reach = reachability_algebra([bit_flip(backend)], backend)
        assert can_transition(reach, vec(backend, 1, 0), vec(backend, 0, 1))
        assert reachable_subspace(reach, vec(backend, 1, 0)).is_full()

    def test_combined_channels(self, exact):
        """Test composing both channels lets |1> escape."""
        reach = reachability_algebra([amplitude_damping(exact), bit_flip(exact)], exact)
        assert reach.channel_count == 2
        assert reach.algebra.is_full()
        assert can_transition(reach, vec(exact, 1, 0), vec(exact, 0, 1))

    def test_zero_vector(self, exact):
        """Test states must be nonzero."""
        reach = reachability_algebra([bit_flip(exact)], exact)
        with pytest.raises(PreconditionError):
            can_transition(reach, vec(exact, 0, 0), vec(exact, 1, 0))

    def test_wrong_length(self, exact):
        """Test states must live in C^n."""
        reach = reachability_algebra([bit_flip(exact)], exact)
        with pytest.raises(DimensionMismatchError):
            can_transition(reach, vec(exact, 1, 0, 0), vec(exact, 1, 0))

    def test_channels_must_share_size(self, exact):
        """Test channels on different spaces are rejected."""
        other = validate_channel([exact.eye(3)], exact)
        with pytest.raises(DimensionMismatchError):
            reachability_algebra([bit_flip(exact), other], exact)
        with pytest.raises(PreconditionError):
            reachability_algebra([], exact)

    def test_composite_system(self, exact):
        """Test an ancilla in C^2 does not change which flips are possible."""
        reach = reachability_algebra([bit_flip(exact)], exact)
        v = vec(exact, 1, 0, 0, 0)  # e1 ⊗ e1
        assert can_transition_composite(reach, v, vec(exact, 0, 0, 1, 0), 2)  # e2 ⊗ e1
        assert not can_transition_composite(reach, v, vec(exact, 0, 0, 0, 1), 2)  # e2 ⊗ e2

    def test_traps(self, exact):
        """Test the ground state is a trap under amplitude damping."""
        reach = reachability_algebra([amplitude_damping(exact)], exact)
        traps = trap_subspaces(reach, budget=10, seed=0)
        assert coordinate_span(2, [0], exact) in list(traps)
