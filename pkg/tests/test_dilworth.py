"""
Tests for partitioning C^n into quantum chains.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.algebra.matspan import close_algebra  # noqa: E402
from src.formats.fixtures import load_fixture  # noqa: E402
from src.qposet.chains import QuantumChain, power_filtration, verify_quantum_chain  # noqa: E402
from src.qposet.dilworth import (  # noqa: E402
    dilworth_chain_partition,
    prune_chains,
    verify_chain_partition,
)
from tests.conftest import unit_matrix, vec  # noqa: E402


class TestDilworth:
    """Tests for dilworth_chain_partition."""

    def test_single_shift_is_one_chain(self, backend):
        """Test the 3x3 shift algebra needs one chain."""
        units = [unit_matrix(backend, 3, 1, 2), unit_matrix(backend, 3, 2, 3)]
        algebra = close_algebra(units, False, backend)
        chains = dilworth_chain_partition(algebra, seed=0)
        assert len(chains) == 1
        assert chains[0].length == 3
        assert verify_chain_partition(algebra, chains)

    def test_wide_antichain_two_chains(self):
        """Test span{E14, E24, E34} is covered by two chains despite an antichain of dimension 3."""
        algebra = load_fixture("ex6-8")
        chains = dilworth_chain_partition(algebra, seed=0)
        assert len(chains) == 2
        assert sum(c.length for c in chains) == 4
        assert verify_chain_partition(algebra, chains)

    def test_fixture_within_widest_layer(self):
        """Test the 8-dimensional fixture uses at most max_i dim E_i chains."""
        algebra = load_fixture("ex6-7")
        chains = dilworth_chain_partition(algebra, seed=0)
        assert len(chains) <= max(power_filtration(algebra).layer_dims)
        assert verify_chain_partition(algebra, chains)

    def test_numeric_backend(self, numeric):
        """Test the numeric backend partitions the same algebra."""
        units = [unit_matrix(numeric, 4, i, 4) for i in range(1, 4)]
        algebra = close_algebra(units, False, numeric)
        chains = dilworth_chain_partition(algebra, seed=0)
        assert verify_chain_partition(algebra, chains)
        assert len(chains) <= 3


class TestPruning:
    """Tests for pruning chains to a basis."""

    def test_prune_drops_dependent_vectors(self, exact):
        """Test repeated vectors are dropped and witnesses composed."""
        units = [unit_matrix(exact, 3, 1, 2), unit_matrix(exact, 3, 2, 3)]
        algebra = close_algebra(units, False, exact)
        first = verify_quantum_chain(algebra, [vec(exact, 0, 0, 1), vec(exact, 0, 1, 0)])
        second = verify_quantum_chain(algebra, [vec(exact, 0, 1, 0), vec(exact, 1, 0, 0)])
        pruned = prune_chains([first, second], algebra)
        assert [c.length for c in pruned] == [2, 1]
        assert verify_chain_partition(algebra, pruned)

    def test_partition_needs_basis(self, exact):
        """Test chains that do not span C^n fail verification."""
        units = [unit_matrix(exact, 2, 1, 2)]
        algebra = close_algebra(units, False, exact)
        assert not verify_chain_partition(algebra, [QuantumChain([vec(exact, 0, 1)], [])])
