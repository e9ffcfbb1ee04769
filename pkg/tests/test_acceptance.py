"""
Seeded property suites over the algebra families and the bundled fixtures.

Counts are reduced by default; OPALGS_ACCEPTANCE_FULL=1 runs the full ones.
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.algebra.antisymmetry import (  # noqa: E402
    NO,
    YES,
    is_antisymmetric,
    is_hereditarily_antisymmetric,
    self_adjoint_intersection,
)
from src.algebra.families import (  # noqa: E402
    Preorder,
    enlarged_diagonal_algebra,
    enlarging_unit,
    is_anti_orthogonal,
    is_connected,
    make_Dv,
    make_Jv,
    make_preorder_algebra,
    make_Tn,
    nonorth_graph,
    random_anti_orthogonal_basis,
    random_block_basis,
    random_unitary,
)
from src.algebra.invariant import (  # noqa: E402
    SemiInvariantSpec,
    compress,
    compression_isomorphism_check,
    invariant_lattice,
    is_invariant,
    lattice_pairs,
    natural_projection,
)
from src.algebra.matspan import close_algebra, is_product_stable  # noqa: E402
from src.algebra.triangular import (  # noqa: E402
    BASIS,
    OBSTRUCTION,
    BlockOrderedBasis,
    check_jordanesque,
    jordanesque_basis,
    spectral_idempotent_poly,
    upper_triangular_check,
    upper_triangularize,
)
from src.channels.kraus import (  # noqa: E402
    can_transition,
    reachability_algebra,
    recombine_kraus,
    validate_channel,
)
from src.formats.fixtures import load_fixture  # noqa: E402
from src.linalg.backend import ExactBackend, NumericBackend  # noqa: E402
from src.linalg.subspace import canonical_basis, coordinate_span, is_linearly_independent  # noqa: E402
from src.qposet.chains import (  # noqa: E402
    bottom_up_partition,
    brute_force_max_chain,
    coordinate_antichain_width,
    is_ordered_partition,
    max_quantum_chain,
    power_filtration,
    top_down_partition,
    verify_partition,
    verify_quantum_chain,
)
from src.qposet.dilworth import dilworth_chain_partition, verify_chain_partition  # noqa: E402
from tests.conftest import unit_matrix, vec  # noqa: E402

FULL = os.environ.get("OPALGS_ACCEPTANCE_FULL") == "1"

EXACT = ExactBackend()
NUMERIC = NumericBackend()


def seeds(full: int, reduced: int) -> list[int]:
    return list(range(full if FULL else reduced))


def random_generators(seed: int, max_n: int, backend=EXACT):
    """One or two sparse small-integer matrices."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    matrices = []
    for _ in range(int(rng.integers(1, 3))):
        entries = rng.integers(-2, 3, size=(n, n)) * (rng.random((n, n)) < 0.4)
        matrices.append(backend.asarray(entries.tolist()))
    return n, matrices


def unimodular(rng: np.random.Generator, n: int) -> list:
    """Small-integer S = U L with unit triangular factors, so det S = 1."""
    upper = np.triu(rng.integers(-1, 2, size=(n, n)), 1) + np.eye(n, dtype=int)
    lower = np.tril(rng.integers(-1, 2, size=(n, n)), -1) + np.eye(n, dtype=int)
    return (upper @ lower).tolist()


def nilpotent_generators(seed: int, max_n: int):
    """Two or three strictly upper integer matrices conjugated by a seeded unimodular S."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_n + 1))
    s = EXACT.asarray(unimodular(rng, n))
    s_inv = EXACT.inv(s)
    generators = []
    for _ in range(int(rng.integers(2, 4))):
        entries = np.triu(rng.integers(-2, 3, size=(n, n)) * (rng.random((n, n)) < 0.6), 1)
        generators.append(s @ EXACT.asarray(entries.tolist()) @ s_inv)
    return n, generators


def random_nilpotent(seed: int, max_n: int, backend=EXACT):
    """Closure of conjugated nilpotent generators, retried until dim >= 2.

    The generators are built in exact arithmetic, so both backends see the
    same rational matrices for a given seed.
    """
    offset = 0
    while True:
        n, generators = nilpotent_generators(seed * 101 + offset, max_n)
        if backend is not EXACT:
            generators = [backend.asarray(EXACT.to_complex(g)) for g in generators]
        algebra = close_algebra(generators, False, backend, n)
        if algebra.dim >= 2:
            return algebra
        offset += 1


def has_lower_entries(algebra) -> bool:
    backend = algebra.backend
    return any(
        not backend.is_zero(b[i, j]) for b in algebra.basis for i in range(algebra.n) for j in range(i)
    )


class TestClosureAndAntisymmetry:
    """Closure soundness, T_n antisymmetry and maximality, and the dimension bound."""

    @pytest.mark.parametrize("seed", seeds(100, 10))
    def test_closure_is_sound(self, seed):
        """Test random closures are product stable and idempotent."""
        n, matrices = random_generators(seed, 5)
        algebra = close_algebra(matrices, bool(seed % 2), EXACT, n)
        assert is_product_stable(algebra)
        assert close_algebra(algebra.basis, algebra.unital, EXACT, n) == algebra

    @pytest.mark.parametrize("n", range(1, 7))
    def test_tn_antisymmetric(self, n):
        """Test T_n is antisymmetric with T_n ∩ T_n* = C·I."""
        algebra = make_Tn(n, EXACT)
        assert is_antisymmetric(algebra).antisymmetric
        assert self_adjoint_intersection(algebra).dim == 1

    @pytest.mark.parametrize("n", range(2, 5))
    def test_tn_is_maximal(self, n):
        """Test adding a lower unit or a diagonal unit destroys antisymmetry."""
        algebra = make_Tn(n, EXACT)
        extras = [unit_matrix(EXACT, n, i, j) for i in range(1, n + 1) for j in range(1, i)]
        extras += [unit_matrix(EXACT, n, i, i) for i in range(1, n + 1)]
        for extra in extras:
            bigger = close_algebra(algebra.basis + [extra], True, EXACT, n)
            assert not is_antisymmetric(bigger).antisymmetric

    @pytest.mark.parametrize("seed", seeds(200, 20))
    def test_large_algebras_are_not_antisymmetric(self, seed):
        """Test dim ≥ n²/2 + 1 forces a non-scalar self-adjoint element."""
        n, matrices = random_generators(seed, 4)
        algebra = close_algebra(matrices, True, EXACT, n)
        if algebra.dim >= n * n / 2 + 1:
            assert not is_antisymmetric(algebra).antisymmetric


class TestIdempotents:
    """Polynomial idempotents against block indicator projections."""

    @pytest.mark.parametrize("seed", seeds(50, 5))
    def test_matches_spectral_projection(self, seed):
        """Test the idempotent equals the block indicator and lies in the generated algebra."""
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 4))
        sizes = [int(s) for s in rng.integers(1, 3, size=k)]
        values = [int(v) for v in rng.choice([-3, -2, -1, 1, 2, 3], size=k, replace=False)]
        n = sum(sizes)
        matrix = EXACT.zeros((n, n))
        blocks, start = [], 0
        for size, value in zip(sizes, values):
            for i in range(start, start + size):
                matrix[i, i] = EXACT.scalar(value)
                for j in range(i + 1, start + size):
                    matrix[i, j] = EXACT.scalar(int(rng.integers(-2, 3)))
            blocks.append([EXACT.unit_vector(n, i) for i in range(start, start + size)])
            start += size
        basis = BlockOrderedBasis.from_blocks(blocks, EXACT)
        generated = close_algebra([matrix], False, EXACT, n)
        start = 0
        for size, value in zip(sizes, values):
            oracle = EXACT.zeros((n, n))
            for i in range(start, start + size):
                oracle[i, i] = EXACT.scalar(1)
            projection = spectral_idempotent_poly(matrix, basis, value)
            assert EXACT.arrays_equal(projection, oracle)
            assert generated.contains(projection)
            start += size


def family_suite():
    suite = [make_Tn(3, EXACT), make_Tn(4, EXACT)]
    suite.append(make_Dv(random_anti_orthogonal_basis(3, seed=1, backend=EXACT), EXACT))
    suite.append(make_Jv(random_block_basis([1, 2], seed=2, backend=EXACT)))
    preorder = Preorder.random(3, seed=3)
    suite.append(make_preorder_algebra(preorder, [EXACT.unit_vector(3, i) for i in range(3)], EXACT))
    return suite


class TestDichotomy:
    """Every algebra is triangularized or shows a full subquotient."""

    @pytest.mark.parametrize("index", range(5))
    def test_families(self, index):
        """Test family algebras end in a verified basis or an obstruction."""
        algebra = family_suite()[index]
        result = upper_triangularize(algebra, invariant_lattice(algebra).subspaces, seed=0)
        assert result.status in (BASIS, OBSTRUCTION)
        if result.status == BASIS:
            assert upper_triangular_check(algebra, result.vectors)
        else:
            assert result.compressed.is_full()

    @pytest.mark.parametrize("name", ["ex6-7", "ex6-8"])
    def test_nilpotent_fixtures(self, name):
        """Test nilpotent fixtures are triangularized by search."""
        algebra = load_fixture(name)
        result = upper_triangularize(algebra, seed=0)
        assert result.status == BASIS
        assert upper_triangular_check(algebra, result.vectors)

    def test_preorder_fixture_obstruction(self):
        """Test the preorder fixture compresses onto all of a 2-dimensional space."""
        algebra = load_fixture("ex4-11")
        result = upper_triangularize(algebra, invariant_lattice(algebra).subspaces, seed=0)
        assert result.status == OBSTRUCTION
        assert result.obstruction.dim == 2
        assert result.compressed.dim == 4


class TestDiagonalAlgebras:
    """D_v: connectivity, anti-orthogonality and enlargement."""

    @pytest.mark.parametrize("seed", seeds(150, 15))
    def test_connectivity_and_anti_orthogonality(self, seed):
        """Test antisymmetry follows the graph and hereditary antisymmetry follows anti-orthogonality."""
        rng = np.random.default_rng(seed)
        n = 3 if seed % 3 else 4
        vectors = [NUMERIC.asarray(rng.integers(-1, 2, size=n).astype(float)) for _ in range(n)]
        if not is_linearly_independent(vectors, NUMERIC):
            return
        algebra = make_Dv(vectors, NUMERIC)
        assert is_antisymmetric(algebra).antisymmetric == is_connected(nonorth_graph(vectors, NUMERIC))
        verdict = is_hereditarily_antisymmetric(algebra)
        assert (verdict.status == YES) == is_anti_orthogonal(vectors, NUMERIC).ok

    @pytest.mark.parametrize("seed", seeds(20, 5))
    def test_enlargement_stays_antisymmetric(self, seed):
        """Test D_v plus the chosen unit is a larger antisymmetric algebra."""
        rng = np.random.default_rng(seed)
        vectors = [v / np.linalg.norm(v) for v in rng.standard_normal((3, 3)).astype(complex)]
        pair = enlarging_unit(vectors, NUMERIC)
        bigger = enlarged_diagonal_algebra(vectors, pair, NUMERIC)
        assert bigger.dim > make_Dv(vectors, NUMERIC).dim
        assert is_antisymmetric(bigger).antisymmetric


class TestJordanesqueRoundTrip:
    """J_v for suitable and unsuitable block bases."""

    SIZES = ([1, 2], [2, 1], [1, 1, 1], [2, 2])

    @pytest.mark.parametrize("seed", seeds(25, 2))
    def test_suitable_bases(self, seed):
        """Test suitable J_v is hereditarily antisymmetric and rebuilt in Jordanesque form."""
        sizes = self.SIZES[seed % len(self.SIZES)]
        algebra = make_Jv(random_block_basis(sizes, seed=seed, backend=EXACT))
        assert is_hereditarily_antisymmetric(algebra).status == YES
        basis = jordanesque_basis(algebra, seed=seed)
        assert all(check_jordanesque(b, basis).ok for b in algebra.basis)

    @pytest.mark.parametrize("seed", seeds(25, 2))
    def test_unsuitable_bases(self, seed):
        """Test a violation of the nonorthogonality conditions gives a checked counterexample."""
        sizes = self.SIZES[seed % len(self.SIZES)]
        algebra = make_Jv(random_block_basis(sizes, seed=seed, backend=EXACT, suitable=False))
        verdict = is_hereditarily_antisymmetric(algebra)
        assert verdict.status == NO
        counterexample = verdict.counterexample
        assert is_invariant(algebra, counterexample.e1)
        assert is_invariant(algebra, counterexample.e2)
        spec = SemiInvariantSpec(counterexample.e1, counterexample.e2)
        witness = counterexample.compressed_witness
        assert compress(algebra, spec, validate=False).contains(witness)
        assert EXACT.arrays_equal(witness, EXACT.adjoint(witness))


class TestMirskyAndDilworth:
    """Chains, antichain partitions and chain partitions of nilpotent algebras."""

    @pytest.mark.parametrize("seed", seeds(50, 8))
    def test_mirsky(self, seed):
        """Test the longest chain, both partitions and the nilpotency index agree."""
        algebra = random_nilpotent(seed, 6)
        r = power_filtration(algebra).nilpotency_index
        assert max_quantum_chain(algebra, seed=seed).length == r
        assert top_down_partition(algebra).size == r
        assert bottom_up_partition(algebra).size == r
        if algebra.n <= 5:
            assert brute_force_max_chain(algebra) == r

    def test_generator_covers_non_coordinate_algebras(self):
        """Test the seeded algebras include dimension >= 3 and non-triangular bases."""
        algebras = [random_nilpotent(seed, 6) for seed in seeds(50, 8)]
        assert any(a.dim >= 3 for a in algebras)
        assert any(has_lower_entries(a) for a in algebras)

    @pytest.mark.parametrize("seed", seeds(20, 6))
    def test_backends_agree(self, seed):
        """Test exact and numeric runs on the same rational generators give the same layers."""
        exact_layers = power_filtration(random_nilpotent(seed, 7)).layer_dims
        algebra = random_nilpotent(seed, 7, NUMERIC)
        assert power_filtration(algebra).layer_dims == exact_layers
        assert top_down_partition(algebra).size == len(exact_layers)
        assert bottom_up_partition(algebra).size == len(exact_layers)

    def test_chain_fixture(self, monkeypatch):
        """Test the 8-dimensional fixture: dim 6, r = 4, and an unordered partition of size 3."""
        algebra = load_fixture("ex6-7")
        assert algebra.dim == 6
        assert power_filtration(algebra).nilpotency_index == 4
        chain = verify_quantum_chain(
            algebra,
            [
                vec(EXACT, 1, 0, 0, 0, 0, 0, 0, 0),
                vec(EXACT, 0, 0, 1, 0, 0, 1, 0, 0),
                vec(EXACT, 0, 0, 0, 1, 0, 0, 1, 0),
                vec(EXACT, 0, 0, 0, 0, 1, 0, 0, 1),
            ],
        )
        assert chain is not None
        parts = [coordinate_span(8, idx, EXACT) for idx in ([0, 1], [2, 3, 4], [5, 6, 7])]
        assert verify_partition(algebra, parts)
        assert not is_ordered_partition(algebra, parts)
        monkeypatch.setattr("src.settings.BRUTE_FORCE_GUARD", 8)
        assert brute_force_max_chain(algebra) == 4

    @pytest.mark.parametrize("seed", seeds(50, 8))
    def test_dilworth(self, seed):
        """Test chain partitions stay within the widest top-down layer."""
        algebra = random_nilpotent(seed, 6, NUMERIC)
        chains = dilworth_chain_partition(algebra, seed=seed)
        assert verify_chain_partition(algebra, chains)
        assert len(chains) <= max(power_filtration(algebra).layer_dims)

    def test_wide_antichain_with_two_chains(self):
        """Test span{E14, E24, E34}: width 3, two chains."""
        algebra = load_fixture("ex6-8")
        assert coordinate_antichain_width(algebra) == 3
        assert len(dilworth_chain_partition(algebra, seed=0)) == 2


class TestCompressionIsomorphism:
    """Companion compressions are similar to the orthogonal ones."""

    @pytest.mark.parametrize("seed", seeds(50, 6))
    def test_tilted_companions(self, seed):
        """Test a companion tilted into E2 gives an isomorphic compression."""
        rng = np.random.default_rng(seed)
        algebras = [
            make_Tn(4, EXACT),
            make_Dv(random_anti_orthogonal_basis(3, seed=seed, backend=EXACT), EXACT),
            make_Jv(random_block_basis([1, 2], seed=seed, backend=EXACT)),
        ]
        algebra = algebras[seed % 3]
        pairs = list(lattice_pairs(invariant_lattice(algebra).subspaces))
        e1, e2 = pairs[int(rng.integers(len(pairs)))]
        spec = SemiInvariantSpec(e1, e2)
        tilted = []
        for v in spec.e.vectors:
            shift = EXACT.zeros(algebra.n)
            for g in e2.vectors:
                shift = shift + g * EXACT.scalar(int(rng.integers(-2, 3)))
            tilted.append(v + shift)
        companion = natural_projection(spec, canonical_basis(tilted, EXACT, algebra.n))
        assert compression_isomorphism_check(algebra, spec, companion)


class TestChannelAcceptance:
    """Kraus recombination invariance and block-diagonal channels."""

    @pytest.mark.parametrize("seed", seeds(20, 4))
    def test_recombination_invariance(self, seed):
        """Test unitary mixes of Kraus operators keep the reachability algebra."""
        rng = np.random.default_rng(seed)
        x = unit_matrix(EXACT, 2, 1, 2) + unit_matrix(EXACT, 2, 2, 1)
        damping = unit_matrix(EXACT, 2, 1, 1) * EXACT.scalar("3/5")
        kraus = [damping, unit_matrix(EXACT, 2, 1, 2) * EXACT.scalar("3/5"), x * EXACT.scalar("4/5")]
        if seed % 2 == 0:
            kraus = [unit_matrix(EXACT, 2, 1, 1), unit_matrix(EXACT, 2, 1, 2)]
        channel = validate_channel(kraus, EXACT)
        u = random_unitary(len(channel.kraus), rng, EXACT)
        mixed = recombine_kraus(channel, u, EXACT)
        original = reachability_algebra([channel], EXACT).algebra
        recombined = reachability_algebra([mixed], EXACT).algebra
        assert recombined.dim == original.dim
        assert recombined == original

    def test_block_diagonal_channels_do_not_cross(self):
        """Test block-diagonal Kraus operators never connect the blocks."""
        x = unit_matrix(EXACT, 3, 1, 2) + unit_matrix(EXACT, 3, 2, 1)
        third = unit_matrix(EXACT, 3, 3, 3)
        flip = (x + third) * EXACT.scalar("4/5")
        channel = validate_channel([flip, EXACT.eye(3) * EXACT.scalar("3/5")], EXACT)
        reach = reachability_algebra([channel], EXACT)
        assert can_transition(reach, vec(EXACT, 1, 0, 0), vec(EXACT, 0, 1, 0))
        assert not can_transition(reach, vec(EXACT, 1, 0, 0), vec(EXACT, 0, 0, 1))
        assert not can_transition(reach, vec(EXACT, 0, 0, 1), vec(EXACT, 1, 1, 0))
