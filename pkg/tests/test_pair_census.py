"""Tests for the exhaustive and Monte-Carlo pair censuses."""

from collections import Counter
from unittest.mock import patch

import numpy as np
import pytest

from src.helpers.CayleyCriterion import ngon_condition
from src.helpers.Census import CensusError
from src.helpers.FiniteField import field_new
from src.helpers.PairCensus import (
    GlobalCensus,
    PairCounts,
    divisors_in_range,
    exhaustive_counts,
    exhaustive_pair_census,
    geometric_agreement,
    geometric_cross_check,
    monte_carlo_census,
    monte_carlo_counts,
    normalized_conic_uppers,
    tau_table,
)
from src.helpers.Pencil import (
    DicksonTag,
    c_alpha,
    dickson_generators,
    is_transversal,
    nonsingular_members,
    valid_param_enumerator,
)
from src.helpers.PonceletChain import OutcomeKind, find_nondegenerate_ngon, start_outcomes


class TestHelpers:
    """Test divisor ranges, count merging and census records."""

    @pytest.mark.parametrize("n, divisors", [(3, []), (6, [3]), (7, []), (8, [4]), (9, [3])])
    def test_divisors_in_range(self, n, divisors):
        """Proper divisors between 3 and n − 1."""
        assert divisors_in_range(n) == divisors

    def test_merge_adds_counts(self):
        """Merged tallies add key by key."""
        a = PairCounts(10, 8, {6: 2}, {(6, 3): 1})
        b = PairCounts(5, 4, {6: 1}, {(6, 3): 1})
        merged = a.merge(b)
        assert merged == PairCounts(15, 12, {6: 3}, {(6, 3): 2})

    def test_as_dict(self):
        """Infinite bounds serialise as None and overlap keys as divisors."""
        census = GlobalCensus(3, 6, 100, 7, "exhaustive", overlaps={(6, 3): 4})
        record = census.as_dict()
        assert record["upper"] is None
        assert record["overlaps"] == {"3": 4}
        assert record["stderr"] is None
        assert record["ratio"] == pytest.approx(0.07)
        assert record["tau_hat"] == pytest.approx(0.21)

    def test_stderr_for_estimates(self):
        """Monte-Carlo censuses carry a binomial standard error."""
        census = GlobalCensus(43, 3, 10_000, 100, "montecarlo", samples=12_000, seed=1)
        assert census.stderr == pytest.approx(np.sqrt(0.01 * 0.99 / 10_000))

    def test_within_bounds_slack(self):
        """Standard errors widen the accepted interval."""
        census = GlobalCensus(43, 3, 10_000, 300, "montecarlo", samples=12_000, seed=1)
        assert not census.within_bounds()
        assert census.within_bounds(sigmas=4)


class TestExhaustive:
    """Test the exact census at small q."""

    @pytest.mark.parametrize("p, count", [(3, 234), (5, 3100)])
    def test_normalized_conic_count(self, p, count):
        """There are q⁵ − q² nonsingular conics, listed once each."""
        U = normalized_conic_uppers(p)
        assert len(U) == count
        assert len({tuple(row) for row in U}) == count
        first_nonzero = U[np.arange(len(U)), (U != 0).argmax(axis=1)]
        assert (first_nonzero == 1).all()

    def test_census_q3(self):
        """Counts are consistent and exact."""
        census = exhaustive_pair_census(field_new(3), 3)
        assert census.mode == "exhaustive"
        assert 0 < census.gamma_total <= census.psi_total <= 234 * 233
        assert census.stderr is None
        assert census.samples is None

    def test_workers_do_not_change_totals(self):
        """Block results are merged in order whatever the pool size."""
        ctx = field_new(3)
        serial = exhaustive_counts(ctx, [3, 6], workers=1)
        parallel = exhaustive_counts(ctx, [3, 6], workers=2)
        assert serial == parallel

    def test_overlaps_bounded_by_divisor_count(self):
        """Pairs counted for both 6 and 3 are among the triangle pairs."""
        counts = exhaustive_counts(field_new(3), [3, 6])
        assert counts.overlaps[(6, 3)] <= counts.gamma[3]
        assert counts.overlaps[(6, 3)] <= counts.gamma[6]

    def test_q_above_limit_raises(self):
        """Large fields are refused."""
        with pytest.raises(CensusError):
            exhaustive_pair_census(field_new(11), 3)

    @pytest.mark.slow
    def test_census_q5_bounds(self):
        """The exact q = 5 ratio lies inside the bounds."""
        census = exhaustive_pair_census(field_new(5), 3, workers=2)
        assert census.within_bounds()


class TestMonteCarlo:
    """Test seeded Monte-Carlo estimates."""

    def test_too_few_samples_raise(self, f13):
        """At least 10⁴ samples are required."""
        with pytest.raises(CensusError):
            monte_carlo_census(f13, 3, samples=9_999, seed=1)

    def test_seed_determinism(self, f13):
        """The same seed reproduces the same counts."""
        first = monte_carlo_census(f13, 3, samples=10_000, seed=42, shard_size=4096)
        second = monte_carlo_census(f13, 3, samples=10_000, seed=42, shard_size=4096)
        assert first == second

    def test_workers_do_not_change_totals(self, f13):
        """Shards are seeded by index and summed in order."""
        serial = monte_carlo_counts(f13, [3], 10_000, seed=3, workers=1, shard_size=4096)
        parallel = monte_carlo_counts(f13, [3], 10_000, seed=3, workers=2, shard_size=4096)
        assert serial == parallel
        assert serial.drawn == 10_000

    def test_pool_used_for_several_workers(self, f13):
        """More than one worker dispatches shards to a process pool."""
        with patch("src.helpers.PairCensus.ProcessPoolExecutor") as mock_pool:
            mock_pool.return_value.__enter__.return_value.map.return_value = [PairCounts(), PairCounts()]
            monte_carlo_counts(f13, [3], 10_000, seed=3, workers=2, shard_size=5_000)
        mock_pool.assert_called_once_with(max_workers=2)

    def test_estimate_near_one_over_q(self, f43):
        """At q = 43 the triangle ratio falls inside the bounds."""
        census = monte_carlo_census(f43, 3, samples=40_000, seed=20240601, shard_size=10_000)
        assert census.mode == "montecarlo"
        assert census.psi_total > 30_000
        assert census.within_bounds(sigmas=4)


class TestTauTable:
    """Test τ̂ tables over several fields."""

    def test_structure_and_shared_draws(self, f11, f13):
        """Each (q, n) has a census; n = 3 matches a single-n run on the same draws."""
        table = tau_table([f11, f13], [3, 6], samples=10_000, seed=5, shard_size=5_000)
        assert table.q_values == (11, 13)
        assert table.stats() == ["tau", "stderr", "overlap3"]
        single = monte_carlo_census(f13, 3, samples=10_000, seed=5, shard_size=5_000)
        assert table.tau(13, 3) == pytest.approx(single.tau_hat)
        assert table.q_stat(13, 6, "overlap3") <= table.censuses[(13, 3)].gamma_total
        assert table.q_stat(13, 3, "overlap3") == 0
        assert table.tau_stderr(13, 3) == pytest.approx(13 * single.stderr)

    def test_unknown_stat(self, f11):
        """Only tau, stderr and overlap statistics exist."""
        table = tau_table([f11], [3], samples=10_000, seed=5)
        with pytest.raises(KeyError):
            table.q_stat(11, 3, "median")


class TestGeometricAgreement:
    """Test the chain construction against the closure condition."""

    def test_worked_example(self, example_conics):
        """Triangles close on the example pair and tetragons do not."""
        A, B = example_conics
        assert geometric_agreement(A, B, 3, True)
        assert geometric_agreement(A, B, 4, False)
        assert not geometric_agreement(A, B, 3, False)

    @pytest.mark.parametrize("n", [3, 4])
    def test_cross_check_random_pairs(self, f13, n):
        """Random transversal pairs over F_13 show no disagreement."""
        assert geometric_cross_check(f13, n, pairs=200, seed=1) == (200, 0)

    @pytest.mark.slow
    @pytest.mark.parametrize("q", [7, 13])
    def test_cross_check_ten_thousand_pairs(self, q):
        """Ten thousand random transversal pairs agree for triangles and tetragons."""
        ctx = field_new(q)
        for n in (3, 4):
            assert geometric_cross_check(ctx, n, pairs=10_000, seed=7) == (10_000, 0)


def ptc_pairs(ctx):
    """Ordered pairs (C_r, C_s) of the sample pencil admitting a triangle."""
    for r in range(2, ctx.q):
        for s in range(2, ctx.q):
            if r == s:
                continue
            A, B = c_alpha(ctx, r), c_alpha(ctx, s)
            if ngon_condition(A, B, 3):
                yield A, B


class TestPencilPorism:
    """Test the triangle condition against chains on the sample pencil."""

    @pytest.mark.parametrize(
        "q", [7, 11, 13, *(pytest.param(q, marks=pytest.mark.slow) for q in (19, 23, 31))]
    )
    def test_condition_matches_chains(self, q):
        """Every transversal member pair agrees with its chains."""
        ctx = field_new(q)
        for r in range(2, q):
            for s in range(2, q):
                if r == s:
                    continue
                A, B = c_alpha(ctx, r), c_alpha(ctx, s)
                assert geometric_agreement(A, B, 3, ngon_condition(A, B, 3)), (r, s)

    @pytest.mark.parametrize("q", [19, 23])
    def test_triangle_pair_count(self, q):
        """The sample pencil has q − 5 ordered triangle pairs."""
        assert len(list(ptc_pairs(field_new(q)))) == q - 5

    def test_q19_pair_without_nondegenerate_triangle(self):
        """(C_8, C_12) over F_19 satisfies the triangle condition yet every chain breaks."""
        f19 = field_new(19)
        A, B = c_alpha(f19, 8), c_alpha(f19, 12)
        assert is_transversal(A, B)
        assert ngon_condition(A, B, 3)
        assert find_nondegenerate_ngon(A, B, 3) is None
        kinds = Counter(outcome.kind for _, _, outcome in start_outcomes(A, B))
        assert set(kinds) == {OutcomeKind.NO_TANGENT, OutcomeKind.DEGENERATE}
        assert sum(kinds.values()) == 2 * 20


@pytest.mark.slow
class TestDicksonTriangles:
    """Triangle pairs in Dickson pencils carry a nondegenerate triangle for larger q."""

    @pytest.mark.parametrize("p, r", [(5, 2), (29, 1), (31, 1)])
    @pytest.mark.parametrize("tag", list(DicksonTag))
    def test_nondegenerate_triangle_exists(self, p, r, tag):
        """Every ordered pair of distinct transversal members meeting the condition closes properly."""
        ctx = field_new(p, r)
        for cls in valid_param_enumerator(tag, ctx, sample=2, seed=3):
            members = nonsingular_members(dickson_generators(cls, ctx))
            for A in members:
                for B in members:
                    if A == B or not ngon_condition(A, B, 3):
                        continue
                    assert find_nondegenerate_ngon(A, B, 3) is not None, (cls, A, B)


@pytest.mark.slow
class TestDeskScale:
    """Long runs of the global ratio."""

    def test_exhaustive_q7_within_bounds(self):
        """The exact ratio at q = 7 lies in [𝕃, 𝕌] and near 1/q."""
        census = exhaustive_pair_census(field_new(7), 3, workers=4)
        assert census.within_bounds()
        assert 1 / 21 <= census.ratio <= 3 / 7

    def test_exhaustive_and_monte_carlo_agree_q7(self):
        """Seeded estimates at q = 7 fall within 3 standard errors of the exact ratio."""
        exact = exhaustive_pair_census(field_new(7), 3, workers=4)
        estimate = monte_carlo_census(field_new(7), 3, samples=1_000_000, seed=11, workers=4)
        assert abs(estimate.ratio - exact.ratio) <= 3 * estimate.stderr

    def test_monte_carlo_q101(self):
        """τ̂_3 at q = 101 stays inside the scaled bounds."""
        census = monte_carlo_census(field_new(101), 3, samples=10_000_000, seed=20240601, workers=4)
        assert census.within_bounds(sigmas=3)

    def test_tau_q199(self):
        """Nearest integers of τ̂_3 .. τ̂_9 at q = 199 read 1, 3, 1, 4, 1, 6, 2."""
        n_values = range(3, 10)
        first = tau_table([field_new(199)], n_values, samples=20_000_000, seed=20240601, workers=4)
        second = tau_table([field_new(199)], n_values, samples=20_000_000, seed=7, workers=4)
        assert [round(first.tau(199, n)) for n in n_values] == [1, 3, 1, 4, 1, 6, 2]
        for n in n_values:
            spread = 3 * (first.tau_stderr(199, n) + second.tau_stderr(199, n))
            assert abs(first.tau(199, n) - second.tau(199, n)) <= spread
