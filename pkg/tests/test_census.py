"""Tests for per-pencil censuses and the counting lemmas."""

from unittest.mock import patch

import pytest
from sympy import primerange

from src.helpers.Census import (
    CensusError,
    PencilCensus,
    char3_delta_always_square,
    char3_experiment,
    char3_root_pair_ratio,
    lower_bound,
    member_uppers,
    pencil_census,
    pencil_sweep,
    s_set_expected,
    s_set_size,
    upper_bound,
    zphi_bounds,
    zphi_census,
)
from src.helpers.FiniteField import field_new
from src.helpers.Pencil import DicksonClass, DicksonTag, PencilError, class3_pencil

CLASS3 = DicksonClass(DicksonTag.C3)


class TestBounds:
    """Test 𝕃 and 𝕌."""

    def test_values_at_seven(self):
        """𝕃(7) = −9/56 and 𝕌(7) = 12/20."""
        assert lower_bound(7) == pytest.approx(-9 / 56)
        assert upper_bound(7) == pytest.approx(0.6)

    def test_upper_bound_unbounded_at_three(self):
        """(q − 2)(q − 3) vanishes at q = 3."""
        assert upper_bound(3) == float("inf")

    @pytest.mark.parametrize("q", [17, 43, 101, 1009])
    def test_bounds_bracket_one_over_q(self, q):
        """𝕃 < 1/q < 𝕌 once q > 16."""
        assert lower_bound(q) < 1 / q < upper_bound(q)


class TestClassThreeCensus:
    """Test the triangle census on the class (3) pencil."""

    @pytest.mark.parametrize("q", [7, 11, 13, 25, 43])
    def test_gamma_is_q_minus_5(self, q):
        """Exactly q − 5 ordered member pairs admit a triangle."""
        ctx = field_new(*{25: (5, 2)}.get(q, (q, 1)))
        census = pencil_census(CLASS3, ctx, 3)
        assert census.sigma == q - 2
        assert census.psi == (q - 2) * (q - 3)
        assert census.gamma == q - 5
        assert census.non_transversal == 0
        assert census.root_pairs is None

    @pytest.mark.slow
    def test_gamma_is_q_minus_5_all_primes(self):
        """The count holds for every prime 7 <= q <= 199."""
        for q in primerange(7, 200):
            assert pencil_census(CLASS3, field_new(q), 3).gamma == q - 5, q

    def test_member_uppers_shape(self, f13):
        """One raw upper triangle per nonsingular member."""
        etas, U = member_uppers(class3_pencil(f13))
        assert len(etas) == 11
        assert U.shape == (11, 6)

    def test_as_row(self, f13):
        """Rows carry the census columns."""
        census = pencil_census(CLASS3, f13, 3)
        row = census.as_row()
        assert row == {
            "class": "3",
            "q": 13,
            "params": "",
            "n": 3,
            "sigma": 11,
            "psi": 110,
            "gamma": 8,
            "ratio": pytest.approx(8 / 110),
            "roots_of_f": census.roots_of_f,
            "root_pairs": None,
        }

    def test_metrics_emitted(self, f13):
        """A census run increments the run counter."""
        with patch("src.helpers.datadog_instrumentation.statsd") as mock_statsd:
            pencil_census(CLASS3, f13, 3)
        assert mock_statsd.increment.called
        assert mock_statsd.histogram.called


class TestDicksonSweeps:
    """Test |Γ_π| against q − 16 <= |Γ_π| <= q + 5."""

    @pytest.mark.parametrize("tag", ["14", "16", "18", "19"])
    def test_sweep_q11(self, tag):
        """Every eligible pencil over F_11 respects the bounds."""
        ctx = field_new(11)
        results = pencil_sweep(tag, ctx, 3)
        assert results
        for census in results:
            assert census.gamma_in_bounds(), census
            assert census.lower <= census.ratio <= census.upper

    @pytest.mark.parametrize("tag, sigma", [("14", 13), ("16", 11), ("18", 14), ("19", 13)])
    def test_sigma_over_f13(self, tag, sigma):
        """σ_π is q, q − 2, q + 1 and q for classes 14, 16, 18, 19."""
        for census in pencil_sweep(tag, field_new(13), 3, sample=3, seed=1):
            assert census.sigma == sigma
            assert census.psi == sigma * (sigma - 1)

    @pytest.mark.slow
    @pytest.mark.parametrize("p, r", [(5, 2), (29, 1), (31, 1)])
    @pytest.mark.parametrize("tag", ["3", "14", "16", "18", "19"])
    def test_sweep_bounds(self, tag, p, r):
        """At least 100 tuples per class (or all of them) respect the bounds."""
        for census in pencil_sweep(tag, field_new(p, r), 3, sample=100, seed=2):
            assert census.gamma_in_bounds(), census

    def test_b_squared_is_3c_label(self, f7):
        """Class (18) tuples with b² = 3c carry the tighter cap."""
        labelled = [c for c in pencil_sweep("18", f7, 3) if c.b_squared_is_3c]
        for census in labelled:
            assert census.params.endswith(";b2=3c")
            assert census.gamma <= census.q + 1

    def test_gamma_in_bounds_cap(self):
        """The b² = 3c branch caps gamma at q + 1."""
        census = PencilCensus(DicksonTag.C18, "b=3;c=3;b2=3c", 11, 3, 12, 132, 14, 0)
        assert not census.gamma_in_bounds()
        assert PencilCensus(DicksonTag.C18, "b=1;c=2", 11, 3, 12, 132, 14, 0).gamma_in_bounds()

    def test_invalid_params_raise(self, f13):
        """Invalid class parameters are rejected before counting."""
        with pytest.raises(PencilError):
            pencil_census(DicksonClass.of(f13, "14", 0), f13, 3)

    def test_dickson_class_in_char_3_raises(self, f9):
        """Only class (3) is counted in characteristic 3."""
        with pytest.raises(CensusError):
            pencil_census(DicksonClass(DicksonTag.C14, (f9(1),)), f9, 3)


class TestCountingLemmas:
    """Test the s-set and Z_φ counts."""

    @pytest.mark.parametrize("q, expected", [(7, 0), (11, 3), (13, 3), (43, 18), (47, 21)])
    def test_s_set(self, q, expected):
        """|S| is (q − 7)/2 or (q − 5)/2 by the character of −3."""
        ctx = field_new(q)
        assert s_set_size(ctx) == expected
        assert s_set_expected(ctx) == expected

    def test_s_set_all_primes(self):
        """The branch follows q mod 12 for every prime 7 <= q <= 199."""
        for q in primerange(7, 200):
            expected = (q - 7) // 2 if q % 12 in (1, 7) else (q - 5) // 2
            assert s_set_size(field_new(q)) == expected, q

    def test_s_set_needs_prime_field(self, f9):
        """Extension fields and q < 7 are out of range."""
        with pytest.raises(CensusError):
            s_set_size(f9)
        with pytest.raises(CensusError):
            s_set_size(field_new(5))

    def test_zphi_example(self, f13):
        """s² − s + 1 is a square or zero for 7 values over F_13."""
        assert zphi_census((1, -1, 1), f13) == 7

    @pytest.mark.parametrize(
        "q", [7, 11, 13, 17, *(pytest.param(q, marks=pytest.mark.slow) for q in (19, 23, 29, 31))]
    )
    def test_zphi_within_bounds(self, q):
        """(q − 1)/2 <= |Z_φ| <= (q + 5)/2 for every admissible φ."""
        ctx = field_new(q)
        low, high = zphi_bounds(ctx)
        for u0 in range(1, q):
            for u1 in range(q):
                for u2 in range(q):
                    if (u1 * u1 - 4 * u0 * u2) % q == 0:
                        continue
                    assert low <= zphi_census((u0, u1, u2), ctx) <= high

    @pytest.mark.parametrize("phi", [(0, 1, 1), (1, 2, 1), (2, 4, 2)])
    def test_zphi_rejects(self, f13, phi):
        """Linear φ and constant multiples of squares are rejected."""
        with pytest.raises(CensusError):
            zphi_census(phi, f13)


class TestCharacteristicThree:
    """Test the class (3) census in characteristic 3."""

    @pytest.mark.parametrize("p, r", [(3, 2), (3, 3)])
    def test_counts(self, p, r):
        """gamma = q − 3 and root_pairs = 2q − 5, including the diagonal."""
        ctx = field_new(p, r)
        q = ctx.q
        census = char3_experiment(ctx)
        assert census.psi == (q - 2) * (q - 3)
        assert census.gamma == q - 3
        assert census.root_pairs == 2 * q - 5
        assert char3_root_pair_ratio(census) == pytest.approx((2 * q - 5) / ((q - 2) * (q - 3)))

    @pytest.mark.parametrize(
        "r, tolerance", [(3, 0.35), pytest.param(4, 0.20, marks=pytest.mark.slow)]
    )
    def test_root_pair_ratio_near_two_over_q(self, r, tolerance):
        """Root pairs make up about 2/q of the member pairs."""
        ctx = field_new(3, r)
        ratio = char3_root_pair_ratio(char3_experiment(ctx))
        assert abs(ratio - 2 / ctx.q) <= tolerance * 2 / ctx.q

    def test_delta_is_always_square(self, f9):
        """s² − s + 1 = (s + 1)² in characteristic 3."""
        assert char3_delta_always_square(f9)
        assert char3_delta_always_square(field_new(3, 3))
        assert not char3_delta_always_square(field_new(11))

    @pytest.mark.parametrize("p, r", [(5, 1), (3, 1)])
    def test_rejects_other_fields(self, p, r):
        """The experiment needs p = 3 and q >= 9."""
        with pytest.raises(CensusError):
            char3_experiment(field_new(p, r))
