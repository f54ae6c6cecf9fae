import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from degeneracy import InvalidInputError
from degeneracy.analytics import (
    AmplificationFactors,
    RandomModelParams,
    StructuredModelParams,
    amplified_expected_counts,
    build_expectation_table,
    composite_degeneracy_probability,
    count_exponent,
    expected_collinear,
    expected_coplanar,
    expected_degenerate_subsets,
    near_spherical_probability,
    overall_probability,
    overall_probability_exp_approx,
    single_subset_probability,
    structured_coplanar_probability,
    subset_count,
    subset_count_asymptotic,
)

LIDAR = StructuredModelParams(plane_area=20, shell_thickness=0.1, cyl_radius=10, cyl_height=5)


def _mp_overall(pairs):
    with mpmath.workdps(60):
        prod = mpmath.mpf(1)
        for p, m in pairs:
            prod *= mpmath.power(1 - mpmath.mpf(p), mpmath.mpf(m))
        return 1 - prod


class TestSingleSubset:
    def test_zero_epsilon(self):
        assert single_subset_probability(RandomModelParams(100, 3, 3, 0.0)) == 0.0

    def test_exponent_zero(self):
        assert single_subset_probability(RandomModelParams(100, 3, 3, 1e-6)) == 1e-6

    def test_negative_exponent_amplifies(self):
        got = single_subset_probability(RandomModelParams(100, 3, 4, 1e-6))
        with mpmath.workdps(40):
            ref = mpmath.mpf("1e-6") / mpmath.power(100, 3 - 4)
        assert got == pytest.approx(float(ref), rel=1e-15)
        assert got == pytest.approx(1e-4, rel=1e-15)

    def test_clamped(self):
        assert single_subset_probability(RandomModelParams(1000, 3, 5, 0.5)) == 1.0

    def test_proportionality(self):
        assert single_subset_probability(RandomModelParams(10, 3, 3, 1e-3, 2.5)) == pytest.approx(2.5e-3)

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            RandomModelParams(3, 3, 4, 1e-6)
        with pytest.raises(InvalidInputError):
            RandomModelParams(10, 3, 3, -1e-6)


class TestExpectedCounts:
    @pytest.mark.parametrize(
        "n, expected",
        [(1000, 0.1667), (5000, 4.1667), (10000, 16.6667), (20000, 66.6667)],
    )
    def test_published_collinear_column(self, n, expected):
        got = expected_degenerate_subsets(RandomModelParams(n, 3, 3, 1e-6))
        assert round(got, 4) == expected
        assert expected_collinear(n, 1e-6) == got

    @pytest.mark.parametrize("n, expected", [(1000, 0.0417), (20000, 0.8333)])
    def test_published_coplanar_column(self, n, expected):
        # reproduces only with eps = 1e-3
        assert round(expected_coplanar(n, 1e-3), 4) == expected

    def test_exact_division(self):
        assert expected_coplanar(24, 1.0) == 1.0

    def test_zero_epsilon(self):
        assert expected_collinear(10, 0.0) == 0.0
        assert expected_coplanar(10, 0.0) == 0.0
        assert expected_degenerate_subsets(RandomModelParams(50, 5, 3, 0.0)) == 0.0

    def test_general_exponent(self):
        assert count_exponent(3, 3) == 2
        assert count_exponent(4, 3) == 1
        assert count_exponent(3, 2) == 4
        assert count_exponent(3, 8) == -2
        got = expected_degenerate_subsets(RandomModelParams(50, 2, 3, 1e-4))
        assert got == pytest.approx(1e-4 * 50**4 / 6, rel=1e-15)

    def test_high_dimension_decays(self):
        vals = [expected_degenerate_subsets(RandomModelParams(n, 8, 3, 1e-3)) for n in (10**2, 10**3, 10**4)]
        assert vals[0] > vals[1] > vals[2] > 0

    def test_large_n_does_not_overflow(self):
        got = expected_degenerate_subsets(RandomModelParams(20000, 3, 4, 1e-6))
        assert math.isfinite(got)
        big = expected_degenerate_subsets(RandomModelParams(10**6, 1, 60, 1e-6))
        assert big == math.inf or big > 1e300

    def test_growth_laws_exact(self):
        for n in (100, 1000, 12345):
            assert expected_collinear(2 * n, 1e-6) / expected_collinear(n, 1e-6) == 4.0
            assert expected_coplanar(2 * n, 1e-6) / expected_coplanar(n, 1e-6) == 2.0

    def test_small_n_rejected(self):
        with pytest.raises(InvalidInputError):
            expected_collinear(2, 1e-6)
        with pytest.raises(InvalidInputError):
            expected_coplanar(3, 1e-6)


class TestSubsetCount:
    def test_small(self):
        assert subset_count(5, 3) == 10
        assert subset_count(7, 0) == 1

    def test_exact_integer_oracle(self):
        assert subset_count(100, 4) == float(100 * 99 * 98 * 97 // 24) == 3921225

    def test_huge(self):
        v = subset_count(10**6, 1000)
        assert v == math.inf

    def test_asymptotic(self):
        assert subset_count_asymptotic(100, 4) == pytest.approx(100**4 / 24)
        assert subset_count(10**5, 3) / subset_count_asymptotic(10**5, 3) == pytest.approx(1, rel=1e-4)

    def test_k_greater_than_n(self):
        with pytest.raises(InvalidInputError):
            subset_count(3, 4)


class TestOverallProbability:
    def test_single(self):
        assert overall_probability([(0.5, 1)]) == 0.5

    def test_all_zero(self):
        assert overall_probability([(0.0, 10), (0.0, 1e9)]) == 0.0

    def test_certain(self):
        assert overall_probability([(1e-9, 5), (1.0, 1)]) == 1.0
        assert overall_probability([(1.0, 0)]) == 0.0

    def test_tiny_probability_many_subsets(self):
        got = overall_probability([(1e-10, 1e10)])
        assert abs(got - float(_mp_overall([(1e-10, 1e10)]))) <= 1e-4
        assert got == pytest.approx(0.6321205588469516, rel=1e-9)

    def test_range_check(self):
        with pytest.raises(InvalidInputError):
            overall_probability([(1.5, 1)])
        with pytest.raises(InvalidInputError):
            overall_probability([(0.1, -1)])

    def test_lidar_aggregate(self):
        p = structured_coplanar_probability(LIDAR)
        got = overall_probability([(p, 97)])
        assert got == pytest.approx(float(_mp_overall([(p, 97)])), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.tuples(st.floats(0, 0.999), st.floats(0, 50)),
            min_size=1,
            max_size=6,
        )
    )
    def test_matches_naive_product(self, pairs):
        naive = 1.0
        for p, m in pairs:
            naive *= (1 - p) ** m
        naive = 1 - naive
        got = overall_probability(pairs)
        assert got == pytest.approx(naive, rel=1e-9, abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 100))
    def test_monotone(self, p, dp, m):
        assert overall_probability([(p, m)]) <= overall_probability([(min(1.0, p + dp), m)])
        assert overall_probability([(p, m)]) <= overall_probability([(p, m + 1)])


class TestExpApprox:
    def test_zero(self):
        assert overall_probability_exp_approx(0.0) == 0.0

    def test_limit(self):
        assert overall_probability_exp_approx(math.inf) == 1.0
        assert overall_probability_exp_approx(1e4) == 1.0

    def test_lidar_sum(self):
        with mpmath.workdps(40):
            ref = 1 - mpmath.exp(-mpmath.mpf("0.00127") * 97)
        got = overall_probability_exp_approx(0.00127 * 97)
        assert got == pytest.approx(float(ref), rel=1e-14)
        assert got == pytest.approx(0.11590, abs=5e-6)

    def test_negative(self):
        with pytest.raises(InvalidInputError):
            overall_probability_exp_approx(-0.1)


class TestStructured:
    def test_lidar_example(self):
        assert abs(structured_coplanar_probability(LIDAR) - 0.00127) <= 5e-6

    def test_zero_thickness(self):
        p = StructuredModelParams(plane_area=20, shell_thickness=0, cyl_radius=10, cyl_height=5)
        assert structured_coplanar_probability(p) == 0.0
        assert near_spherical_probability(p) == 0.0

    def test_clamped(self):
        p = StructuredModelParams(plane_area=1e4, shell_thickness=1.0, cyl_radius=1, cyl_height=1)
        assert structured_coplanar_probability(p) == 1.0

    def test_near_spherical(self):
        p = StructuredModelParams(shell_thickness=0.1, cyl_radius=10, cyl_height=5, sphere_radius=1, dim=3)
        with mpmath.workdps(40):
            ref = mpmath.mpf("0.1") * 3 / (mpmath.pi * 500)
        assert near_spherical_probability(p) == pytest.approx(float(ref), rel=1e-14)
        assert near_spherical_probability(p) == pytest.approx(1.9099e-4, rel=1e-4)

    def test_sphere_radius_scaling(self):
        base = StructuredModelParams(shell_thickness=0.1, cyl_radius=10, cyl_height=5, sphere_radius=1.3)
        doubled = StructuredModelParams(shell_thickness=0.1, cyl_radius=10, cyl_height=5, sphere_radius=2.6)
        assert near_spherical_probability(doubled) / near_spherical_probability(base) == pytest.approx(4.0, rel=1e-14)

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            StructuredModelParams(cyl_radius=0)


class TestComposite:
    def test_single(self):
        assert composite_degeneracy_probability([0.37]) == pytest.approx(0.37, rel=1e-15)

    def test_pair(self):
        assert composite_degeneracy_probability([0.5, 0.5]) == 0.75

    def test_four_factors(self):
        assert composite_degeneracy_probability([0.1] * 4) == pytest.approx(1 - 0.9**4, rel=1e-14)
        assert composite_degeneracy_probability([0.1] * 4) == pytest.approx(0.3439, rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.randoms())
    def test_permutation_invariant(self, ps, rnd):
        shuffled = list(ps)
        rnd.shuffle(shuffled)
        assert composite_degeneracy_probability(ps) == pytest.approx(
            composite_degeneracy_probability(shuffled), rel=1e-14, abs=1e-300
        )

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            composite_degeneracy_probability([0.2, -0.1])


class TestTable:
    def test_amplified(self):
        col, cop = amplified_expected_counts(66.6667, 0.4167, AmplificationFactors())
        assert col == pytest.approx(666.667)
        assert cop == pytest.approx(1.2501)
        assert amplified_expected_counts(3.5, 0.2, AmplificationFactors(1, 1)) == (3.5, 0.2)

    @pytest.mark.parametrize(
        "n, row",
        [
            (1000, (0.1667, 1.667, 0.0417, 0.125)),
            (5000, (4.1667, 41.667, 0.2083, 0.625)),
        ],
    )
    def test_rows(self, n, row):
        r = build_expectation_table([n]).row(n)
        got = (r.collinear_random, r.collinear_quantized, r.coplanar_random, r.coplanar_quantized)
        for value, printed in zip(got, row):
            decimals = len(repr(printed).split(".")[1])
            assert abs(value - printed) <= 0.5 * 10**-decimals

    def test_quantized_is_exact_multiple(self):
        t = build_expectation_table([1000, 5000, 10000, 20000])
        for r in t.rows:
            assert r.collinear_quantized == 10 * r.collinear_random
            assert r.coplanar_quantized == 3 * r.coplanar_random

    def test_empty(self):
        assert len(build_expectation_table([])) == 0

    def test_invalid_n(self):
        with pytest.raises(InvalidInputError):
            build_expectation_table([3])

    def test_serialisation(self):
        t = build_expectation_table([1000])
        assert t.to_csv().splitlines()[0] == "n,collinear_random,collinear_quantized,coplanar_random,coplanar_quantized"
        assert t.to_dict()["rows"][0]["n"] == 1000
        assert "1000" in t.to_text()

    def test_amplification_validation(self):
        with pytest.raises(InvalidInputError):
            AmplificationFactors(0, 3)
