from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from matthewcf.errors import InsufficientDataError
from matthewcf.zipf import (
    ZipfModel,
    fit_zipf_exponent,
    generalized_harmonic,
    zipf_pmf,
    zipf_sample,
)


def exact_harmonic(n, s):
    return sum(Fraction(1, j ** s) for j in range(1, n + 1))


class TestHarmonic:
    def test_single_term(self):
        assert generalized_harmonic(1, 1) == 1.0

    @pytest.mark.parametrize("n, s", [(4, 1), (3, 2), (10, 1), (7, 3)])
    def test_matches_rational(self, n, s):
        assert generalized_harmonic(n, s) == pytest.approx(float(exact_harmonic(n, s)), rel=1e-15)

    def test_frozen_values(self):
        # 25/12 and 49/36
        assert generalized_harmonic(4, 1) == pytest.approx(2.0833333333333335, rel=1e-15)
        assert generalized_harmonic(3, 2) == pytest.approx(1.3611111111111112, rel=1e-15)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            generalized_harmonic(0, 1)


class TestPmf:
    def test_single_element(self):
        assert zipf_pmf(ZipfModel(1.0, 1), 1) == 1.0

    def test_uniform_when_s_zero(self):
        assert zipf_pmf(ZipfModel(0.0, 5), 3) == pytest.approx(0.2, abs=1e-15)

    def test_rational_value(self):
        expected = Fraction(1, 2) / exact_harmonic(4, 1)
        assert expected == Fraction(6, 25)
        assert zipf_pmf(ZipfModel(1.0, 4), 2) == pytest.approx(0.24, rel=1e-15)

    @pytest.mark.parametrize("k", [0, 5, -1])
    def test_out_of_range(self, k):
        with pytest.raises(ValueError):
            zipf_pmf(ZipfModel(1.0, 4), k)

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("n", [1, 17, 1000, 10**6])
    def test_normalization(self, s, n):
        import math
        assert abs(math.fsum(ZipfModel(s, n).pmf_table) - 1.0) <= 1e-12

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.0])
    def test_monotone(self, s):
        pmf = ZipfModel(s, 500).pmf_table
        assert np.all(np.diff(pmf) <= 0)

    @settings(max_examples=200, deadline=None)
    @given(s=st.floats(0, 4), n=st.integers(2, 300), data=st.data())
    def test_ratio_law(self, s, n, data):
        i = data.draw(st.integers(1, n))
        j = data.draw(st.integers(1, n))
        model = ZipfModel(s, n)
        assert model.pmf(i) / model.pmf(j) == pytest.approx((j / i) ** s, rel=1e-12)


class TestSampling:
    def test_single_support(self):
        assert zipf_sample(ZipfModel(2.0, 1), 7, 5).tolist() == [1, 1, 1, 1, 1]

    def test_deterministic(self):
        model = ZipfModel(1.0, 50)
        assert np.array_equal(zipf_sample(model, 3, 1000), zipf_sample(model, 3, 1000))

    def test_empty(self):
        assert len(zipf_sample(ZipfModel(1.0, 5), 0, 0)) == 0

    def test_in_range(self):
        draws = zipf_sample(ZipfModel(0.5, 30), 1, 10_000)
        assert draws.min() >= 1 and draws.max() <= 30

    def test_rank_one_frequency(self):
        model = ZipfModel(1.0, 1000)
        count = 10**6
        draws = zipf_sample(model, 11, count)
        p = model.pmf(1)
        se = np.sqrt(p * (1 - p) / count)
        assert abs(np.mean(draws == 1) - p) <= 3 * se

    def test_chi_squared_goodness_of_fit(self):
        model = ZipfModel(1.0, 200)
        count = 10**6
        observed = np.bincount(zipf_sample(model, 5, count), minlength=201)[1:]
        expected = model.pmf_table * count
        _, pvalue = stats.chisquare(observed, expected)
        assert pvalue > 0.001


class TestFit:
    def test_uniform_counts(self):
        assert fit_zipf_exponent([50] * 40) <= 0.01

    def test_noiseless(self):
        counts = [10_000 / k for k in range(1, 101)]
        assert 0.99 <= fit_zipf_exponent(counts) <= 1.01

    def test_round_trip(self):
        model = ZipfModel(1.0, 1000)
        counts = np.bincount(zipf_sample(model, 21, 10**6), minlength=1001)[1:]
        assert 0.95 <= fit_zipf_exponent(counts) <= 1.05

    @pytest.mark.parametrize("s", [0.5, 1.5, 2.0])
    def test_round_trip_other_exponents(self, s):
        model = ZipfModel(s, 1000)
        counts = np.bincount(zipf_sample(model, 2, 10**6), minlength=1001)[1:]
        assert abs(fit_zipf_exponent(counts) - s) <= 0.05

    @pytest.mark.parametrize("counts", [[], [5], [5, 0, 0], [0, 0]])
    def test_insufficient(self, counts):
        with pytest.raises(InsufficientDataError):
            fit_zipf_exponent(counts)
