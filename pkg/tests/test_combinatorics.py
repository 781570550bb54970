import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from bmanova.combinatorics import (BetaParam, Partition, gen_pochhammer, last_box,
                                   log_gauss_2f1_identity, log_gen_gamma, log_gen_pochhammer,
                                   log_K, partitions_of, partitions_up_to)
from bmanova.errors import DomainError, ParameterError


def brute_count(k, max_len, max_part):
    if k == 0:
        return 1
    if max_len == 0:
        return 0
    return sum(brute_count(k - first, max_len - 1, first) for first in range(1, min(k, max_part) + 1))


class TestPartition:
    def test_trailing_zeros_trimmed(self):
        assert Partition((3, 1, 0, 0)) == Partition((3, 1))
        assert hash(Partition((2, 0))) == hash(Partition((2,)))

    def test_weight_length_conjugate(self):
        kappa = Partition((4, 2, 1))
        assert kappa.weight == 7
        assert kappa.length == 3
        assert kappa.conjugate == (3, 2, 1, 1)
        assert kappa.conjugate.conjugate == kappa

    def test_part_past_end(self):
        assert Partition((2,)).part(5) == 0

    @pytest.mark.parametrize("parts", [(1, 2), (3, -1), (0, 1)])
    def test_rejects_invalid(self, parts):
        with pytest.raises(ParameterError):
            Partition(parts)


class TestPartitionsOf:
    def test_empty_partition(self):
        assert partitions_of(0, 3) == (Partition(),)

    def test_weight_three_two_parts(self):
        assert partitions_of(3, 2) == ((3,), (2, 1))

    def test_part_cap_forces_ones(self):
        assert partitions_of(4, 4, max_part=1) == ((1, 1, 1, 1),)

    def test_unsatisfiable(self):
        assert partitions_of(7, 2, max_part=3) == ()

    def test_negative_weight(self):
        with pytest.raises(ParameterError):
            partitions_of(-1, 2)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_counts_match_brute_force(self, n):
        for k in range(13):
            assert len(partitions_of(k, n)) == brute_count(k, n, k)

    def test_decreasing_lex_and_unique(self):
        parts = partitions_of(8, 4)
        assert list(parts) == sorted(parts, reverse=True)
        assert len(set(parts)) == len(parts)

    def test_up_to_orders_by_weight(self):
        weights = [kappa.weight for kappa in partitions_up_to(6, 3, max_part=2)]
        assert weights == sorted(weights)
        assert all(kappa.part(0) <= 2 for kappa in partitions_up_to(6, 3, max_part=2))


class TestPochhammer:
    def test_empty(self):
        assert gen_pochhammer(5.0, Partition(), 1.3) == 1.0

    def test_single_box(self):
        assert gen_pochhammer(3.0, Partition((1,)), 0.7) == 3.0

    def test_two_rows(self):
        assert gen_pochhammer(3.0, Partition((2, 1)), 2.0) == 24.0

    def test_vanishing_sign(self):
        assert gen_pochhammer(-1.0, Partition((2,)), 2.0) == 0.0
        assert log_gen_pochhammer(-1.0, Partition((2,)), 2.0) == (-math.inf, 0.0)

    def test_log_form_matches_product(self):
        kappa = Partition((5, 4, 3))
        log_abs, sign = log_gen_pochhammer(-2.5, kappa, 1.5)
        assert sign * math.exp(log_abs) == pytest.approx(gen_pochhammer(-2.5, kappa, 1.5), rel=1e-12)

    def test_large_weight_uses_log_form(self):
        kappa = Partition((12, 10))
        direct = math.prod(2.0 - row * 0.75 + col for row in range(2) for col in range(kappa[row]))
        assert gen_pochhammer(2.0, kappa, 1.5) == pytest.approx(direct, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(a=st.floats(-6, 6), beta=st.sampled_from([0.5, 1.0, 2.0, 2.5, 4.0]),
           k=st.integers(0, 8), n=st.integers(1, 4), data=st.data())
    def test_box_update_recursion(self, a, beta, k, n, data):
        options = partitions_of(k, n)
        kappa = data.draw(st.sampled_from(options))
        i = data.draw(st.integers(0, min(len(kappa), n - 1)))
        if i > 0 and kappa.part(i) == kappa.part(i - 1):
            return
        grown = Partition(tuple(kappa.part(j) + (j == i) for j in range(max(len(kappa), i + 1))))
        expected = gen_pochhammer(a, kappa, beta) * (a - i * beta / 2 + kappa.part(i))
        assert gen_pochhammer(a, grown, beta) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_last_box():
    parent, row, col = last_box(Partition((3, 2)))
    assert parent == (3, 1)
    assert (row, col) == (1, 1)


class TestGamma:
    def test_n1_is_scalar(self):
        assert log_gen_gamma(2.0, 1, 3.3) == pytest.approx(0.0, abs=1e-15)

    def test_two_factors(self):
        # pi^(n(n-1)beta/4) Gamma(2) Gamma(1) with n = 2, beta = 2
        assert log_gen_gamma(2.0, 2, 2.0) == pytest.approx(math.log(math.pi), rel=1e-13)

    def test_pole(self):
        with pytest.raises(DomainError):
            log_gen_gamma(0.4, 2, 1.0)

    @pytest.mark.parametrize("c", [0.5, 1.0, 2.5, 10.0])
    def test_scalar_agreement(self, c):
        assert log_gen_gamma(c, 1, 2.0) == pytest.approx(float(gammaln(c)), rel=1e-13, abs=1e-15)

    def test_k_one_one(self):
        assert math.exp(log_K(1, 1, 2.0)) == pytest.approx(2.0, rel=1e-13)

    def test_k_figure_parameters_finite(self):
        assert math.isfinite(log_K(7, 4, 2.5))

    def test_k_needs_m_at_least_n(self):
        with pytest.raises(ParameterError):
            log_K(2, 3, 1.0)

    def test_gauss_identity_zero_a(self):
        assert log_gauss_2f1_identity(0.0, 1.7, 6.0, 3, 2.5) == pytest.approx(0.0, abs=1e-12)

    def test_gauss_identity_scalar(self):
        a, b, c = 0.3, 0.4, 2.0
        expected = gammaln(c) + gammaln(c - a - b) - gammaln(c - a) - gammaln(c - b)
        assert log_gauss_2f1_identity(a, b, c, 1, 1.0) == pytest.approx(expected, rel=1e-13)


def test_beta_param():
    b = BetaParam(2.5)
    assert b.alpha * b.beta == pytest.approx(2.0)
    assert BetaParam.coerce(b) is b
    with pytest.raises(ParameterError):
        BetaParam(0.0)
