import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmanova.combinatorics import Partition, partitions_of, partitions_up_to
from bmanova.errors import ParameterError
from bmanova.jack import (as_spectrum, build_jack_table, jack_C, jack_C_identity,
                          jack_plan, jack_table_batch)

BETAS = [0.5, 1.0, 2.0, 2.5, 4.0]


def schur(kappa, x):
    """Bialternant formula for the Schur polynomial."""
    n = len(x)
    parts = [kappa[j] if j < len(kappa) else 0 for j in range(n)]
    num = np.linalg.det(np.array([[xi ** (parts[j] + n - 1 - j) for j in range(n)] for xi in x]))
    den = np.linalg.det(np.array([[xi ** (n - 1 - j) for j in range(n)] for xi in x]))
    return num / den


def hook_product(kappa):
    conj = Partition(kappa).conjugate
    return math.prod(kappa[i] - j + conj[j] - i - 1
                     for i in range(len(kappa)) for j in range(kappa[i]))


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_weight_one_is_trace():
    x = [0.2, -0.5, 1.5]
    assert jack_C((1,), 2.5, x) == pytest.approx(sum(x), rel=1e-14)


def test_single_variable():
    assert jack_C((2,), 0.7, [0.9]) == pytest.approx(0.81, rel=1e-14)
    assert jack_C((1, 1), 0.7, [0.9]) == 0.0


def test_two_variable_sum():
    x = [0.3, 0.7]
    assert jack_C((2,), 2.0, x) + jack_C((1, 1), 2.0, x) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("beta", BETAS)
def test_hand_value_one_one(beta):
    alpha = 2.0 / beta
    x = [0.4, 1.3]
    assert jack_C((1, 1), beta, x) == pytest.approx(2 * alpha * 0.4 * 1.3 / (1 + alpha), rel=1e-13)


class TestIdentity:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_trace(self, n):
        assert jack_C_identity((1,), 1.5, n) == pytest.approx(n, rel=1e-14)

    @pytest.mark.parametrize("k", range(1, 8))
    def test_single_variable(self, k):
        assert jack_C_identity((k,), 3.0, 1) == pytest.approx(1.0, rel=1e-13)

    def test_sum_rule(self):
        total = sum(jack_C_identity(kappa, 2.5, 2) for kappa in partitions_of(3, 2))
        assert total == pytest.approx(8.0, rel=1e-13)

    def test_too_long(self):
        assert jack_C_identity((1, 1, 1), 1.0, 2) == 0.0

    @pytest.mark.parametrize("beta", BETAS)
    def test_matches_evaluation_at_ones(self, beta):
        for kappa in partitions_of(5, 3):
            assert jack_C_identity(kappa, beta, 3) == pytest.approx(jack_C(kappa, beta, [1, 1, 1]), rel=1e-12)


class TestTable:
    def test_weight_zero(self):
        table = build_jack_table(1.0, [0.2, 0.3], 0)
        assert dict(table.values) == {Partition(): 1.0}

    def test_slices_sum_to_trace_powers(self):
        x = [0.1, 0.45, 0.3]
        table = build_jack_table(2.5, x, 8)
        for k in range(9):
            assert sum(table.weight_slice(k).values()) == pytest.approx(sum(x) ** k, rel=1e-12)

    @pytest.mark.parametrize("beta", BETAS)
    def test_matches_direct_evaluation(self, beta, rng):
        x = rng.uniform(0, 1, 4)
        table = build_jack_table(beta, x, 6)
        for kappa, value in table.values.items():
            assert value == pytest.approx(jack_C(kappa, beta, x), rel=1e-11, abs=1e-15)

    def test_lookup_beyond_length_is_zero(self):
        table = build_jack_table(1.0, [0.5], 3)
        assert table[(2, 1)] == 0.0

    def test_batch_matches_single(self, rng):
        points = rng.uniform(-1, 1, (5, 3))
        batch = jack_table_batch(1.5, points, 5, max_part=3)
        assert all(kappa.part(0) <= 3 for kappa in batch.partitions)
        for j, x in enumerate(points):
            for i, kappa in enumerate(batch.partitions):
                assert batch.values[i, j] == pytest.approx(jack_C(kappa, 1.5, x), rel=1e-11, abs=1e-14)

    def test_part_cap_on_four_variables(self, rng):
        x = rng.uniform(0, 1, 4)
        batch = jack_table_batch(0.7, x[None, :], 9, max_part=2)
        assert max(kappa.part(0) for kappa in batch.partitions) == 2
        for i, kappa in enumerate(batch.partitions):
            assert batch.values[i, 0] == pytest.approx(jack_C(kappa, 0.7, x), rel=1e-11, abs=1e-15)

    def test_large_plan_builds_quickly(self):
        start = time.perf_counter()
        plan = jack_plan(2.37, 4, 40)
        assert time.perf_counter() - start < 10.0
        assert len(plan.partitions) == len(partitions_up_to(40, 4))


@pytest.mark.parametrize("beta", BETAS)
@pytest.mark.parametrize("n", range(1, 6))
def test_sum_rule(beta, n, rng):
    x = rng.uniform(0, 1, n)
    batch = jack_table_batch(beta, x, 6)
    weights = np.array([kappa.weight for kappa in batch.partitions])
    for k in range(7):
        total = batch.values[weights == k, 0].sum()
        assert abs(total - x.sum() ** k) <= 1e-10 * x.sum() ** k


def test_sum_rule_mixed_signs():
    x = [0.6, -0.9, 0.25, -0.1]
    table = build_jack_table(1.0, x, 6)
    for k in range(7):
        assert sum(table.weight_slice(k).values()) == pytest.approx(sum(x) ** k, rel=1e-10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(x=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4),
       beta=st.sampled_from(BETAS), c=st.sampled_from([0.5, 2.0]))
def test_homogeneity(x, beta, c):
    for kappa in partitions_of(4, len(x)):
        scaled = jack_C(kappa, beta, [c * v for v in x])
        assert scaled == pytest.approx(c ** 4 * jack_C(kappa, beta, x), rel=1e-11)


@pytest.mark.parametrize("beta", [0.5, 2.5])
def test_symmetry(beta, rng):
    x = rng.uniform(0, 1, 4)
    for kappa in [(3, 1), (2, 2, 1), (1, 1, 1, 1)]:
        base = jack_C(kappa, beta, x)
        for _ in range(10):
            assert jack_C(kappa, beta, rng.permutation(x)) == pytest.approx(base, rel=1e-12)


def test_vanishing_beyond_length():
    assert jack_C((1, 1, 1), 1.3, [0.5, 0.5]) == 0.0
    assert jack_C((1, 1), 1.3, [0.5, 0.5]) != 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("k", range(1, 5))
def test_schur_at_beta_two(n, k, rng):
    x = rng.uniform(0.1, 1.0, n)
    for kappa in partitions_of(k, n):
        expected = math.factorial(k) / hook_product(kappa) * schur(kappa, x)
        assert jack_C(kappa, 2.0, x) == pytest.approx(expected, rel=1e-9)


def test_spectrum_validation():
    with pytest.raises(ParameterError):
        as_spectrum([])
    with pytest.raises(ParameterError):
        as_spectrum([1.0, float("nan")])
