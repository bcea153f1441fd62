import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpopt import (ConfigError, InfoAccumulator, InputError, Kernel, accumulate, c1,
                   greedy_gamma_bound, mutual_information)
from gpopt.info import GREEDY_FACTOR

RBF = Kernel("rbf", 0.4)


def brute_mi(kernel, X, nv):
    # determinant directly, no factorization
    K = kernel(X)
    return 0.5 * math.log(np.linalg.det(np.eye(len(X)) + K / nv))


def test_mi_closed_cases():
    assert mutual_information(RBF, [[0.0]], 1.0) == pytest.approx(0.5 * math.log(2), abs=1e-15)
    assert mutual_information(RBF, np.zeros((0, 2)), 0.1) == 0.0


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_mi_against_determinant(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        X = rng.uniform(0, 1, size=(n, 2))
        nv = float(rng.choice([1e-2, 0.1, 1.0]))
        assert abs(mutual_information(RBF, X, nv) - brute_mi(RBF, X, nv)) <= 1e-10


def test_mi_permutation_invariant():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(12, 3))
    a = mutual_information(RBF, X, 0.05)
    for _ in range(10):
        assert abs(mutual_information(RBF, X[rng.permutation(12)], 0.05) - a) <= 1e-10


def test_mi_needs_positive_noise():
    with pytest.raises(ConfigError):
        mutual_information(RBF, [[0.0]], 0.0)


def test_c1_values():
    assert c1(1.0) == pytest.approx(2 / math.log(2), rel=1e-15)
    assert c1(1.0) == pytest.approx(2.8854, abs=1e-4)
    assert c1(0.01) == pytest.approx(0.4334, abs=1e-4)
    vals = [c1(s) for s in np.logspace(0, -12, 50)]
    assert all(a > b > 0 for a, b in zip(vals, vals[1:]))
    with pytest.raises(ConfigError):
        c1(0.0)
    with pytest.raises(ConfigError):
        c1(-1.0)


def test_accumulator():
    acc = accumulate(InfoAccumulator(), 0.5)
    assert acc.gamma_hat == 0.5
    assert accumulate(acc, 0.0).gamma_hat == 0.5
    assert accumulate(acc, 0.0).history == (0.5, 0.0)
    with pytest.raises(InputError):
        acc.add(-1e-300)


def test_accumulator_is_compensated():
    vals = [1.0] + [1e-16] * 10000
    acc = InfoAccumulator()
    for v in vals:
        acc = acc.add(v)
    assert acc.gamma_hat == math.fsum(vals)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), max_size=60))
def test_accumulator_matches_exact_sum(vals):
    acc = InfoAccumulator()
    prev = 0.0
    for v in vals:
        acc = acc.add(v)
        assert acc.gamma_hat >= prev
        prev = acc.gamma_hat
    assert acc.gamma_hat == pytest.approx(math.fsum(vals), rel=1e-15, abs=0)


def test_greedy_singleton_and_full_set():
    rng = np.random.default_rng(1)
    C = rng.uniform(size=(8, 2))
    k = Kernel("linear", 1.0)  # non-constant diagonal makes the singleton case informative
    best1 = max(0.5 * math.log1p(k(c)[0, 0] / 0.1) for c in C)
    assert greedy_gamma_bound(k, C, 1, 0.1) == pytest.approx(best1, rel=1e-12)
    assert greedy_gamma_bound(RBF, C, 8, 0.1) == pytest.approx(
        mutual_information(RBF, C, 0.1), rel=1e-10)
    with pytest.raises(InputError):
        greedy_gamma_bound(RBF, C, 9, 0.1)


def test_greedy_within_submodular_factor_of_exhaustive():
    rng = np.random.default_rng(2)
    for trial in range(20):
        C = rng.uniform(size=(8, 2))
        nv = float(rng.choice([1e-3, 1e-2, 0.5]))
        best = max(mutual_information(RBF, C[list(s)], nv)
                   for s in itertools.combinations(range(8), 3))
        g = greedy_gamma_bound(RBF, C, 3, nv)
        assert g <= best + 1e-10
        assert best <= g * GREEDY_FACTOR + 1e-10
        assert greedy_gamma_bound(RBF, C, 3, nv, inflate=True) == pytest.approx(g * GREEDY_FACTOR)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_diminishing_returns(seed):
    rng = np.random.default_rng(seed)
    P = rng.uniform(size=(10, 2))
    B = list(rng.choice(9, size=int(rng.integers(1, 9)), replace=False))
    A = [i for i in B if rng.random() < 0.5]
    x = 9

    def gain(S):
        return (mutual_information(RBF, P[S + [x]], 0.05) - mutual_information(RBF, P[S], 0.05)
                if S else mutual_information(RBF, P[[x]], 0.05))

    assert gain(A) >= gain(B) - 1e-10
