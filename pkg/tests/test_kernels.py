import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma, kv

from gpopt import ConfigError, InputError, Kernel, kernel_eval
from gpopt.gp import factorize


def matern_reference(r, nu):
    # textbook form through scipy's general Bessel K
    r = np.asarray(r, float)
    s = np.sqrt(2 * nu) * r
    out = np.ones_like(s)
    pos = s > 0
    out[pos] = 2 ** (1 - nu) / gamma(nu) * s[pos] ** nu * kv(nu, s[pos])
    return out


def test_rbf_identity_and_unit_distance():
    k = Kernel("rbf", 1.0)
    assert kernel_eval(k, [0.3, -2.0], [0.3, -2.0]) == 1.0
    assert kernel_eval(k, [0.0, 0.0], [1.0, 0.0]) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert kernel_eval(k, [0.0], [1.0]) == pytest.approx(0.60653, abs=1e-5)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.0, 4.0, 1.2])
def test_matern_matches_bessel_form(nu):
    r = np.linspace(0.0, 12.0, 400)
    X = np.c_[r, np.zeros_like(r)]
    got = Kernel("matern", 1.0, nu)(np.zeros((1, 2)), X)[0]
    assert np.max(np.abs(got - matern_reference(r, nu))) < 1e-12


def test_matern_nu3_decays_monotonically_to_zero():
    k = Kernel("matern", 1.0, 3.0)
    r = np.linspace(0.0, 60.0, 3001)
    v = k(np.zeros((1, 1)), r[:, None])[0]
    assert v[0] == 1.0
    assert np.all(np.diff(v) <= 0)
    assert v[-1] < 1e-20


def test_linear_kernel():
    k = Kernel("linear", length_scale=2.0)
    assert kernel_eval(k, [1.0, 2.0], [3.0, -1.0]) == pytest.approx(1.0 / 4.0)
    X = np.random.default_rng(0).normal(size=(5, 3))
    assert np.allclose(k.diag(X), np.diag(k(X)))


@pytest.mark.parametrize("bad", [dict(length_scale=0.0), dict(length_scale=-1.0),
                                 dict(output_scale=0.0), dict(family="cosine"),
                                 dict(family="matern", nu=0.0)])
def test_bad_hyperparameters(bad):
    with pytest.raises(ConfigError):
        Kernel(**bad)


def test_dimension_mismatch():
    with pytest.raises(InputError):
        kernel_eval(Kernel(), [0.0, 1.0], [0.0])
    with pytest.raises(InputError):
        Kernel()(np.zeros((2, 2)), np.zeros((2, 3)))


kernels = st.sampled_from([Kernel("rbf", 0.3), Kernel("rbf", 2.0), Kernel("matern", 0.7, 3.0),
                           Kernel("matern", 1.0, 1.5), Kernel("matern", 0.4, 2.5)])


@settings(max_examples=60, deadline=None)
@given(kernels, st.integers(1, 30), st.integers(1, 5), st.integers(0, 2**31))
def test_gram_symmetric_bounded_and_psd(kernel, n, d, seed):
    X = np.random.default_rng(seed).uniform(-2, 2, size=(n, d))
    K = kernel(X)
    assert np.array_equal(K, K.T)
    assert np.all(K <= 1.0) and np.all(np.diag(K) == 1.0)
    L, jitter = factorize(K, 1.0, 1e-10)
    assert jitter <= 1e-6
    assert np.all(np.isfinite(L))
