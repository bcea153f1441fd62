"""Mutual-information quantities for GP optimization.

The information gained about ``f`` by noisy observations at a set ``X`` is
``I(X) = 1/2 log det(I + K_X / noise_var)``. The running sum of posterior
variances at the queried points (``gamma_hat``) is bounded by
``c1(noise_var) * I(X_T)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from .errors import ConfigError, InputError, NumericalError
from .gp import extend_posterior, fit_posterior
from .kernels import Kernel, as_points

GREEDY_FACTOR = 1.0 / (1.0 - 1.0 / math.e)


def mutual_information(kernel: Kernel, X, noise_var: float) -> float:
    """``1/2 log det(I + K_X / noise_var)`` in nats, via Cholesky."""
    if not noise_var > 0:
        raise ConfigError(f"noise variance must be positive, got {noise_var}")
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 0.0
    X = as_points(X)
    M = np.eye(X.shape[0]) + kernel(X) / noise_var
    try:
        L = cholesky(M, lower=True)
    except LinAlgError as exc:
        raise NumericalError(f"I + K/noise_var not positive definite: {exc}") from exc
    return float(np.sum(np.log(np.diag(L))))


def c1(noise_var: float) -> float:
    """The constant 2 / log(1 + 1/noise_var)."""
    if not noise_var > 0:
        raise ConfigError(f"noise variance must be positive, got {noise_var}")
    return 2.0 / math.log1p(1.0 / noise_var)


@dataclass(frozen=True)
class InfoAccumulator:
    """Running sum of posterior variances at the queried points.

    Summation is Kahan-compensated so the total does not depend on how the
    history would be reassociated.
    """

    gamma_hat: float = 0.0
    history: tuple = ()
    _comp: float = field(default=0.0, repr=False)

    def add(self, variance: float) -> "InfoAccumulator":
        variance = float(variance)
        if not variance >= 0:
            raise InputError(f"posterior variance must be >= 0, got {variance}")
        y = variance - self._comp
        s = self.gamma_hat + y
        comp = (s - self.gamma_hat) - y
        return InfoAccumulator(s, self.history + (variance,), comp)


def accumulate(acc: InfoAccumulator, variance: float) -> InfoAccumulator:
    return acc.add(variance)


def greedy_gamma_bound(kernel: Kernel, candidates, T: int, noise_var: float,
                       inflate: bool = False) -> float:
    """Greedy forward selection of ``T`` candidates maximizing ``I``.

    Each step adds the candidate with the largest posterior variance, which
    is the largest marginal gain ``1/2 log(1 + var / noise_var)``; ties go
    to the lowest index. By submodularity the greedy value is within a
    factor ``1 - 1/e`` of the best size-``T`` subset of ``candidates``.
    With ``inflate=True`` the value is divided by that factor, giving an
    upper proxy for the maximum.
    """
    candidates = as_points(candidates)
    if T > candidates.shape[0]:
        raise InputError(f"T={T} exceeds the {candidates.shape[0]} candidates")
    if not noise_var > 0:
        raise ConfigError(f"noise variance must be positive, got {noise_var}")
    state = fit_posterior(kernel, np.zeros((0, candidates.shape[1])), [], noise_var,
                          probes=candidates)
    total = 0.0
    chosen = np.zeros(candidates.shape[0], dtype=bool)
    for _ in range(T):
        var = np.where(chosen, -np.inf, state.grid_variance)
        i = int(np.argmax(var))
        total += 0.5 * math.log1p(var[i] / noise_var)
        chosen[i] = True
        state = extend_posterior(state, candidates[i], 0.0)
    return total * GREEDY_FACTOR if inflate else total
