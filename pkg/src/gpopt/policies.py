"""Acquisition policies for sequential GP optimization.

Every policy follows the same loop: score each candidate by the posterior
mean plus an exploration bonus ``phi_t(x)``, query the argmax, observe,
update. The policies differ only in the bonus:

========== =====================================================
gpmi       sqrt(a) * (sqrt(var + gamma_hat) - sqrt(gamma_hat))
gpucb      sqrt(beta_t * var), beta_t = 2 log(n t^2 pi^2 / 6 delta)
fixedphi   sqrt(a) / 2 * var
ei         expected improvement over the best noisy observation
========== =====================================================

where ``a = log(2 / delta)`` and ``gamma_hat`` is the running sum of
posterior variances at previous queries.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, NumericalError, UsageError
from .gp import PosteriorState, extend_posterior
from .info import InfoAccumulator
from .kernels import as_points

KINDS = ("gpmi", "gpucb", "fixedphi", "ei")


def alpha_from_delta(delta: float) -> float:
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    return math.log(2.0 / delta)


def phi_gpmi(var, gamma_hat_prev: float, alpha: float):
    """GP-MI exploration bonus; works elementwise on arrays."""
    var = np.asarray(var, dtype=float)
    root = math.sqrt(gamma_hat_prev)
    # rationalized form avoids cancellation when var << gamma_hat
    return math.sqrt(alpha) * var / (np.sqrt(var + gamma_hat_prev) + root + (var == 0))


def ucb_beta(t: int, delta: float, grid_size: int) -> float:
    return 2.0 * math.log(grid_size * t * t * math.pi**2 / (6.0 * delta))


def phi_ucb(var, t: int, delta: float, grid_size: int):
    return np.sqrt(ucb_beta(t, delta, grid_size) * np.asarray(var, dtype=float))


def phi_fixed(var, alpha: float):
    return 0.5 * math.sqrt(alpha) * np.asarray(var, dtype=float)


def expected_improvement(mu, sigma, incumbent):
    """Closed-form E[max(N(mu, sigma^2) - incumbent, 0)]."""
    scalar = np.ndim(mu) == 0 and np.ndim(sigma) == 0
    mu, sigma = np.broadcast_arrays(np.atleast_1d(np.asarray(mu, float)),
                                    np.atleast_1d(np.asarray(sigma, float)))
    gap = mu - incumbent
    out = np.maximum(gap, 0.0)
    pos = sigma > 0
    if np.any(pos):
        z = gap[pos] / sigma[pos]
        out[pos] = gap[pos] * norm.cdf(z) + sigma[pos] * norm.pdf(z)
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


class Policy:
    """A stateful acquisition policy over a finite candidate set.

    Parameters
    ----------
    kind : {"gpmi", "gpucb", "fixedphi", "ei"}
    candidates : array_like, shape (n, d)
    delta : float
        Confidence parameter; ``alpha = log(2 / delta)``.

    Notes
    -----
    The loop contract is strict: ``select_next`` then ``observe`` at the
    returned point, repeated. ``gamma_hat`` is tracked for every kind so
    all traces carry it.
    """

    def __init__(self, kind: str, candidates, delta: float = 1e-6):
        if kind not in KINDS:
            raise ConfigError(f"unknown policy kind {kind!r}")
        self.kind = kind
        self.candidates = as_points(candidates)
        if self.candidates.shape[0] == 0:
            raise ConfigError("candidate set is empty")
        self.delta = float(delta)
        self.alpha = alpha_from_delta(delta)
        self.step = 1
        self.info = InfoAccumulator()
        self.incumbent = -np.inf
        self._pending = None
        self.last_phi = None  # bonus at the selected point
        self.last_var = None  # posterior variance at the selected point

    @property
    def gamma_hat(self) -> float:
        return self.info.gamma_hat

    def bonus(self, var: np.ndarray, mu: np.ndarray | None = None) -> np.ndarray:
        """Exploration term phi_t over the given variances."""
        if self.kind == "gpmi":
            return phi_gpmi(var, self.info.gamma_hat, self.alpha)
        if self.kind == "gpucb":
            return phi_ucb(var, self.step, self.delta, self.candidates.shape[0])
        if self.kind == "fixedphi":
            return phi_fixed(var, self.alpha)
        raise ConfigError("expected improvement has no additive bonus")

    def scores(self, posterior: PosteriorState):
        """Return (mean, variance, acquisition score) over the candidates."""
        if posterior.probes is not None and posterior.probes.shape == self.candidates.shape:
            mu, var = posterior.grid_mean, posterior.grid_variance
        else:
            mu, var = posterior.mean(self.candidates), posterior.variance(self.candidates)
        if self.kind == "ei":
            incumbent = self.incumbent if np.isfinite(self.incumbent) else 0.0
            score = expected_improvement(mu, np.sqrt(var), incumbent)
        else:
            score = mu + self.bonus(var)
        return mu, var, score

    def select_next(self, posterior: PosteriorState) -> np.ndarray:
        """Candidate maximizing the score; ties go to the lowest index."""
        mu, var, score = self.scores(posterior)
        bad = ~np.isfinite(score)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise NumericalError(
                f"non-finite score {score[i]} at candidate {i}: {self.candidates[i]}")
        i = int(np.argmax(score))
        self._pending = i
        self.last_var = float(var[i])
        self.last_phi = float(score[i] if self.kind == "ei" else score[i] - mu[i])
        return self.candidates[i]

    @property
    def pending_index(self):
        return self._pending

    def observe(self, x, y: float, posterior: PosteriorState) -> PosteriorState:
        """Record the observation at the last selected point.

        ``gamma_hat`` grows by the variance at ``x`` computed *before* the
        posterior is updated.
        """
        if self._pending is None:
            raise UsageError("observe called without a preceding select_next")
        if not np.array_equal(np.asarray(x, float).reshape(-1), self.candidates[self._pending]):
            raise UsageError("observe called at a point that was not just selected")
        self.info = self.info.add(self.last_var)
        self.incumbent = max(self.incumbent, float(y))
        self.step += 1
        self._pending = None
        return extend_posterior(posterior, x, y)


def select_next(policy: Policy, posterior: PosteriorState) -> np.ndarray:
    return policy.select_next(posterior)


def observe(policy: Policy, x, y: float, posterior: PosteriorState):
    posterior = policy.observe(x, y, posterior)
    return policy, posterior
