"""Exact Gaussian-process posterior inference.

A :class:`PosteriorState` is the GP posterior of a zero-mean prior after
conditioning on a set of linear observations of ``f``. Two observation
models are supported:

``"value"``
    y_t = f(x_t) + noise, the usual regression setting.
``"regret"``
    z_t = f(x_star) - f(x_t), observed without noise. The learner sees the
    instantaneous regret instead of the function value.

States are immutable. :func:`extend_posterior` appends one observation with
a rank-one update of the Cholesky factor and returns a new state.

A state can carry a fixed probe set (typically the optimizer's candidate
grid). The posterior mean and variance over the probes are then maintained
incrementally in O(t * n_probes) per extension.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from .errors import InputError, NumericalError
from .kernels import Kernel, as_points

logger = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-6
MODES = ("value", "regret")


def factorize(G: np.ndarray, scale: float = 1.0, start: float = 0.0):
    """Cholesky factor of ``G + jitter * I`` with jitter escalation.

    Starts at ``start * scale`` (no jitter when ``start`` is 0), then tries
    1e-10, 1e-9, ... 1e-6 times ``scale``.

    Returns
    -------
    L : ndarray
        Lower-triangular factor.
    jitter : float
        The jitter that was added to the diagonal.
    """
    n = G.shape[0]
    if n == 0:
        return np.zeros((0, 0)), start * scale
    levels = [start] if start > 0 else [0.0]
    j = JITTER_START
    while j <= JITTER_MAX * (1 + 1e-9):
        if j > levels[-1]:
            levels.append(j)
        j *= 10.0
    eye = np.eye(n)
    for level in levels:
        jitter = level * scale
        try:
            L = cholesky(G + jitter * eye, lower=True, check_finite=True)
        except (LinAlgError, ValueError):
            continue
        if level > max(start, JITTER_START) and level > 0:
            logger.info("cholesky needed jitter %.1e", jitter)
        return L, jitter
    try:
        cond = np.linalg.cond(G)
    except LinAlgError:
        cond = np.inf
    raise NumericalError(
        f"Gram matrix of size {n} not factorizable with jitter up to "
        f"{JITTER_MAX * scale:.1e} (condition estimate {cond:.3e})"
    )


class _Rows:
    """Append-only row storage shared by a chain of states.

    A state only ever reads rows ``[:t]`` of its buffer and rows below
    ``n`` are never rewritten, so states that share a buffer never observe
    each other's appends.
    """

    __slots__ = ("data", "n")

    def __init__(self, n_cols: int, capacity: int):
        self.data = np.empty((capacity, n_cols))
        self.n = 0

    @classmethod
    def from_array(cls, V: np.ndarray, extra: int = 16) -> "_Rows":
        rows = cls(V.shape[1], V.shape[0] + extra)
        rows.data[: V.shape[0]] = V
        rows.n = V.shape[0]
        return rows

    def appended(self, t: int, row: np.ndarray) -> "_Rows":
        if self.n == t and t < self.data.shape[0]:
            rows = self
        else:
            rows = _Rows(self.data.shape[1], max(2 * (t + 1), 16))
            rows.data[:t] = self.data[:t]
        rows.data[t] = row
        rows.n = t + 1
        return rows


class PosteriorState:
    """GP posterior after ``t`` observations.

    Use :func:`fit_posterior`, :func:`fit_regret_posterior` or
    :func:`extend_posterior` to build one; the constructor is internal.
    """

    def __init__(self, kernel, X, y, noise_var, L, w, jitter, mode="value",
                 x_star=None, probes=None, rows=None, grid_mean=None,
                 grid_var=None, n_clamped=0):
        self.kernel = kernel
        self.X = X
        self.y = y
        self.noise_var = float(noise_var)
        self.L = L
        self.w = w
        self.jitter = float(jitter)
        self.mode = mode
        self.x_star = x_star
        self.probes = probes
        self._rows = rows
        self._grid_mean = grid_mean
        self._grid_var = grid_var
        self.n_clamped = n_clamped
        for a in (X, y, L, w, grid_mean, grid_var):
            if a is not None:
                a.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def chol_factor(self) -> np.ndarray:
        return self.L

    # -- observation functionals -------------------------------------
    def _cross(self, points: np.ndarray, Q: np.ndarray) -> np.ndarray:
        """Cov(observation functionals at ``points``, f(Q)), shape (len(points), len(Q))."""
        K = self.kernel(points, Q)
        if self.mode == "regret":
            K = self.kernel(self.x_star, Q) - K
        return K

    def _check(self, Q) -> np.ndarray:
        return as_points(Q, self.dim)

    def _solve(self, Q: np.ndarray) -> np.ndarray:
        return solve_triangular(self.L, self._cross(self.X, Q), lower=True,
                                check_finite=False)

    # -- queries -----------------------------------------------------
    def mean(self, Q) -> np.ndarray:
        """Posterior mean at each row of ``Q``."""
        Q = self._check(Q)
        if self.n_obs == 0:
            return np.zeros(Q.shape[0])
        return self._solve(Q).T @ self.w

    def variance(self, Q) -> np.ndarray:
        """Posterior variance at each row of ``Q``, clamped to be >= 0."""
        Q = self._check(Q)
        prior = self.kernel.diag(Q)
        if self.n_obs == 0:
            return prior
        A = self._solve(Q)
        var = prior - np.einsum("ij,ij->j", A, A)
        neg = var < 0
        if neg.any():
            logger.debug("clamped %d negative variances", int(neg.sum()))
            var[neg] = 0.0
        return var

    def covariance(self, QA, QB=None) -> np.ndarray:
        """Posterior covariance matrix between rows of ``QA`` and ``QB``."""
        QA = self._check(QA)
        same = QB is None
        QB = QA if same else self._check(QB)
        prior = self.kernel(QA, QB)
        if self.n_obs == 0:
            return prior
        A = self._solve(QA)
        cov = prior - A.T @ (A if same else self._solve(QB))
        if same:
            # make the diagonal agree exactly with variance()
            diag = self.kernel.diag(QA) - np.einsum("ij,ij->j", A, A)
            np.fill_diagonal(cov, np.maximum(diag, 0.0))
        return cov

    # -- probe cache -------------------------------------------------
    @property
    def grid_mean(self) -> np.ndarray:
        if self.probes is None:
            raise InputError("state was built without a probe set")
        return self._grid_mean

    @property
    def grid_variance(self) -> np.ndarray:
        if self.probes is None:
            raise InputError("state was built without a probe set")
        return self._grid_var

    def gram(self) -> np.ndarray:
        """The observation Gram matrix C_t (without jitter)."""
        return _obs_gram(self.kernel, self.X, self.mode, self.x_star, self.noise_var)


def _obs_gram(kernel, X, mode, x_star, noise_var):
    K = kernel(X, X)
    if mode == "regret" and X.shape[0]:
        ks = kernel(X, x_star)[:, 0]
        kss = kernel(x_star, x_star)[0, 0]
        K = kss - ks[:, None] - ks[None, :] + K
    return K + noise_var * np.eye(X.shape[0])


def _build(kernel, X, y, noise_var, mode, x_star, probes):
    if mode not in MODES:
        raise InputError(f"unknown observation mode {mode!r}")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"{X.shape[0]} points but {y.shape[0]} observations")
    if noise_var < 0:
        raise InputError(f"noise variance must be >= 0, got {noise_var}")
    scale = kernel.output_scale
    start = 0.0 if noise_var > 0 else JITTER_START
    G = _obs_gram(kernel, X, mode, x_star, noise_var)
    L, jitter = factorize(G, scale, start)
    w = solve_triangular(L, y, lower=True) if X.shape[0] else np.zeros(0)
    state = PosteriorState(kernel, X, y, noise_var, L, w, jitter, mode, x_star)
    if probes is not None:
        probes = as_points(probes, X.shape[1])
        if X.shape[0]:
            V = state._solve(probes)
            gm = V.T @ w
            gv = kernel.diag(probes) - np.einsum("ij,ij->j", V, V)
        else:
            V = np.zeros((0, probes.shape[0]))
            gm = np.zeros(probes.shape[0])
            gv = kernel.diag(probes)
        n_clamped = int((gv < 0).sum())
        gv = np.maximum(gv, 0.0)
        probes = probes.copy()
        probes.flags.writeable = False
        state = PosteriorState(kernel, X, y, noise_var, L, w, jitter, mode,
                               x_star, probes, _Rows.from_array(V), gm, gv,
                               n_clamped)
    return state


def fit_posterior(kernel: Kernel, X, Y, noise_var: float, probes=None,
                  dim: int | None = None) -> PosteriorState:
    """Condition a zero-mean GP on noisy values ``Y`` at points ``X``.

    Parameters
    ----------
    kernel : Kernel
    X : array_like, shape (t, d)
        Query points; may be empty if ``dim`` or ``probes`` fixes d.
    Y : array_like, shape (t,)
    noise_var : float
        Observation noise variance. When 0 a 1e-10 jitter is added.
    probes : array_like, optional
        Points whose posterior mean and variance are cached and kept up to
        date by :func:`extend_posterior`.
    """
    X, Y = _coerce(X, Y, dim, probes)
    return _build(kernel, X, Y, noise_var, "value", None, probes)


def fit_regret_posterior(kernel: Kernel, x_star, X, Z, noise_var: float = 0.0,
                         probes=None) -> PosteriorState:
    """Condition f on regret observations z_t = f(x_star) - f(x_t)."""
    x_star = as_points(x_star)
    if x_star.shape[0] != 1:
        raise InputError("x_star must be a single point")
    X, Z = _coerce(X, Z, x_star.shape[1], probes)
    return _build(kernel, X, Z, noise_var, "regret", x_star.copy(), probes)


def _coerce(X, Y, dim, probes):
    Y = np.asarray(Y, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        if dim is None and X.ndim == 2 and X.shape[1] > 0:
            dim = X.shape[1]
        if dim is None and probes is not None:
            dim = as_points(probes).shape[1]
        if dim is None:
            raise InputError("cannot infer dimension of an empty design")
        X = np.zeros((0, dim))
    else:
        X = as_points(X, dim)
    return X.copy(), Y.copy()


def posterior_mean(state: PosteriorState, x) -> float:
    return float(state.mean(x)[0])


def posterior_variance(state: PosteriorState, x) -> float:
    return float(state.variance(x)[0])


def posterior_covariance(state: PosteriorState, x, x_prime) -> float:
    if np.array_equal(np.asarray(x, float), np.asarray(x_prime, float)):
        return posterior_variance(state, x)
    return float(state.covariance(x, x_prime)[0, 0])


def extend_posterior(state: PosteriorState, x_new, y_new: float) -> PosteriorState:
    """Append one observation via a rank-one extension of the factor.

    Falls back to a full refactorization (with jitter escalation) if the
    new pivot is not safely positive.
    """
    s = state
    x_new = as_points(x_new, s.dim)
    t = s.n_obs
    kern = s.kernel
    if s.mode == "value":
        b = kern(s.X, x_new)[:, 0]
        g_var = kern.diag(x_new)[0]
    else:
        ks_new = kern(s.x_star, x_new)[0, 0]
        kss = kern(s.x_star, s.x_star)[0, 0]
        b = kss - kern(s.X, s.x_star)[:, 0] - ks_new + kern(s.X, x_new)[:, 0]
        g_var = kss - 2.0 * ks_new + kern.diag(x_new)[0]
    l = solve_triangular(s.L, b, lower=True, check_finite=False) if t else b
    d2 = g_var + s.noise_var + s.jitter - l @ l
    if not (np.isfinite(d2) and d2 > 0.5 * (s.jitter + s.noise_var)):
        logger.info("rank-one update broke down (pivot %.3e); refactorizing", d2)
        X = np.vstack([s.X, x_new])
        y = np.append(s.y, y_new)
        return _build(kern, X, y, s.noise_var, s.mode, s.x_star, s.probes)
    d = np.sqrt(d2)
    L = np.zeros((t + 1, t + 1))
    L[:t, :t] = s.L
    L[t, :t] = l
    L[t, t] = d
    w_new = (y_new - l @ s.w) / d
    w = np.append(s.w, w_new)
    X = np.vstack([s.X, x_new])
    y = np.append(s.y, float(y_new))
    if s.probes is None:
        return PosteriorState(kern, X, y, s.noise_var, L, w, s.jitter, s.mode, s.x_star)
    c = s._cross(x_new, s.probes)[0]
    V = s._rows.data[:t]
    v = (c - l @ V) / d
    gm = s._grid_mean + v * w_new
    gv = s._grid_var - v * v
    neg = gv < 0
    n_clamped = s.n_clamped + int(neg.sum())
    if neg.any():
        gv[neg] = 0.0
    rows = s._rows.appended(t, v)
    return PosteriorState(kern, X, y, s.noise_var, L, w, s.jitter, s.mode,
                          s.x_star, s.probes, rows, gm, gv, n_clamped)


def sample_gp(kernel: Kernel, grid, seed) -> np.ndarray:
    """One exact zero-mean GP draw on ``grid``.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    grid = as_points(grid)
    L, _ = factorize(kernel(grid), kernel.output_scale, JITTER_START)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return L @ rng.standard_normal(grid.shape[0])
