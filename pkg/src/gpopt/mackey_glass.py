"""Fixed-step integration of the Mackey-Glass delay differential equation.

    dx/dt = a x(t - tau) / (1 + x(t - tau)^n) - b x(t),   x(t) = x0 for t <= 0

Integration is classical RK4, vectorized over many parameter sets at once.
For each parameter set the step is shrunk from the nominal value so that
``tau`` is an exact multiple of it; delayed values at RK4 half steps then
fall on interval midpoints and are read off the cubic Hermite interpolant
of the stored history. ``tau == 0`` integrates the plain ODE.
"""
from __future__ import annotations

import numpy as np

from .errors import InputError

# unit-box coordinate -> (low, high) for a, b, tau, n, x0, horizon
PARAM_RANGES = np.array([
    [0.1, 0.4],
    [0.05, 0.2],
    [5.0, 35.0],
    [7.0, 14.0],
    [0.5, 1.5],
    [50.0, 300.0],
])
STEP = 0.1
CHUNK = 2048


def unit_to_params(u) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[1] != 6:
        raise InputError(f"Mackey-Glass takes 6 parameters, got {u.shape[1]}")
    if np.any(u < -1e-12) or np.any(u > 1 + 1e-12):
        raise InputError("Mackey-Glass parameters must lie in the unit box")
    lo, hi = PARAM_RANGES[:, 0], PARAM_RANGES[:, 1]
    return lo + np.clip(u, 0.0, 1.0) * (hi - lo)


def _rhs(x, xd, a, b, n):
    return a * xd / (1.0 + np.abs(xd) ** n) - b * x


def _integrate_chunk(a, b, tau, n, x0, horizon, step):
    M = a.shape[0]
    cols = np.arange(M)
    ode = tau <= 0
    m = np.where(ode, 0, np.ceil(tau / step - 1e-9)).astype(int)
    h = np.where(ode, step, tau / np.maximum(m, 1))
    q = np.floor(horizon / h + 1e-12).astype(int)
    theta = horizon / h - q
    K = int(q.max()) + 1

    X = np.empty((K + 1, M))
    F = np.empty((K + 1, M))
    X[0] = x0

    def node(j):
        # history value at node j (constant x0 before time 0)
        return np.where(j < 0, x0, X[np.clip(j, 0, None), cols])

    def delayed_node(k):
        return node(k - m)

    def delayed_mid(k):
        j = k - m
        jc = np.clip(j, 0, None)
        mid = 0.5 * (X[jc, cols] + X[jc + 1, cols]) + h * (F[jc, cols] - F[jc + 1, cols]) / 8.0
        return np.where(j < 0, x0, mid)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K):
            xk = X[k]
            xd0 = np.where(ode, xk, delayed_node(k))
            F[k] = k1 = _rhs(xk, xd0, a, b, n)
            xd_mid = delayed_mid(k) if not ode.all() else None
            x2 = xk + 0.5 * h * k1
            k2 = _rhs(x2, x2 if xd_mid is None else np.where(ode, x2, xd_mid), a, b, n)
            x3 = xk + 0.5 * h * k2
            k3 = _rhs(x3, x3 if xd_mid is None else np.where(ode, x3, xd_mid), a, b, n)
            x4 = xk + h * k3
            xd1 = np.where(ode, x4, delayed_node(k + 1)) if not ode.all() else x4
            k4 = _rhs(x4, xd1, a, b, n)
            X[k + 1] = xk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        F[K] = _rhs(X[K], np.where(ode, X[K], delayed_node(K)), a, b, n)

        t = theta
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        return (h00 * X[q, cols] + h10 * h * F[q, cols]
                + h01 * X[q + 1, cols] + h11 * h * F[q + 1, cols])


def integrate(a, b, tau, n, x0, horizon, step: float = STEP) -> np.ndarray:
    """x(horizon) for each parameter set; arguments broadcast to 1-D arrays.

    ``tau`` must be 0 or at least ``step``.
    """
    a, b, tau, n, x0, horizon = (np.atleast_1d(np.asarray(v, dtype=float))
                                 for v in np.broadcast_arrays(a, b, tau, n, x0, horizon))
    if np.any((tau > 0) & (tau < step)):
        raise InputError(f"delay must be 0 or >= the step {step}")
    if np.any(horizon <= 0):
        raise InputError("horizon must be positive")
    out = np.empty(a.shape[0])
    for s in range(0, a.shape[0], CHUNK):
        sl = slice(s, s + CHUNK)
        out[sl] = _integrate_chunk(a[sl], b[sl], tau[sl], n[sl], x0[sl], horizon[sl], step)
    return out


def mackey_glass_batch(U, step: float = STEP) -> np.ndarray:
    """Final trajectory value for each row of unit-box parameters ``U``."""
    p = unit_to_params(U)
    return integrate(*p.T, step=step)


def mackey_glass(params, step: float = STEP) -> float:
    """Final trajectory value for one 6-vector of unit-box parameters."""
    return float(mackey_glass_batch(np.asarray(params, dtype=float).reshape(1, -1), step)[0])
