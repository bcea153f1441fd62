"""Independent reference computations used by several test modules.

These deliberately avoid the package's factorization code: they build the
joint covariance and call ``numpy.linalg.solve`` directly.
"""
import numpy as np


def dense_posterior(kernel, X, y, noise_var, Q, jitter=0.0):
    """(mean, covariance) over ``Q`` by direct linear solves."""
    X = np.atleast_2d(X)
    C = kernel(X) + (noise_var + jitter) * np.eye(len(X))
    Kq = kernel(X, Q)
    mean = Kq.T @ np.linalg.solve(C, y)
    cov = kernel(Q) - Kq.T @ np.linalg.solve(C, Kq)
    return mean, cov


def joint_conditional(S, obs_idx, values, query_idx, extra_noise=0.0):
    """Condition a zero-mean Gaussian with covariance S on some coordinates."""
    A = S[np.ix_(obs_idx, obs_idx)] + extra_noise * np.eye(len(obs_idx))
    B = S[np.ix_(query_idx, obs_idx)]
    mean = B @ np.linalg.solve(A, values)
    cov = S[np.ix_(query_idx, query_idx)] - B @ np.linalg.solve(A, B.T)
    return mean, cov
