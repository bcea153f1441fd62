"""Covariance functions.

All kernels are stationary or dot-product kernels over points in R^d and
evaluate whole Gram blocks at once. Points are passed as arrays of shape
``(n, d)``; a single point may be passed as a 1-D array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gamma as gamma_fn
from scipy.special import k0e, k1e, kv

from .errors import ConfigError, InputError

FAMILIES = ("rbf", "matern", "linear")


def as_points(X, dim: int | None = None) -> np.ndarray:
    """Coerce ``X`` to a float array of shape ``(n, d)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise InputError(f"points must be 1-D or 2-D, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise InputError(f"dimension mismatch: expected {dim}, got {X.shape[1]}")
    return X


def _matern(r: np.ndarray, nu: float) -> np.ndarray:
    # r is already divided by the length scale
    if nu == 0.5:
        return np.exp(-r)
    if nu == 1.5:
        s = np.sqrt(3.0) * r
        return (1.0 + s) * np.exp(-s)
    if nu == 2.5:
        s = np.sqrt(5.0) * r
        return (1.0 + s + s * s / 3.0) * np.exp(-s)
    s = np.sqrt(2.0 * nu) * r
    out = np.ones_like(s)
    pos = s > 1e-12
    sp = s[pos]
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        if float(nu).is_integer():
            bessel = _kv_integer_scaled(int(nu), sp) * np.exp(-sp)
        else:
            bessel = kv(nu, sp)
        vals = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * sp**nu * bessel
    # far away the Bessel factor underflows and the product is 0 or nan
    vals = np.where(np.isfinite(vals), vals, 0.0)
    out[pos] = np.clip(vals, 0.0, 1.0)
    return out


def _kv_integer_scaled(nu: int, s: np.ndarray) -> np.ndarray:
    """exp(s) * K_nu(s) for integer nu by upward recurrence from K_0, K_1."""
    prev, cur = k0e(s), k1e(s)
    if nu == 0:
        return prev
    for m in range(1, nu):
        prev, cur = cur, prev + (2.0 * m / s) * cur
    return cur


@dataclass(frozen=True)
class Kernel:
    """A covariance function descriptor.

    Parameters
    ----------
    family : {"rbf", "matern", "linear"}
        ``rbf`` is exp(-|x - x'|^2 / 2 l^2). ``matern`` uses the standard
        smoothness parameterization with ``nu``. ``linear`` is
        x . x' / l^2.
    length_scale : float
        Positive length scale ``l``.
    nu : float
        Matern smoothness; ignored by the other families.
    output_scale : float
        Prior variance multiplier; k(x, x) == output_scale for the
        stationary families.
    """

    family: str = "rbf"
    length_scale: float = 1.0
    nu: float = 2.5
    output_scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.length_scale) and self.length_scale > 0):
            raise ConfigError(f"length scale must be positive, got {self.length_scale}")
        if not (np.isfinite(self.output_scale) and self.output_scale > 0):
            raise ConfigError(f"output scale must be positive, got {self.output_scale}")
        if self.family == "matern" and not self.nu > 0:
            raise ConfigError(f"matern nu must be positive, got {self.nu}")

    def __call__(self, X1, X2=None) -> np.ndarray:
        X1 = as_points(X1)
        X2 = X1 if X2 is None else as_points(X2)
        if X1.shape[1] != X2.shape[1]:
            raise InputError(f"dimension mismatch: {X1.shape[1]} vs {X2.shape[1]}")
        l = self.length_scale
        if self.family == "linear":
            return self.output_scale * (X1 @ X2.T) / (l * l)
        if self.family == "rbf":
            d2 = cdist(X1, X2, "sqeuclidean")
            return self.output_scale * np.exp(-0.5 * d2 / (l * l))
        r = cdist(X1, X2, "euclidean") / l
        return self.output_scale * _matern(r, self.nu)

    def diag(self, X) -> np.ndarray:
        """k(x, x) for every row of ``X``."""
        X = as_points(X)
        if self.family == "linear":
            return self.output_scale * np.einsum("ij,ij->i", X, X) / self.length_scale**2
        return np.full(X.shape[0], float(self.output_scale))


def kernel_eval(kernel: Kernel, x, x_prime) -> float:
    """Covariance between two single points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != x_prime.shape or x.ndim != 1:
        raise InputError(f"dimension mismatch: {x.shape} vs {x_prime.shape}")
    return float(kernel(x, x_prime)[0, 0])
