"""Benchmark objectives for maximization.

Every objective is materialized on a finite candidate grid. Grid values are
standardized to zero mean and unit variance (an increasing affine map, so
the argmax is unchanged) and regret is measured in those units.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import grids
from .errors import InputError
from .gp import JITTER_START, factorize, sample_gp
from .kernels import Kernel, as_points
from .mackey_glass import mackey_glass_batch

logger = logging.getLogger(__name__)

BRANIN_BOX = np.array([[-5.0, 10.0], [0.0, 15.0]])
GOLDSTEIN_BOX = np.array([[-2.0, 2.0], [-2.0, 2.0]])
HIMMELBLAU_BOX = np.array([[-5.0, 5.0], [-5.0, 5.0]])
MIXTURE_BOX = np.array([[0.0, 1.0], [0.0, 1.0]])
HIMMELBLAU_TILT = 0.5

# (center_x, center_y, height, width); the highest peak is the thin one
MIXTURE_BUMPS = (
    (0.25, 0.30, 0.65, 0.18),
    (0.70, 0.75, 0.80, 0.12),
    (0.80, 0.20, 1.00, 0.035),
)
MIXTURE_PERTURBATION = 0.05
MIXTURE_PERTURBATION_KERNEL = Kernel("matern", length_scale=0.25, nu=3.0)
MIXTURE_PERTURBATION_LATTICE = 41


def _check_box(X, box):
    X = as_points(X, box.shape[0])
    if np.any(X < box[:, 0] - 1e-12) or np.any(X > box[:, 1] + 1e-12):
        raise InputError(f"point outside the domain {box.tolist()}")
    return X


def branin(x):
    """Negated Branin-Hoo on [-5, 10] x [0, 15]; max 0.397887 at three points."""
    X = _check_box(x, BRANIN_BOX)
    x1, x2 = X[:, 0], X[:, 1]
    b = 5.1 / (4 * math.pi**2)
    c = 5 / math.pi
    t = 1 / (8 * math.pi)
    val = (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10
    return -val


def goldstein_price_raw(x):
    """The Goldstein-Price function itself (a minimization target, >= 3)."""
    X = _check_box(x, GOLDSTEIN_BOX)
    x1, x2 = X[:, 0], X[:, 1]
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1**2 - 14 * x2 + 6 * x1 * x2 + 3 * x2**2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1**2 + 48 * x2 - 36 * x1 * x2
                                       + 27 * x2**2)
    return a * b


def goldstein_price(x):
    """Negated log of Goldstein-Price; max -log(3) at (0, -1)."""
    return -np.log(goldstein_price_raw(x))


def himmelblau_tilted(x, tilt: float = HIMMELBLAU_TILT):
    """Negated Himmelblau plus a linear tilt ``tilt * (x + y)``."""
    X = _check_box(x, HIMMELBLAU_BOX)
    x1, x2 = X[:, 0], X[:, 1]
    return -((x1**2 + x2 - 11) ** 2 + (x1 + x2**2 - 7) ** 2 + tilt * (x1 + x2))


@dataclass(eq=False)
class Objective:
    """A black-box maximization target on a compact box.

    ``values`` holds the standardized true function on ``grid``;
    ``noise_std`` is expressed in the same standardized units.
    """

    name: str
    box: np.ndarray
    grid: np.ndarray
    values: np.ndarray
    noise_std: float = 0.0
    func: Callable | None = None
    shift: float = 0.0
    scale: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.max_index = int(np.argmax(self.values))
        self.max_value = float(self.values[self.max_index])
        self._index = {row.tobytes(): i for i, row in enumerate(self.grid)}
        for a in (self.box, self.grid, self.values):
            a.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.grid.shape[1]

    @property
    def max_point(self) -> np.ndarray:
        return self.grid[self.max_index]

    @property
    def raw_values(self) -> np.ndarray:
        return self.values * self.scale + self.shift

    def grid_index(self, x) -> int | None:
        x = np.asarray(x, dtype=float).reshape(-1)
        return self._index.get(x.tobytes())

    def nearest_index(self, x) -> int:
        x = np.asarray(x, dtype=float).reshape(-1)
        return int(np.argmin(((self.grid - x) ** 2).sum(axis=1)))

    def eval(self, x) -> float:
        """Standardized true value at one point.

        Grid points return the cached grid value. Off-grid points are
        computed from the closed form when there is one, otherwise from the
        nearest grid point.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise InputError(f"dimension mismatch: expected {self.dim}, got {x.shape[0]}")
        _check_box(x, self.box)
        i = self.grid_index(x)
        if i is not None:
            return float(self.values[i])
        if self.func is None:
            return float(self.values[self.nearest_index(x)])
        return float((self.func(x[None, :])[0] - self.shift) / self.scale)

    def regret(self, x) -> float:
        return self.max_value - self.eval(x)


def make_objective(name, box, grid, raw_values, noise_fraction=0.0, func=None,
                   metadata=None) -> Objective:
    """Standardize grid values and wrap them as an :class:`Objective`.

    ``noise_fraction`` is the noise standard deviation as a fraction of the
    grid standard deviation of the raw values.
    """
    raw_values = np.asarray(raw_values, dtype=float)
    shift = float(raw_values.mean())
    scale = float(raw_values.std())
    if not scale > 0:
        raise InputError(f"objective {name!r} is constant on its grid")
    values = (raw_values - shift) / scale
    return Objective(name, np.asarray(box, float).copy(), np.asarray(grid, float).copy(),
                     values, float(noise_fraction), func, shift, scale, dict(metadata or {}))


def branin_objective(points_per_axis: int = 101) -> Objective:
    grid = grids.lattice(BRANIN_BOX, points_per_axis)
    return make_objective("branin", BRANIN_BOX, grid, branin(grid), 0.0, branin)


def goldstein_price_objective(points_per_axis: int = 101) -> Objective:
    grid = grids.lattice(GOLDSTEIN_BOX, points_per_axis)
    return make_objective("goldstein_price", GOLDSTEIN_BOX, grid, goldstein_price(grid),
                          0.0, goldstein_price, {"transform": "-log(value)"})


def himmelblau_objective(points_per_axis: int = 101, tilt: float = HIMMELBLAU_TILT) -> Objective:
    grid = grids.lattice(HIMMELBLAU_BOX, points_per_axis)

    def f(x):
        return himmelblau_tilted(x, tilt)

    return make_objective("himmelblau", HIMMELBLAU_BOX, grid, f(grid), 0.0, f, {"tilt": tilt})


def _bumps(X, bumps):
    out = np.zeros(X.shape[0])
    for cx, cy, height, width in bumps:
        r2 = (X[:, 0] - cx) ** 2 + (X[:, 1] - cy) ** 2
        out += height * np.exp(-0.5 * r2 / width**2)
    return out


def gaussian_mixture(seed: int = 0, bumps=MIXTURE_BUMPS,
                     perturbation: float = MIXTURE_PERTURBATION,
                     points_per_axis: int = 101, box=MIXTURE_BOX) -> Objective:
    """Three 2-D Gaussian bumps plus a smooth GP perturbation.

    The perturbation is an exact Matern draw on a coarse lattice scaled to
    standard deviation ``perturbation`` and interpolated by a bicubic
    spline, so the objective can be evaluated anywhere in the box.
    """
    box = np.asarray(box, dtype=float)
    n = MIXTURE_PERTURBATION_LATTICE
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    coarse = grids.lattice(box, n)
    draw = sample_gp(MIXTURE_PERTURBATION_KERNEL, coarse, seed) * perturbation
    spline = RectBivariateSpline(axes[0], axes[1], draw.reshape(n, n), kx=3, ky=3)
    bumps = tuple(tuple(b) for b in bumps)

    def f(x):
        X = _check_box(x, box)
        return _bumps(X, bumps) + spline(X[:, 0], X[:, 1], grid=False)

    grid = grids.lattice(box, points_per_axis)
    meta = {"seed": seed, "bumps": [list(b) for b in bumps], "perturbation": perturbation}
    return make_objective("gaussian_mixture", box, grid, f(grid), 0.01, f, meta)


GENERATED_GP = {
    2: {"extent": 10.0, "points_per_axis": 64, "length_scale": 1.0},
    4: {"extent": 40.0, "points_per_axis": 8, "length_scale": 16.0},
}


@functools.lru_cache(maxsize=4)
def _generated_prior(d: int):
    layout = GENERATED_GP[d]
    box = np.array([[0.0, layout["extent"]]] * d)
    grid = grids.lattice(box, layout["points_per_axis"])
    kernel = Kernel("matern", length_scale=layout["length_scale"], nu=3.0)
    L, _ = factorize(kernel(grid), kernel.output_scale, JITTER_START)
    L.flags.writeable = False
    return box, grid, kernel, L


def generated_gp(d: int, seed: int = 0) -> Objective:
    """A Matern(nu=3) GP draw on a lattice; defined on grid points only.

    Same draw as ``sample_gp(kernel, grid, seed)``; the factor of the grid
    covariance is cached per dimension.
    """
    if d not in GENERATED_GP:
        raise InputError(f"generated GP supports d in {sorted(GENERATED_GP)}, got {d}")
    layout = GENERATED_GP[d]
    box, grid, kernel, L = _generated_prior(d)
    draw = L @ np.random.default_rng(seed).standard_normal(grid.shape[0])
    meta = {"seed": seed, "kernel": kernel, **layout}
    return make_objective(f"generated_gp_d{d}", box.copy(), grid.copy(), draw, 0.01, None, meta)


def mackey_glass_objective(seed: int = 0, n_points: int = 4096) -> Objective:
    """Mackey-Glass final value over 6 unit-box parameters (Sobol grid)."""
    box = np.array([[0.0, 1.0]] * 6)
    grid = grids.sobol(box, n_points, seed)
    raw = mackey_glass_batch(grid)
    bad = ~np.isfinite(raw)
    if bad.any():
        logger.warning("Mackey-Glass: %d non-finite trajectories scored as floor", int(bad.sum()))
        good = raw[~bad]
        raw = np.where(bad, good.min() - (good.max() - good.min()), raw)
    meta = {"seed": seed, "nonfinite": int(bad.sum()), "reconstructed": True}
    return make_objective("mackey_glass", box, grid, raw, 0.0, mackey_glass_batch, meta)


def export_grid(obj: Objective, path, raw: bool = False):
    """Write the grid and its values as CSV with columns x1..xd, f."""
    from .harness import fmt  # local import: harness depends on this module

    values = obj.raw_values if raw else obj.values
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join([f"x{j + 1}" for j in range(obj.dim)] + ["f"]) + "\n")
        for x, v in zip(obj.grid, values):
            fh.write(",".join(fmt(c) for c in (*x, v)) + "\n")
    return path


def evaluate_noisy(obj: Objective, x, rng: np.random.Generator) -> float:
    """True value plus Gaussian noise drawn from ``rng``."""
    value = obj.eval(x)
    if obj.noise_std == 0:
        return value
    return value + obj.noise_std * float(rng.standard_normal())


TASKS = ("generated_gp_d2", "generated_gp_d4", "gaussian_mixture", "himmelblau",
         "branin", "goldstein_price", "mackey_glass")


def build(name: str, seed: int = 0, **kwargs) -> Objective:
    """Construct a benchmark task by name."""
    if name == "generated_gp_d2":
        return generated_gp(2, seed)
    if name == "generated_gp_d4":
        return generated_gp(4, seed)
    if name == "gaussian_mixture":
        return gaussian_mixture(seed, **kwargs)
    if name == "himmelblau":
        return himmelblau_objective(**kwargs)
    if name == "branin":
        return branin_objective(**kwargs)
    if name == "goldstein_price":
        return goldstein_price_objective(**kwargs)
    if name == "mackey_glass":
        return mackey_glass_objective(seed, **kwargs)
    raise InputError(f"unknown objective {name!r}; choose from {', '.join(TASKS)}")
