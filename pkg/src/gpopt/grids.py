"""Finite candidate sets over a box domain."""
from __future__ import annotations

import numpy as np
from scipy.stats import qmc

from .errors import ConfigError


def lattice(box, points_per_axis: int) -> np.ndarray:
    """Uniform tensor lattice, first axis varying slowest."""
    box = np.asarray(box, dtype=float)
    if points_per_axis < 1:
        raise ConfigError("points_per_axis must be >= 1")
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sobol(box, n_points: int, seed: int = 0) -> np.ndarray:
    """Scrambled Sobol points mapped into ``box``."""
    box = np.asarray(box, dtype=float)
    m = int(np.ceil(np.log2(max(n_points, 1))))
    sampler = qmc.Sobol(d=box.shape[0], scramble=True, seed=seed)
    u = sampler.random_base2(m)[:n_points]
    return qmc.scale(u, box[:, 0], box[:, 1])


def default_grid(box, kind: str | None = None, points_per_axis: int = 101,
                 n_points: int = 4096, seed: int = 0) -> np.ndarray:
    """Lattice for d <= 2, scrambled Sobol for d > 2 unless ``kind`` says otherwise."""
    box = np.asarray(box, dtype=float)
    if kind is None:
        kind = "lattice" if box.shape[0] <= 2 else "sobol"
    if kind == "lattice":
        return lattice(box, points_per_axis)
    if kind == "sobol":
        return sobol(box, n_points, seed)
    raise ConfigError(f"unknown grid kind {kind!r}")
