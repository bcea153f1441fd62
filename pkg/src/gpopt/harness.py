"""Multi-trial benchmark runner.

A run is a pure function of its :class:`ExperimentConfig`: every random
stream is derived from ``master_seed`` (and the trial index) through
``numpy.random.SeedSequence``.
"""
from __future__ import annotations

import csv
import functools
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import objectives
from .errors import ConfigError, InputError, NumericalError
from .gp import fit_posterior
from .kernels import Kernel
from .objectives import Objective, evaluate_noisy
from .policies import KINDS, Policy

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-4
PRESAMPLE = 200
CV_FOLDS = 5
CV_GRID = 16
Z95 = 1.96


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines one experiment.

    ``hyper_mode`` is ``"cv"`` (RBF length scale by cross-validation on a
    separate pre-sample) or ``"fixed"`` (use ``kernel``; when ``kernel`` is
    None the task's true prior is used if it has one). ``noise_var`` is the
    model noise variance; None means ``max(noise_std**2, 1e-4)`` in
    standardized units.
    """

    objective: str = "himmelblau"
    objective_seed: int = 0
    policy: str = "gpmi"
    delta: float = 1e-6
    horizon: int = 200
    trials: int = 100
    init_observations: int = 10
    points_per_axis: int | None = None
    hyper_mode: str | None = None
    kernel: Kernel | None = None
    noise_var: float | None = None
    master_seed: int = 0

    def __post_init__(self):
        if self.policy not in KINDS:
            raise ConfigError(f"unknown policy {self.policy!r}; choose from {', '.join(KINDS)}")
        if self.objective not in objectives.TASKS:
            raise ConfigError(f"unknown objective {self.objective!r}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.horizon < 0 or self.trials < 1 or self.init_observations < 0:
            raise ConfigError("horizon >= 0, trials >= 1 and init_observations >= 0 required")
        if self.hyper_mode not in (None, "cv", "fixed"):
            raise ConfigError(f"hyper_mode must be 'cv' or 'fixed', got {self.hyper_mode!r}")
        if self.noise_var is not None and not self.noise_var > 0:
            raise ConfigError("noise_var must be positive")


class Step(NamedTuple):
    t: int
    index: int
    x: np.ndarray
    y: float
    regret: float
    cum_regret: float
    gamma_hat: float
    phi: float
    sigma2: float
    sigma2_opt: float  # posterior variance at the true argmax, before the update


@dataclass
class RegretTrace:
    task: str
    policy: str
    trial: int
    trial_seed: int
    alpha: float
    init_indices: np.ndarray
    init_y: np.ndarray
    steps: list = field(default_factory=list)
    failed: bool = False
    error: str = ""

    @property
    def horizon(self) -> int:
        return len(self.steps)

    @property
    def cum_regret(self) -> float:
        return self.steps[-1].cum_regret if self.steps else 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.steps], dtype=float)

    @property
    def queries(self) -> np.ndarray:
        return np.array([s.x for s in self.steps])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    objective: Objective
    kernel: Kernel
    noise_var: float
    traces: list

    @property
    def failures(self) -> list:
        return [t for t in self.traces if t.failed]

    def manifest(self) -> dict:
        cfg = asdict(self.config)
        cfg["kernel"] = _kernel_dict(self.config.kernel)
        return {
            "config": cfg,
            "objective": {
                "name": self.objective.name,
                "dim": self.objective.dim,
                "grid_size": int(self.objective.grid.shape[0]),
                "max_value": self.objective.max_value,
                "max_point": self.objective.max_point.tolist(),
                "noise_std": self.objective.noise_std,
                "standardization": {"shift": self.objective.shift, "scale": self.objective.scale},
                "metadata": {k: (_kernel_dict(v) if isinstance(v, Kernel) else v)
                             for k, v in self.objective.metadata.items()},
            },
            "kernel": _kernel_dict(self.kernel),
            "noise_var": self.noise_var,
            "hyper_mode": resolved_hyper_mode(self.config),
            "init_protocol": ("uniform without replacement from the grid, "
                              "shared across policies per trial"),
            "ei_incumbent": "best noisy observation",
            "ucb_beta": "2 log(n t^2 pi^2 / (6 delta))",
            "ci": "normal approximation, mean +/- 1.96 s / sqrt(n)",
            "failed_trials": [{"trial": t.trial, "error": t.error} for t in self.failures],
        }


def _kernel_dict(kernel):
    return None if kernel is None else asdict(kernel)


# -- objective and kernel resolution ------------------------------------
@functools.lru_cache(maxsize=16)
def _objective(name, seed, points_per_axis):
    kwargs = {}
    if points_per_axis is not None and name in ("himmelblau", "branin", "goldstein_price",
                                                "gaussian_mixture"):
        kwargs["points_per_axis"] = points_per_axis
    return objectives.build(name, seed, **kwargs)


def load_objective(config: ExperimentConfig) -> Objective:
    return _objective(config.objective, config.objective_seed, config.points_per_axis)


def resolved_hyper_mode(config: ExperimentConfig) -> str:
    if config.hyper_mode is not None:
        return config.hyper_mode
    if config.kernel is not None or config.objective.startswith("generated_gp"):
        return "fixed"
    return "cv"


def model_noise_var(config: ExperimentConfig, objective: Objective) -> float:
    if config.noise_var is not None:
        return config.noise_var
    return max(objective.noise_std**2, NOISE_FLOOR)


def domain_diameter(box) -> float:
    box = np.asarray(box, dtype=float)
    return float(np.sqrt(((box[:, 1] - box[:, 0]) ** 2).sum()))


def estimate_hyperparams(X, y, noise_var: float, diameter: float, seed: int = 0,
                         folds: int = CV_FOLDS, n_grid: int = CV_GRID) -> Kernel:
    """Pick an RBF length scale by k-fold cross-validated squared error.

    Candidates are ``n_grid`` log-spaced values in [1e-2, 1e2] * diameter;
    ties go to the smaller length scale.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 10:
        raise ConfigError(f"need at least 10 samples for cross-validation, got {X.shape[0]}")
    if np.ptp(y) == 0 or np.all(X == X[0]):
        raise ConfigError("degenerate samples: constant values or identical points")
    order = np.random.default_rng(seed).permutation(X.shape[0])
    splits = np.array_split(order, folds)
    scales = np.logspace(-2, 2, n_grid) * diameter
    errors = np.empty(n_grid)
    for j, l in enumerate(scales):
        kernel = Kernel("rbf", length_scale=float(l))
        sse = 0.0
        try:
            for test in splits:
                train = np.setdiff1d(order, test)
                post = fit_posterior(kernel, X[train], y[train], noise_var)
                sse += float(((post.mean(X[test]) - y[test]) ** 2).sum())
        except NumericalError:
            sse = np.inf
        errors[j] = sse
    best = int(np.argmin(errors))
    logger.info("cv length scale %.4g (sse %.4g)", scales[best], errors[best])
    return Kernel("rbf", length_scale=float(scales[best]))


def resolve_kernel(config: ExperimentConfig, objective: Objective, noise_var: float) -> Kernel:
    if resolved_hyper_mode(config) == "fixed":
        if config.kernel is not None:
            return config.kernel
        if "kernel" in objective.metadata:
            return objective.metadata["kernel"]
        raise ConfigError(f"hyper_mode=fixed needs a kernel for {objective.name!r}")
    ss = np.random.SeedSequence(config.master_seed, spawn_key=(2**32 - 1,))
    rng_idx, rng_noise, rng_folds = (np.random.default_rng(s) for s in ss.spawn(3))
    n = objective.grid.shape[0]
    idx = rng_idx.choice(n, size=min(PRESAMPLE, n), replace=False)
    y = np.array([evaluate_noisy(objective, objective.grid[i], rng_noise) for i in idx])
    seed = int(rng_folds.integers(2**31))
    return estimate_hyperparams(objective.grid[idx], y, noise_var,
                                domain_diameter(objective.box), seed)


# -- trials --------------------------------------------------------------
def trial_streams(master_seed: int, trial_index: int):
    """(trial seed, init rng, noise rng) for one trial."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    init_ss, noise_ss = ss.spawn(2)
    return (int(ss.generate_state(1)[0]), np.random.default_rng(init_ss),
            np.random.default_rng(noise_ss))


def run_trial(config: ExperimentConfig, trial_index: int, objective: Objective | None = None,
              kernel: Kernel | None = None, noise_var: float | None = None) -> RegretTrace:
    """One initialization plus ``config.horizon`` select/observe steps."""
    if objective is None:
        objective = load_objective(config)
    if noise_var is None:
        noise_var = model_noise_var(config, objective)
    if kernel is None:
        kernel = resolve_kernel(config, objective, noise_var)
    grid = objective.grid
    trial_seed, init_rng, noise_rng = trial_streams(config.master_seed, trial_index)
    n_init = min(config.init_observations, grid.shape[0])
    init_idx = init_rng.choice(grid.shape[0], size=n_init, replace=False)
    init_y = np.array([evaluate_noisy(objective, grid[i], noise_rng) for i in init_idx])

    policy = Policy(config.policy, grid, config.delta)
    trace = RegretTrace(objective.name, config.policy, trial_index, trial_seed,
                        policy.alpha, init_idx, init_y)
    if n_init:
        policy.incumbent = float(init_y.max())
    opt = objective.max_index
    cum, comp = 0.0, 0.0
    try:
        posterior = fit_posterior(kernel, grid[init_idx], init_y, noise_var, probes=grid)
        for t in range(1, config.horizon + 1):
            x = policy.select_next(posterior)
            i = policy.pending_index
            sigma2_opt = float(posterior.grid_variance[opt])
            y = evaluate_noisy(objective, x, noise_rng)
            regret = objective.max_value - float(objective.values[i])
            # Kahan-compensated running sum
            yk = regret - comp
            s = cum + yk
            comp = (s - cum) - yk
            cum = s
            phi, sigma2 = policy.last_phi, policy.last_var
            posterior = policy.observe(x, y, posterior)
            trace.steps.append(Step(t, i, x, y, regret, cum, policy.gamma_hat, phi,
                                    sigma2, sigma2_opt))
    except NumericalError as exc:
        logger.error("trial %d failed: %s", trial_index, exc)
        trace.failed = True
        trace.error = str(exc)
    return trace


def run_experiment(config: ExperimentConfig, trial_indices=None) -> ExperimentResult:
    objective = load_objective(config)
    noise_var = model_noise_var(config, objective)
    kernel = resolve_kernel(config, objective, noise_var)
    if trial_indices is None:
        trial_indices = range(config.trials)
    traces = [run_trial(config, k, objective, kernel, noise_var) for k in trial_indices]
    return ExperimentResult(config, objective, kernel, noise_var, traces)


# -- aggregation ---------------------------------------------------------
@dataclass
class AggregateTable:
    task: str
    policy: str
    t: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n: int


def aggregate(traces) -> AggregateTable:
    """Per-step mean of R_t / t with a 95% normal-approximation interval."""
    good = [tr for tr in traces if not tr.failed]
    if len(good) < 2:
        raise InputError(f"need at least 2 successful traces, got {len(good)}")
    horizons = {tr.horizon for tr in good}
    if len(horizons) != 1:
        raise InputError(f"traces have mixed horizons {sorted(horizons)}")
    T = horizons.pop()
    t = np.arange(1, T + 1)
    avg = np.array([tr.column("cum_regret") / t for tr in good]).reshape(len(good), T)
    n = len(good)
    mean = avg.mean(axis=0)
    half = Z95 * avg.std(axis=0, ddof=1) / math.sqrt(n)
    return AggregateTable(good[0].task, good[0].policy, t, mean, mean - half, mean + half, n)


# -- CSV export ----------------------------------------------------------
TRACE_HEAD = ["task", "policy", "trial", "t"]
TRACE_TAIL = ["y", "regret", "cum_regret", "avg_regret", "gamma_hat", "phi_at_query",
              "sigma2_at_query"]
AGGREGATE_COLUMNS = ["task", "policy", "t", "avg_regret_mean", "ci_lower", "ci_upper",
                     "n_trials"]


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def trace_columns(dim: int) -> list:
    return TRACE_HEAD + [f"x{j + 1}" for j in range(dim)] + TRACE_TAIL


def _open(path):
    path = Path(path)
    try:
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_traces(traces, path, dim: int | None = None) -> Path:
    """One row per (trial, t) for every successful step of every trace."""
    traces = list(traces)
    if dim is None:
        dim = next((len(s.x) for tr in traces for s in tr.steps), 0)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_columns(dim))
        for tr in traces:
            for s in tr.steps:
                w.writerow([tr.task, tr.policy, tr.trial, s.t, *map(fmt, s.x), fmt(s.y),
                            fmt(s.regret), fmt(s.cum_regret), fmt(s.cum_regret / s.t),
                            fmt(s.gamma_hat), fmt(s.phi), fmt(s.sigma2)])
    return Path(path)


def write_aggregates(tables, path) -> Path:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for tab in tables:
            for k in range(len(tab.t)):
                w.writerow([tab.task, tab.policy, int(tab.t[k]), fmt(tab.mean[k]),
                            fmt(tab.lower[k]), fmt(tab.upper[k]), tab.n])
    return Path(path)


def export_csv(data, path) -> Path:
    """Write traces (a list of :class:`RegretTrace`) or aggregate tables."""
    data = [data] if isinstance(data, (AggregateTable, RegretTrace)) else list(data)
    if data and all(isinstance(d, AggregateTable) for d in data):
        return write_aggregates(data, path)
    if all(isinstance(d, RegretTrace) for d in data):
        return write_traces(data, path) if data else write_aggregates([], path)
    raise InputError("export_csv takes RegretTrace or AggregateTable items")


def read_csv(path) -> list:
    """Rows as dicts with numeric fields parsed back to int/float."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        parsed = {}
        for k, v in row.items():
            if k in ("task", "policy"):
                parsed[k] = v
            elif k in ("trial", "t", "n_trials"):
                parsed[k] = int(v)
            else:
                parsed[k] = float(v)
        out.append(parsed)
    return out


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
