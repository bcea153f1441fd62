import math

import numpy as np
import pytest
from scipy import ndimage, optimize

from gpopt import InputError, evaluate_noisy
from gpopt import objectives as ob
from gpopt.harness import read_csv


def grid_local_maxima(values, n):
    """Indices of lattice points that are >= all 8 neighbours."""
    V = values.reshape(n, n)
    peak = V == ndimage.maximum_filter(V, size=3, mode="nearest")
    return np.flatnonzero(peak.ravel())


def polish(f, x0, box):
    res = optimize.minimize(lambda x: -f(x[None, :])[0], x0, method="L-BFGS-B",
                            bounds=box.tolist(), options={"ftol": 1e-15, "gtol": 1e-12})
    return res.x, -res.fun


def branin_textbook(x1, x2):
    a, b, c = 1.0, 5.1 / (4.0 * np.pi**2), 5.0 / np.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * np.pi)
    return a * (x2 - b * x1 * x1 + c * x1 - r) ** 2 + s * (1.0 - t) * np.cos(x1) + s


# -- Branin -----------------------------------------------------------------
def test_branin_three_equal_optima():
    pts = np.array([[-math.pi, 12.275], [math.pi, 2.275], [9.42478, 2.475]])
    v = ob.branin(pts)
    assert np.ptp(v) < 1e-4
    assert v.max() == pytest.approx(-0.397887, abs=1e-6)


def test_branin_census_finds_three_global_optima():
    n = 301
    grid = ob.grids.lattice(ob.BRANIN_BOX, n)
    vals = ob.branin(grid)
    optima = []
    for i in grid_local_maxima(vals, n):
        x, v = polish(ob.branin, grid[i], ob.BRANIN_BOX)
        if not any(np.linalg.norm(x - y) < 1e-3 for y, _ in optima):
            optima.append((x, v))
    best = max(v for _, v in optima)
    assert sum(best - v < 1e-4 for _, v in optima) == 3


def test_branin_matches_textbook_formula():
    rng = np.random.default_rng(0)
    X = np.c_[rng.uniform(-5, 10, 100), rng.uniform(0, 15, 100)]
    assert np.max(np.abs(ob.branin(X) + branin_textbook(X[:, 0], X[:, 1]))) <= 1e-12


def test_branin_objective_regret_zero_at_max():
    obj = ob.branin_objective(51)
    assert obj.max_value - obj.eval(obj.max_point) == 0.0
    assert np.all(obj.values <= obj.max_value)
    with pytest.raises(InputError):
        ob.branin([[-6.0, 1.0]])


# -- Goldstein-Price ---------------------------------------------------------
def test_goldstein_price_optimum():
    assert ob.goldstein_price_raw([[0.0, -1.0]])[0] == pytest.approx(3.0, abs=1e-12)
    obj = ob.goldstein_price_objective()
    cell = 4.0 / 100
    assert np.all(np.abs(obj.max_point - [0.0, -1.0]) <= cell)
    peaks = grid_local_maxima(obj.values, 101)
    assert len(peaks) > 1  # several local optima
    assert int(np.sum(obj.max_value - obj.values[peaks] <= 1e-6)) == 1
    assert obj.metadata["transform"] == "-log(value)"


# -- Himmelblau -----------------------------------------------------------------
def test_himmelblau_root():
    assert ob.himmelblau_tilted([[3.0, 2.0]], tilt=0.0)[0] == 0.0


def test_tilted_himmelblau_has_four_peaks_one_global():
    obj = ob.himmelblau_objective()
    peaks = grid_local_maxima(obj.values, 101)
    assert len(peaks) == 4
    vals = np.sort(obj.values[peaks])
    assert vals[-1] - vals[-2] > 1e-3


def test_untilted_himmelblau_four_equal_peaks():
    obj = ob.himmelblau_objective(tilt=0.0)
    peaks = grid_local_maxima(obj.values, 101)
    assert len(peaks) == 4

    def f(x):
        return ob.himmelblau_tilted(x, 0.0)

    polished = [polish(f, obj.grid[i], ob.HIMMELBLAU_BOX)[1] for i in peaks]
    assert np.ptp(polished) <= 1e-6


# -- Gaussian mixture ----------------------------------------------------------
def test_single_bump_without_perturbation():
    obj = ob.gaussian_mixture(0, bumps=((0.37, 0.61, 1.0, 0.1),), perturbation=0.0)
    assert np.all(np.abs(obj.max_point - [0.37, 0.61]) <= 0.01)


def test_mixture_is_deterministic():
    a, b = ob.gaussian_mixture(3), ob.gaussian_mixture(3)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, ob.gaussian_mixture(4).values)


def test_mixture_maximum_is_a_thin_peak():
    obj = ob.gaussian_mixture(0)
    raw = obj.raw_values
    near = raw >= raw.max() - 0.01 * abs(raw.max())
    assert near.mean() < 0.01
    assert np.linalg.norm(obj.max_point - [0.8, 0.2]) < 0.05
    assert obj.noise_std == 0.01


def test_mixture_off_grid_evaluation():
    obj = ob.gaussian_mixture(0)
    i = 1234
    assert obj.eval(obj.grid[i]) == obj.values[i]
    x = obj.grid[i] + 1e-3
    assert abs(obj.eval(x) - obj.values[i]) < 0.05


# -- generated GP ---------------------------------------------------------------
def test_generated_gp_seeds_give_distinct_maxima():
    pts = {tuple(ob.generated_gp(2, s).max_point) for s in range(20)}
    assert len(pts) >= 19


def test_generated_gp_noise_ratio_and_metadata():
    for d in (2, 4):
        obj = ob.generated_gp(d, 1)
        assert obj.values.std() == pytest.approx(1.0, abs=1e-12)
        assert obj.noise_std / obj.values.std() == pytest.approx(0.01, abs=1e-14)
        assert obj.metadata["kernel"].nu == 3.0
        assert obj.grid.shape == (4096, d)
        assert obj.func is None


def test_generated_gp_draw_mean_within_sanity_band():
    _, grid, kernel, _ = ob._generated_prior(2)
    K = kernel(grid)
    sd_mean = math.sqrt(K.sum()) / grid.shape[0]  # sd of the grid mean of one draw
    for s in range(5):
        obj = ob.generated_gp(2, s)
        assert abs(obj.shift) <= 3 * sd_mean


def test_generated_gp_is_grid_only():
    obj = ob.generated_gp(2, 0)
    x = obj.grid[100] + 0.01
    assert obj.eval(x) == obj.values[obj.nearest_index(x)]


# -- noise -------------------------------------------------------------------
def test_noiseless_evaluation_is_exact():
    obj = ob.himmelblau_objective(21)
    rng = np.random.default_rng(0)
    assert evaluate_noisy(obj, obj.grid[5], rng) == obj.values[5]


def test_noise_level_and_independence():
    obj = ob.gaussian_mixture(0)
    x = obj.grid[777]
    rng = np.random.default_rng(1)
    draws = np.array([evaluate_noisy(obj, x, rng) for _ in range(100000)]) - obj.values[777]
    assert abs(draws.std() / obj.noise_std - 1) < 0.02
    r1, r2 = np.random.default_rng(2), np.random.default_rng(3)
    a = np.array([evaluate_noisy(obj, x, r1) for _ in range(10000)])
    b = np.array([evaluate_noisy(obj, x, r2) for _ in range(10000)])
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02


def test_out_of_box_and_dimension_errors():
    obj = ob.himmelblau_objective(11)
    with pytest.raises(InputError):
        obj.eval([6.0, 0.0])
    with pytest.raises(InputError):
        obj.eval([0.0, 0.0, 0.0])
    with pytest.raises(InputError):
        evaluate_noisy(obj, [0.0, -5.5], np.random.default_rng(0))
    with pytest.raises(InputError):
        ob.build("tsunami")


def test_grid_export(tmp_path):
    obj = ob.himmelblau_objective(5)
    rows = read_csv(ob.export_grid(obj, tmp_path / "grid.csv"))
    assert list(rows[0]) == ["x1", "x2", "f"]
    assert [r["f"] for r in rows] == obj.values.tolist()


@pytest.mark.parametrize("name", ob.TASKS)
def test_every_task_builds(name):
    obj = ob.build(name, 0)
    assert obj.values.mean() == pytest.approx(0.0, abs=1e-12)
    assert obj.values.std() == pytest.approx(1.0, abs=1e-12)
    assert obj.max_value == obj.values.max()
    assert np.all(obj.max_value - obj.values >= 0)
