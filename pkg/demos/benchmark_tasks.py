"""The benchmark objectives and their standardized grids.

Every task is maximized over a finite candidate grid and standardized to
zero mean and unit variance there. Observation noise is 1% of the
standard deviation for the Gaussian-mixture and generated-GP tasks.
"""
# %%
import numpy as np

from gpopt import build_objective, evaluate_noisy
from gpopt.mackey_glass import mackey_glass, unit_to_params
from gpopt.objectives import TASKS

for name in TASKS:
    obj = build_objective(name, 0)
    print(f"{name:18s} d={obj.dim}  grid {obj.grid.shape[0]:5d}  max {obj.max_value:6.3f}"
          f"  at {np.round(obj.max_point, 3)}  noise sd {obj.noise_std:g}")

# %%
# noisy evaluation at the maximizer
obj = build_objective("gaussian_mixture", 0)
rng = np.random.default_rng(0)
draws = [evaluate_noisy(obj, obj.max_point, rng) for _ in range(5)]
print("five noisy looks at the mixture's peak:", np.round(draws, 4))

# %%
# one Mackey-Glass evaluation, final state of the delay equation
u = np.full(6, 0.3)
print("parameters (a, b, tau, n, x0, horizon):", unit_to_params(u)[0])
print("x(horizon) =", mackey_glass(u))
