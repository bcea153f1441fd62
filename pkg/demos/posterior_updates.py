"""Conditioning a GP one observation at a time.

Builds a posterior on a 1-d probe grid, extends it with noisy
observations of sin(6x), and checks that the incrementally updated
cache agrees with a fresh batch fit. The last part conditions on regret
observations f(x*) - f(x) instead of values.
"""
# %%
import numpy as np

from gpopt import Kernel, extend_posterior, fit_posterior, fit_regret_posterior

rng = np.random.default_rng(0)
kernel = Kernel("matern", length_scale=0.2, nu=2.5)
probes = np.linspace(0, 1, 201)[:, None]
X = rng.uniform(size=(12, 1))
y = np.sin(6 * X[:, 0]) + 0.05 * rng.standard_normal(12)

# %%
# one point at a time, starting from the prior
post = fit_posterior(kernel, np.zeros((0, 1)), [], 0.0025, probes=probes)
for x, v in zip(X, y):
    post = extend_posterior(post, x, v)
    print(f"n={post.n_obs:2d}  mean variance on grid {post.grid_variance.mean():.4f}")

batch = fit_posterior(kernel, X, y, 0.0025, probes=probes)
print("max |incremental - batch| mean:", np.abs(post.grid_mean - batch.grid_mean).max())
print("max |incremental - batch| var: ", np.abs(post.grid_variance - batch.grid_variance).max())

# %%
# the posterior mean tracks the function where data exist
err = np.abs(post.grid_mean - np.sin(6 * probes[:, 0]))
print("max error inside the data range:",
      err[(probes[:, 0] > X.min()) & (probes[:, 0] < X.max())].max())

# %%
# regret observations: a zero regret at x* carries no information
x_star = np.array([[0.26]])
reg = fit_regret_posterior(kernel, x_star, x_star, [0.0], probes=probes)
print("prior variance kept after observing r(x*) = 0:", reg.grid_variance.max())
f = lambda x: np.sin(6 * x[:, 0])
Z = f(x_star) - f(X)
reg = fit_regret_posterior(kernel, x_star, X, Z, probes=probes)
print("max |mu(x*) - mu(x) - z| over the regret observations:",
      np.abs(reg.mean(X) - (reg.mean(x_star) - Z)).max())
