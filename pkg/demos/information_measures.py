"""Mutual information, the C1 constant and the greedy surrogate for gamma_T.

Runs GP-MI on a prior draw and compares the running variance sum
gamma_hat with C1 times the information of the chosen queries, then
with the greedy bound on the best achievable information.
"""
# %%
import numpy as np

from gpopt import Kernel, Policy, c1, fit_posterior, greedy_gamma_bound, mutual_information
from gpopt.gp import sample_gp

kernel = Kernel("rbf", length_scale=0.1)
noise_var = 0.01
grid = np.linspace(0, 1, 100)[:, None]
rng = np.random.default_rng(3)
f = sample_gp(kernel, grid, rng)
print(f"C1 at noise variance {noise_var}: {c1(noise_var):.4f}")

# %%
policy = Policy("gpmi", grid, delta=0.05)
post = fit_posterior(kernel, np.zeros((0, 1)), [], noise_var, probes=grid)
queries = []
for t in range(1, 51):
    x = policy.select_next(post)
    queries.append(x)
    post = policy.observe(x, f[policy.pending_index] + 0.1 * rng.standard_normal(), post)
    if t in (5, 10, 25, 50):
        info = mutual_information(kernel, np.array(queries), noise_var)
        greedy = greedy_gamma_bound(kernel, grid, t, noise_var)
        print(f"T={t:2d}  gamma_hat {policy.gamma_hat:7.3f}  C1*I(X_T) {c1(noise_var) * info:7.3f}"
              f"  I(X_T) {info:6.3f}  greedy max-info {greedy:6.3f}")
