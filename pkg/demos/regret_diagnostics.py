"""Empirical checks of the regret analysis at a small scale.

Standardized regret residuals with the posterior and the prior cross
covariance, the high-probability regret bound under both observation
models, and the deterministic overconfidence exemplar.
"""
# %%
from gpopt import diagnostics as dg

kernel, noise = dg.BOUNDS_KERNEL, dg.BOUNDS_NOISE_VAR
for prior_cross in (False, True):
    rep = dg.check_regret_residuals(kernel, noise, 500, 10, seed=0, prior_cross=prior_cross)
    label = "prior" if prior_cross else "posterior"
    print(f"{label:9s} cross covariance: n={rep.n}  mean {rep.mean:+.3f}  var {rep.variance:.3f}")

# %%
for setting in dg.SETTINGS:
    rep = dg.check_regret_bound(setting, kernel, noise, 0.05, 50, 50, seed=0)
    print(f"{setting:6s} observations: violation rate {rep.violation_rate:.3f}"
          f" (allowed {rep.allowed_rate:.3f}, gated={rep.gated})")

# %%
rep = dg.replay_overconfidence(dg.OVERCONFIDENCE_SEED)
for kind in ("gpmi", "gpucb"):
    s = rep[kind]
    print(f"{kind:6s} final regret {s['final_regret']:.3f} (initial {s['initial_regret']:.3f})"
          f"  final bonus {s['final_bonus']:.4f}  stalled={dg.is_stalled(s)}")
