"""
Exponential decay of survival
=============================

Below the critical point the probability that the cluster of the origin
reaches level n decays exponentially.  We estimate the rate from a
survival curve and from the cone-entry event used by the renewal argument.
"""

# %%
from rightmost import InitialCondition, SimParams
from rightmost.estimators import fit_log_linear, wilson_ci
from rightmost.renewal import estimate_beta, survival_counts

trials = 1_000_000
curves = {}
for p in (0.3, 0.4, 0.5):
    params = SimParams(p, 40, 64, seed=2)
    curves[p] = survival_counts(params, InitialCondition.origin(), trials)

# %%
# Survival probabilities with Wilson intervals.
for n in (1, 5, 10, 20, 30, 40):
    cells = []
    for p, alive in curves.items():
        lo, hi = wilson_ci(int(alive[n]), trials)
        cells.append(f"p={p}: {alive[n] / trials:.2e} [{lo:.1e}, {hi:.1e}]")
    print(f"n={n:2d}  " + "  ".join(cells))

# %%
# Log-linear fits over levels 10..40, restricted to levels with at least 30
# survivors so that sparse tails do not bend the line.
for p, alive in curves.items():
    fit = fit_log_linear([(n, alive[n] / trials, alive[n]) for n in range(10, 41)])
    print(f"p={p}: rate {fit.rate:.3f} +- {fit.slope_se:.3f}, R^2 {fit.r2:.4f}, "
          f"levels {fit.x_range[0]:.0f}..{fit.x_range[1]:.0f}")

# %%
# The cone-entry tail: some path started right of the origin enters the
# origin's forward cone at level m or above.
est = estimate_beta(SimParams(0.4, 20, 64, seed=3), 200_000, 12, survival_range=(5, 20))
print(est.to_dict())
