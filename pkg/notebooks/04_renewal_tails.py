"""
Renewal construction of the rightmost reaching site
===================================================

Fix a horizon n.  X_0 is the rightmost start site with a path to level n.
Paths started to its right may still enter its forward cone; the last level
where that happens is Y_1, and X_1 is the rightmost site of that level
reaching the horizon.  Repeating until nothing new enters the cone gives the
index I and the terminal level Y_I.  Both have exponential tails.
"""

# %%
from rightmost import InitialCondition, SimParams, compute_trace, sample_environment
from rightmost.renewal import tail_statistics

params = SimParams(0.5, 16, 64, seed=7)
for t in range(5):
    trace = compute_trace(sample_environment(params, t), InitialCondition.full(), 16)
    print(f"trial {t}: {trace if not trace else trace.pairs}")

# %%
# With a finite window only start sites inside it can be X_0.  As n grows the
# rightmost reaching site moves far to the left, so fewer trials reach.
for n in (5, 10, 15, 20, 30):
    rep = tail_statistics(SimParams(0.4, n, 128, seed=8), InitialCondition.full(), n, 20_000)
    print(f"n={n:2d}  reaching {rep.reaching / rep.trials:6.1%}")

# %%
# Tails of I and Y_I at a horizon where most trials reach, with the sanity
# envelope P(I >= m) + (m + 1) exp(-beta m) for the tail of Y_I.
rep = tail_statistics(SimParams(0.4, 10, 128, seed=9), InitialCondition.full(), 10, 100_000)
env = rep.envelope()
for row, bound in zip(rep.rows(), env):
    print(f"m={row['m']}  P(I>=m)={row['p_I_ge_m']:.4f}  "
          f"P(Y_I>=m^2)={row['p_YI_ge_m2']:.4f}  envelope {bound:.4f}")
print("cone-entry rate:", round(rep.beta.beta, 3))
