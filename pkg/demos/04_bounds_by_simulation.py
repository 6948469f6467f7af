# %% [markdown]
# # Checking the probabilistic bounds by simulation
#
# Majority voting over k independent samples errs with probability at most
# exp(-k(1-2 tau)^2/2). Errors along a dependency chain compound, giving
# 1-(1-eps)^T. Both are checked here by Monte Carlo.

# %%
from scv.simlab import Dag, SimSpec, propagation_bound, simulate_majority, simulate_propagation

for k in (1, 5, 11, 25):
    r = simulate_majority(SimSpec(tau=0.3, k=k, trials=20_000, seed=1))
    print(f"k={k:2d} empirical={r.empirical:.4f} bound={r.theoretical_bound:.4f} ok={r.satisfied}")

# %%
chain = Dag.chain(5)
r = simulate_propagation(SimSpec(epsilon=0.1, dag=chain, trials=100_000, seed=0))
print(f"chain: empirical {r.empirical:.4f} +/- {r.ci_halfwidth:.4f}, bound {propagation_bound(0.1, chain):.5f}")
