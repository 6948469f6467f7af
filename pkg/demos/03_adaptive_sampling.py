# %% [markdown]
# # Adaptive sampling against a mock generator
#
# The mock backend corrupts a known-good reasoning chain. Each statement goes
# bad with a fixed probability, and the damage flows to its descendants. The
# sampler draws more traces only while agreement stays low.

# %%
import numpy as np

from scv.sampler import MockBackend, SamplerConfig, run_adaptive
from scv.simlab import default_truth

truth = default_truth()
config = SamplerConfig()
print(f"k0={config.k0} k_max={config.k_max} tau_low={config.tau_low} tau_high={config.tau_high}")

# %%
out = run_adaptive(truth.query, MockBackend(truth, 0.15, seed=3), config)
for t, lam, drawn in out.rounds:
    print(f"after {t} samples: lambda={lam:.3f} (this round drew {drawn})")
print("stopped:", out.stop_reason, "after", out.total_samples, "samples")
print("consensus answer:", out.consensus.final_answer, "(truth:", truth.final_answer + ")")

# %% [markdown]
# Noisier generators need more samples on average.

# %%
for rate in (0.05, 0.15, 0.30):
    totals = [run_adaptive(truth.query, MockBackend(truth, rate, seed=s), config).total_samples for s in range(100)]
    print(f"corruption {rate:.2f}: mean samples {np.mean(totals):.2f}")
