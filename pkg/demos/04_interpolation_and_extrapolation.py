"""
Interpolation and extrapolation experiments
===========================================

Interpolation trains on points drawn from the whole surface. Extrapolation
trains only below an energy threshold and tests everywhere, including the
high-energy region the model never saw.
"""

from qgpes.core import RunConfig
from qgpes.experiments import (percentile_threshold, run_extrapolation, run_interpolation,
                               synth_dataset, threshold_config)

data = synth_dataset(5000, seed=0)

# %%
for n in (100, 200, 400):
    rep = run_interpolation(data, RunConfig(seed=0, train_n=n))
    print(f"interpolation n={n:>3}: RMSE {rep.rmse:7.1f} cm^-1 over {rep.n_test} points")

# %%
# Train below the 40th percentile of the energies.
thr = percentile_threshold(data, 40)
print(f"threshold {thr:.0f} cm^-1")
for kind in ("entangled", "unentangled", "rbf"):
    cfg = threshold_config(RunConfig(seed=0, train_n=400, kernel_kind=kind), thr)
    rep = run_extrapolation(data, cfg)
    print(f"extrapolation {kind:>11}: RMSE {rep.rmse:7.1f} cm^-1")
