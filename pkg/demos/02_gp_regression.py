"""
GP regression with a quantum kernel
===================================

Fit a Gaussian process to a few hundred energies of the synthetic 6-D
surface and check the predictions on the rest.
"""

import numpy as np

from qgpes.experiments import predict_mean, rmse, synth_dataset
from qgpes.gp import KernelConfig, gp_fit, gp_predict, log_marginal_likelihood

data = synth_dataset(2000, seed=0)
train, test = data.subset(np.arange(300)), data.subset(np.arange(300, 2000))
print(f"energies span {data.y.min():.0f} to {data.y.max():.0f} cm^-1")

# %%
# Energies are centered and fitted in hartree (target scale 219474.63 cm^-1).
# The scale sets the prior amplitude and with it the size of the LML.
# The last vector came out of a Bayesian optimization run on this training
# set. It wins on likelihood but not on test error: with 300 points the two
# criteria need not agree.
scale = 219474.6313705
candidates = [[0.5] * 6 + [1.0], [2.0] * 6 + [1.0], [8.0] * 6 + [1.0],
              [16.009, 0.078, 2.679, 8.551, 7.998, 12.432, 18.94]]
for theta in candidates:
    kernel = KernelConfig.from_theta("entangled", theta)
    model = gp_fit(train.X, train.y, kernel, y_scale=scale)
    err = rmse(predict_mean(model, test.X), test.y)
    print(f"theta_1 = {theta[0]:>6}: LML {log_marginal_likelihood(model):9.1f}  "
          f"test RMSE {err:8.1f} cm^-1")

# %%
# Noise-free models pass through the training data, and the posterior
# variance collapses there.
mean, var = gp_predict(model, train.X[:3])
print("train targets:", train.y[:3])
print("predictions:  ", mean)
print("posterior sd: ", np.sqrt(var))
