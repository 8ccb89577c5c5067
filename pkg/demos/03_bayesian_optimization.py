"""
Tuning kernel parameters by Bayesian optimization
=================================================

Kernel parameters are chosen by maximizing log(L + a), where L is the
marginal likelihood. The optimizer is a GP surrogate with an upper
confidence bound acquisition.
"""

import numpy as np

from qgpes.bayesopt import SearchSpace, optimize
from qgpes.experiments import MarginalLikelihoodObjective, search_space, synth_dataset
from qgpes.gp import stabilized_objective

# The transform is flat at log(a) for very negative LML and equals the LML
# for large values, so singular fits cannot drag the surrogate down.
for lml in (-1e6, -10.0, 0.0, 10.0, 500.0):
    print(f"lml {lml:>10}: log(L + 1) = {stabilized_objective(lml):.6g}")

# %%
# A toy problem first: a quadratic bowl on the unit cube.
bowl = SearchSpace.box(6, 0.0, 1.0)
trace = optimize(lambda t: -float(np.sum((t - 0.5) ** 2)), bowl, 20, 50, seed=0)
print("bowl optimum found at", np.round(trace.best_theta, 3))

# %%
# The real objective. Parameters live in [0.05, 20], searched in log space.
data = synth_dataset(400, seed=1)
objective = MarginalLikelihoodObjective(data, "entangled")
space = search_space("entangled", 6)
trace = optimize(objective, space, init_count=20, iterations=30, seed=1)
for i in (0, 19, 29, 49):
    print(f"after {i + 1:>2} evaluations best objective {trace.best_so_far[i]:.2f}")
print("best theta:", {n: round(float(t), 3) for n, t in zip(space.names, trace.best_theta)})
