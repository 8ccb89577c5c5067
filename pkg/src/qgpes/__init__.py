"""Gaussian-process regression of potential energy surfaces with quantum kernels.

The quantum kernels are squared fidelities of an exactly simulated
Hadamard/RZ/RZZ feature-map circuit. Kernel parameters are tuned by Bayesian
optimization of ``log(L + a)``, with ``L`` the GP marginal likelihood.
"""

__version__ = "0.1.0"

from .core import (Dataset, EnergyWindow, RunConfig, read_dataset, split_train_test,
                   write_dataset)
from .qkernel import (QuantumKernelParams, cross_gram, encode_phases, gram_matrix,
                      kernel_exact, kernel_shots, prepare_state)
from .gp import (GPModel, KernelConfig, gp_fit, gp_predict, load_model,
                 log_marginal_likelihood, rbf_kernel, save_model, stabilized_objective)
from .bayesopt import BOTrace, SearchSpace, acquisition, optimize, propose_next
from .experiments import (ExperimentReport, rmse, run_extrapolation, run_interpolation,
                          synth_dataset, synth_pes)
