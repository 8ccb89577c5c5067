"""
Quantum kernels by exact simulation
===================================

Each input vector becomes the phases of a small circuit, H then the phase
layer, twice. The kernel between two inputs is the probability of reading
all zeros after running one circuit and undoing the other.
"""

import math

import numpy as np

from qgpes.qkernel import (QuantumKernelParams, gram_matrix, kernel_exact, kernel_shots,
                           prepare_state)

# One qubit first. With theta = 1 the phase equals x itself.
p1 = QuantumKernelParams([1.0], entangled=False)
print("state at x = pi/2:", np.round(prepare_state([math.pi / 2], p1), 6))
for xp in (0.0, 0.3, 1.0, math.pi / 2):
    print(f"k(0, {xp:.3f}) = {kernel_exact([0.0], [xp], p1):.6f}")

# %%
# Six qubits, one per internal coordinate. The entangled map adds an RZZ
# on every pair whose angle is exp(-(x_i - x_j) / theta_12).
rng = np.random.default_rng(0)
x, xp = rng.uniform(0.5, 3.0, 6), rng.uniform(0.5, 3.0, 6)
ent = QuantumKernelParams(np.full(6, 2.0), theta_pair=1.5, entangled=True)
une = QuantumKernelParams(np.full(6, 2.0), entangled=False)
print("entangled   k(x, x') =", kernel_exact(x, xp, ent))
print("unentangled k(x, x') =", kernel_exact(x, xp, une))

# %%
# On hardware the kernel is a frequency of measurement outcomes. The
# estimate tightens like 1/sqrt(shots).
exact = kernel_exact(x, xp, ent)
for shots in (100, 1000, 10000, 100000):
    est = kernel_shots(x, xp, ent, shots, np.random.default_rng(shots))
    print(f"{shots:>6} shots: {est:.4f}  (exact {exact:.4f})")

# %%
# A Gram matrix is symmetric with unit diagonal and positive semidefinite.
X = rng.uniform(0.5, 3.0, (40, 6))
K = gram_matrix(X, ent)
print("Gram min eigenvalue:", np.linalg.eigvalsh(K).min())
