"""Quantum feature-map kernels evaluated by exact state simulation.

The feature map on ``m`` qubits is ``U(x) = D(x) H D(x) H`` acting on
``|0^m>``, where ``H`` is a Hadamard on every qubit and ``D(x)`` is the fused
diagonal of RZ(phi_i) on each qubit and RZZ(phi_ij) on each pair, with

    phi_i  = x_i / theta_i
    phi_ij = exp(-(x_i - x_j) / theta_12)        (i < j, shared theta_12)

The kernel is the squared fidelity ``|<psi(x')|psi(x)>|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .core import DimensionMismatch, NumericalFailure


@dataclass(frozen=True)
class QuantumKernelParams:
    theta_single: np.ndarray
    theta_pair: float = 1.0
    entangled: bool = True
    abs_pair_diff: bool = False

    def __post_init__(self):
        ts = np.array(self.theta_single, dtype=float).reshape(-1)
        if ts.size == 0 or not np.all(np.isfinite(ts)) or np.any(ts <= 0):
            raise ValueError("theta_single must be positive and finite")
        tp = float(self.theta_pair)
        if self.entangled and not (np.isfinite(tp) and tp > 0):
            raise ValueError("theta_pair must be positive and finite")
        ts.setflags(write=False)
        object.__setattr__(self, "theta_single", ts)
        object.__setattr__(self, "theta_pair", tp)

    @property
    def num_qubits(self) -> int:
        return self.theta_single.size

    @property
    def theta_vector(self) -> np.ndarray:
        """Parameters as BO sees them: ``theta_1..theta_m`` plus ``theta_12`` if entangled."""
        if self.entangled:
            return np.append(self.theta_single, self.theta_pair)
        return self.theta_single.copy()

    @classmethod
    def from_vector(cls, theta, entangled: bool, abs_pair_diff: bool = False):
        theta = np.asarray(theta, dtype=float)
        if entangled:
            return cls(theta[:-1], theta[-1], True, abs_pair_diff)
        return cls(theta, 1.0, False, abs_pair_diff)


def _as_batch(X, m: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != m:
        raise DimensionMismatch(f"inputs have {X.shape[-1]} components, kernel has {m} qubits")
    return X


def encode_phases(x, params: QuantumKernelParams) -> sv.PhaseSet:
    """Map an input (or a batch of inputs, shape ``(n, m)``) to circuit angles."""
    m = params.num_qubits
    x = _as_batch(x, m)
    single = x / params.theta_single
    batch = x.shape[:-1]
    if params.entangled and m > 1:
        i, j = np.array(sv.pair_indices(m)).T
        diff = x[..., i] - x[..., j]
        if params.abs_pair_diff:
            diff = np.abs(diff)
        with np.errstate(over="ignore"):
            pair = np.exp(-diff / params.theta_pair)
        if not np.all(np.isfinite(pair)):
            raise NumericalFailure(
                f"pair phase overflow at theta_12={params.theta_pair!r}"
            )
    else:
        pair = np.zeros(batch + (sv.num_pairs(m),))
    return sv.PhaseSet(single, pair)


def prepare_state(x, params: QuantumKernelParams) -> np.ndarray:
    """``U(x)|0^m>`` for one input or a batch of inputs."""
    phases = encode_phases(x, params)
    m = params.num_qubits
    sv._check_qubits(m)
    diag = np.exp(-1j * sv.diagonal_energy(phases))
    # H|0^m> is the uniform superposition
    psi = diag * 2.0 ** (-m / 2)
    psi = sv.apply_hadamard_layer(psi)
    return diag * psi


def kernel_exact(x, xp, params: QuantumKernelParams) -> float:
    a = prepare_state(xp, params)
    b = prepare_state(x, params)
    return float(abs(sv.inner_product(a, b)) ** 2)


def _fidelities(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.abs(A.conj() @ B.T) ** 2


def gram_matrix(X, params: QuantumKernelParams) -> np.ndarray:
    """Symmetric kernel matrix with an exact unit diagonal.

    Each state is prepared once; the upper triangle of the fidelity matrix is
    mirrored so ``K[i, j]`` and ``K[j, i]`` are the same float.
    """
    X = np.atleast_2d(_as_batch(X, params.num_qubits))
    S = prepare_state(X, params)
    K = np.triu(_fidelities(S, S), 1)
    K = K + K.T
    np.fill_diagonal(K, 1.0)
    return K


def cross_gram(X1, X2, params: QuantumKernelParams) -> np.ndarray:
    """``K[a, b] = k(X1[a], X2[b])``."""
    S1 = prepare_state(np.atleast_2d(_as_batch(X1, params.num_qubits)), params)
    S2 = prepare_state(np.atleast_2d(_as_batch(X2, params.num_qubits)), params)
    return _fidelities(S1, S2)


def overlap_state(x, xp, params: QuantumKernelParams) -> np.ndarray:
    """``U^dagger(x') U(x)|0^m>``; its ``|0^m>`` probability is the kernel."""
    psi = prepare_state(x, params)
    conj_diag = np.exp(1j * sv.diagonal_energy(encode_phases(xp, params)))
    psi = sv.apply_hadamard_layer(conj_diag * psi)
    return sv.apply_hadamard_layer(conj_diag * psi)


def sample_outcomes(x, xp, params: QuantumKernelParams, shots: int, rng) -> np.ndarray:
    """Measure the overlap circuit ``shots`` times; returns basis-state indices."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = sv.probabilities(overlap_state(x, xp, params))
    p = p / p.sum()
    return rng.choice(p.size, size=shots, p=p)


def kernel_shots(x, xp, params: QuantumKernelParams, shots: int, rng) -> float:
    """Finite-shot estimate: fraction of outcomes equal to ``0^m``."""
    outcomes = sample_outcomes(x, xp, params, shots, rng)
    return float(np.count_nonzero(outcomes == 0)) / shots


def gram_matrix_shots(X, params: QuantumKernelParams, shots: int, rng) -> np.ndarray:
    """Shot-estimated kernel matrix, symmetrized, with unit diagonal."""
    X = np.atleast_2d(_as_batch(X, params.num_qubits))
    n = X.shape[0]
    K = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            K[i, j] = kernel_shots(X[i], X[j], params, shots, rng)
            K[j, i] = kernel_shots(X[j], X[i], params, shots, rng)
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0)
    return K
