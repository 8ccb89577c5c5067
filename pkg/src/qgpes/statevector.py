"""Exact statevector simulation for Hadamard layers and diagonal Z phases.

Qubit ``i`` is bit ``i`` (little-endian) of the basis index. For bit value 0
the Pauli-Z eigenvalue is +1, for bit value 1 it is -1. With the gate
conventions

    RZ(phi)  = diag(e^{-i phi}, e^{+i phi})
    RZZ(phi) = diag(e^{-i phi}, e^{+i phi}, e^{+i phi}, e^{-i phi})

a product of RZ gates on every qubit and RZZ gates on every pair multiplies
basis state ``b`` by ``exp(-i [sum_i phi_i z_i(b) + sum_{i<j} phi_ij z_i(b) z_j(b)])``.
All such gates commute, so they are applied as a single fused diagonal.

Functions accept a single state of shape ``(2**m,)`` or a batch of shape
``(k, 2**m)``; the last axis always indexes basis states.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .core import DimensionMismatch, QGPError

MAX_QUBITS = 20


class TooManyQubits(QGPError, ValueError):
    pass


class SizeMismatch(DimensionMismatch):
    pass


def num_pairs(m: int) -> int:
    return m * (m - 1) // 2


def pair_indices(m: int) -> list[tuple[int, int]]:
    """Lexicographic ``(i, j)`` pairs with ``i < j``."""
    return list(combinations(range(m), 2))


@dataclass(frozen=True)
class PhaseSet:
    """Circuit angles in radians: ``single`` has shape ``(..., m)``,
    ``pair`` shape ``(..., m(m-1)/2)`` in :func:`pair_indices` order."""

    single: np.ndarray
    pair: np.ndarray

    def __post_init__(self):
        single = np.asarray(self.single, dtype=float)
        pair = np.asarray(self.pair, dtype=float)
        m = single.shape[-1]
        if pair.shape[-1] != num_pairs(m) or pair.shape[:-1] != single.shape[:-1]:
            raise SizeMismatch(
                f"{m} single phases need {num_pairs(m)} pair phases, got shape {pair.shape}"
            )
        if not (np.all(np.isfinite(single)) and np.all(np.isfinite(pair))):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "single", single)
        object.__setattr__(self, "pair", pair)

    @property
    def num_qubits(self) -> int:
        return self.single.shape[-1]


def _check_qubits(m: int) -> None:
    if not 1 <= m <= MAX_QUBITS:
        raise TooManyQubits(f"qubit count must be in [1, {MAX_QUBITS}], got {m}")


def num_qubits_of(state: np.ndarray) -> int:
    dim = np.shape(state)[-1]
    m = int(dim).bit_length() - 1
    if dim < 2 or 1 << m != dim:
        raise SizeMismatch(f"state length {dim} is not a power of two")
    return m


@lru_cache(maxsize=None)
def z_signs(m: int) -> np.ndarray:
    """``(m, 2**m)`` array of Z eigenvalues z_i(b)."""
    b = np.arange(1 << m)
    bits = (b[None, :] >> np.arange(m)[:, None]) & 1
    z = (1 - 2 * bits).astype(float)
    z.setflags(write=False)
    return z


@lru_cache(maxsize=None)
def zz_signs(m: int) -> np.ndarray:
    """``(m(m-1)/2, 2**m)`` array of z_i(b) z_j(b) for lexicographic pairs."""
    z = z_signs(m)
    if m < 2:
        zz = np.zeros((0, 1 << m))
    else:
        i, j = np.array(pair_indices(m)).T
        zz = z[i] * z[j]
    zz.setflags(write=False)
    return zz


def zero_state(m: int) -> np.ndarray:
    _check_qubits(m)
    psi = np.zeros(1 << m, dtype=complex)
    psi[0] = 1.0
    return psi


def apply_hadamard_layer(state: np.ndarray) -> np.ndarray:
    """Apply H to every qubit (a normalized Walsh-Hadamard transform)."""
    state = np.asarray(state, dtype=complex)
    m = num_qubits_of(state)
    batch = state.shape[:-1]
    # C-order reshape puts qubit m-1 on the first of the m tensor axes
    out = state.reshape(batch + (2,) * m)
    nb = len(batch)
    for ax in range(nb, nb + m):
        a = np.take(out, 0, axis=ax)
        b = np.take(out, 1, axis=ax)
        out = np.stack((a + b, a - b), axis=ax)
    return out.reshape(state.shape) * (2.0 ** (-m / 2))


def diagonal_energy(phases: PhaseSet) -> np.ndarray:
    """Exponent of the fused diagonal, shape ``(..., 2**m)``, without the ``-i``."""
    m = phases.num_qubits
    _check_qubits(m)
    e = phases.single @ z_signs(m)
    if m > 1:
        e = e + phases.pair @ zz_signs(m)
    return e


def apply_diagonal_phases(state: np.ndarray, phases: PhaseSet) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if num_qubits_of(state) != phases.num_qubits:
        raise SizeMismatch(
            f"state has {num_qubits_of(state)} qubits, phases are for {phases.num_qubits}"
        )
    return state * np.exp(-1j * diagonal_energy(phases))


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """<a|b> = sum_k conj(a_k) b_k."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise SizeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(state)) ** 2
