import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_feature_map, dense_kernel, one_qubit_kernel
from qgpes.core import DimensionMismatch, NumericalFailure
from qgpes.qkernel import (QuantumKernelParams, cross_gram, encode_phases, gram_matrix,
                           kernel_exact, kernel_shots, overlap_state, prepare_state,
                           sample_outcomes)


def params(m, theta=1.0, pair=1.0, entangled=True, abs_diff=False):
    return QuantumKernelParams(np.full(m, theta), pair, entangled, abs_diff)


def random_triple(m, rng, entangled=True):
    x = rng.uniform(0.5, 3.0, m)
    xp = rng.uniform(0.5, 3.0, m)
    p = QuantumKernelParams(rng.uniform(0.3, 5.0, m), rng.uniform(0.3, 5.0), entangled)
    return x, xp, p


def test_encode_example():
    ph = encode_phases([1.0, 2.0], QuantumKernelParams([1.0, 2.0], 1.0))
    assert np.allclose(ph.single, [1.0, 1.0])
    assert abs(ph.pair[0] - math.e) < 1e-15


def test_encode_abs_switch():
    p = QuantumKernelParams([1.0, 1.0], 1.0, abs_pair_diff=True)
    assert abs(encode_phases([1.0, 2.0], p).pair[0] - math.exp(-1)) < 1e-15


def test_encode_unentangled_has_no_pair_phase():
    ph = encode_phases([0.3, 0.7, 1.1], params(3, entangled=False))
    assert np.all(ph.pair == 0)


def test_encode_dimension_and_overflow():
    with pytest.raises(DimensionMismatch):
        encode_phases([1.0, 2.0, 3.0], params(2))
    with pytest.raises(NumericalFailure):
        encode_phases([0.0, 1000.0], params(2, pair=1e-3))


def test_params_validation():
    with pytest.raises(ValueError):
        QuantumKernelParams([1.0, 0.0])
    with pytest.raises(ValueError):
        QuantumKernelParams([1.0], math.inf)


def test_prepare_state_one_qubit_example():
    psi = prepare_state([math.pi / 2], params(1))
    assert np.allclose(np.abs(psi), [0.0, 1.0], atol=1e-12)


def test_kernel_one_qubit_zero_example():
    assert kernel_exact([0.0], [math.pi / 2], params(1)) < 1e-12


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_state_matches_dense_circuit(m, rng):
    for _ in range(10):
        x, _, p = random_triple(m, rng)
        ref = dense_feature_map(x, p.theta_single, p.theta_pair)[:, 0]
        assert np.max(np.abs(prepare_state(x, p) - ref)) < 1e-12


@pytest.mark.parametrize("entangled", [True, False])
@pytest.mark.parametrize("abs_diff", [True, False])
def test_kernel_matches_dense(entangled, abs_diff, rng):
    for m in (2, 3):
        for _ in range(10):
            x, xp, p = random_triple(m, rng, entangled)
            p = QuantumKernelParams(p.theta_single, p.theta_pair, entangled, abs_diff)
            ref = dense_kernel(x, xp, p.theta_single, p.theta_pair, entangled, abs_diff)
            assert abs(kernel_exact(x, xp, p) - ref) < 1e-12


@settings(max_examples=60, deadline=None)
@given(phi=st.floats(-6, 6), phip=st.floats(-6, 6))
def test_one_qubit_closed_form(phi, phip):
    assert abs(kernel_exact([phi], [phip], params(1)) - one_qubit_kernel(phi, phip)) < 1e-12


def test_unentangled_factorizes(rng):
    x, xp, p = random_triple(4, rng, entangled=False)
    prod = math.prod(one_qubit_kernel(x[i] / p.theta_single[i], xp[i] / p.theta_single[i])
                     for i in range(4))
    assert abs(kernel_exact(x, xp, p) - prod) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.integers(1, 5), entangled=st.booleans())
def test_kernel_axioms(seed, m, entangled):
    rng = np.random.default_rng(seed)
    x, xp, p = random_triple(m, rng, entangled)
    assert abs(kernel_exact(x, x, p) - 1.0) < 1e-12
    k = kernel_exact(x, xp, p)
    assert k == kernel_exact(xp, x, p)
    assert 0.0 <= k <= 1.0 + 1e-12


def test_gram_symmetric_psd(rng):
    X = rng.uniform(0.5, 3.0, (25, 4))
    p = QuantumKernelParams(rng.uniform(0.5, 3, 4), 1.3)
    K = gram_matrix(X, p)
    assert np.array_equal(K, K.T) and np.all(np.diag(K) == 1.0)
    assert np.linalg.eigvalsh(K).min() >= -1e-8
    C = cross_gram(X[:5], X, p)
    assert np.allclose(C, K[:5], atol=1e-12)


def test_overlap_state_carries_kernel(rng):
    x, xp, p = random_triple(3, rng)
    amp = overlap_state(x, xp, p)[0]
    assert abs(abs(amp) ** 2 - kernel_exact(x, xp, p)) < 1e-12


def test_shots_identical_inputs():
    p = params(2)
    assert kernel_shots([0.4, 1.1], [0.4, 1.1], p, 1000, np.random.default_rng(0)) == 1.0


def test_shots_zero_kernel():
    assert kernel_shots([0.0], [math.pi / 2], params(1), 1000, np.random.default_rng(0)) == 0.0


def test_shots_converge(rng):
    x, xp, p = random_triple(3, rng)
    est = kernel_shots(x, xp, p, 100_000, np.random.default_rng(7))
    assert abs(est - kernel_exact(x, xp, p)) < 0.01


def test_shots_seeded_and_validated():
    p = params(2)
    a = sample_outcomes([0.1, 0.2], [0.9, 1.5], p, 50, np.random.default_rng(3))
    b = sample_outcomes([0.1, 0.2], [0.9, 1.5], p, 50, np.random.default_rng(3))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        sample_outcomes([0.1, 0.2], [0.9, 1.5], p, 0, np.random.default_rng(3))
