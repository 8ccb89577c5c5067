"""Gaussian-process regression with quantum or RBF kernels.

Both kernels have unit self-covariance, so the GP prior variance is one in
units of the target scale. Fitting factorizes ``K + sigma^2 I`` by
Cholesky, escalating a diagonal jitter only when the factorization fails.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from . import qkernel
from .core import KERNEL_KINDS, DimensionMismatch, NumericalFailure

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
LOG_2PI = math.log(2.0 * math.pi)
MODEL_FORMAT = "qgpes-gp-model/1"


class FactorizationFailure(NumericalFailure):
    pass


def rbf_kernel(x, xp, theta: float) -> float:
    """``exp(-theta * ||x - x'||^2)``."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape != xp.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {xp.shape}")
    return float(np.exp(-theta * np.sum((x - xp) ** 2)))


@dataclass(frozen=True)
class KernelConfig:
    kind: str
    quantum: qkernel.QuantumKernelParams | None = None
    rbf_theta: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.quantum is not None or self.rbf_theta is None:
                raise ValueError("rbf kernel needs rbf_theta and no quantum params")
            if not (math.isfinite(self.rbf_theta) and self.rbf_theta > 0):
                raise ValueError("rbf_theta must be positive")
        else:
            if self.quantum is None or self.rbf_theta is not None:
                raise ValueError(f"{self.kind} kernel needs quantum params only")
            if self.quantum.entangled != (self.kind == "entangled"):
                raise ValueError("quantum.entangled does not match kernel kind")

    @classmethod
    def rbf(cls, theta: float) -> KernelConfig:
        return cls("rbf", rbf_theta=float(theta))

    @classmethod
    def from_theta(cls, kind: str, theta, abs_pair_diff: bool = False) -> KernelConfig:
        """Build from the flat parameter vector the optimizer works with."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if kind == "rbf":
            return cls.rbf(theta[0])
        q = qkernel.QuantumKernelParams.from_vector(theta, kind == "entangled", abs_pair_diff)
        return cls(kind, quantum=q)

    @property
    def theta_vector(self) -> np.ndarray:
        if self.kind == "rbf":
            return np.array([self.rbf_theta])
        return self.quantum.theta_vector

    def gram(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "rbf":
            K = np.exp(-self.rbf_theta * cdist(X, X, "sqeuclidean"))
            np.fill_diagonal(K, 1.0)
            return K
        return qkernel.gram_matrix(X, self.quantum)

    def cross(self, X1, X2) -> np.ndarray:
        X1 = np.atleast_2d(np.asarray(X1, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        if X1.shape[1] != X2.shape[1]:
            raise DimensionMismatch(f"{X1.shape[1]} vs {X2.shape[1]} components")
        if self.kind == "rbf":
            return np.exp(-self.rbf_theta * cdist(X1, X2, "sqeuclidean"))
        return qkernel.cross_gram(X1, X2, self.quantum)

    def to_dict(self) -> dict:
        if self.kind == "rbf":
            return {"kind": "rbf", "rbf_theta": self.rbf_theta}
        q = self.quantum
        return {
            "kind": self.kind,
            "theta_single": q.theta_single.tolist(),
            "theta_pair": q.theta_pair,
            "abs_pair_diff": q.abs_pair_diff,
        }

    @classmethod
    def from_dict(cls, d: dict) -> KernelConfig:
        if d["kind"] == "rbf":
            return cls.rbf(d["rbf_theta"])
        entangled = d["kind"] == "entangled"
        q = qkernel.QuantumKernelParams(
            d["theta_single"], d["theta_pair"], entangled, bool(d.get("abs_pair_diff", False))
        )
        return cls(d["kind"], quantum=q)


@dataclass(frozen=True)
class GPModel:
    """A fitted GP.

    ``alpha`` solves ``(K + (sigma^2 + jitter) I) alpha = (y - y_mean) / y_scale``
    and ``chol`` is the lower Cholesky factor of that matrix.
    """

    X_train: np.ndarray
    y_mean: float
    y_scale: float
    kernel: KernelConfig
    noise_var: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    jitter_used: float
    yc: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_train(self) -> int:
        return self.X_train.shape[0]

    def standardize(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_scale


def _regularized(K: np.ndarray, noise_var: float, jitter: float) -> np.ndarray:
    A = K.copy()
    A[np.diag_indices_from(A)] += noise_var + jitter
    return A


def factorize(K: np.ndarray, noise_var: float = 0.0):
    """Cholesky of ``K + sigma^2 I`` with escalating jitter.

    Returns ``(L, jitter)`` where ``jitter`` is the absolute amount added to
    the diagonal. The ladder is relative to the mean diagonal of ``K``.
    """
    scale = float(np.mean(np.diag(K)))
    if not np.all(np.isfinite(K)):
        raise FactorizationFailure("kernel matrix has non-finite entries")
    for rel in JITTER_LADDER:
        jitter = rel * scale
        try:
            L = cholesky(_regularized(K, noise_var, jitter), lower=True, check_finite=False)
        except LinAlgError:
            continue
        return L, jitter
    raise FactorizationFailure(
        f"matrix not positive definite with jitter up to {JITTER_LADDER[-1]:g} x mean diagonal"
    )


def gp_fit(X, y, kernel: KernelConfig, noise_var: float = 0.0, y_scale: float | str = 1.0,
           K: np.ndarray | None = None) -> GPModel:
    """Fit a GP by Cholesky factorization.

    Targets are centered by their mean and divided by ``y_scale``. Since both
    kernels have unit amplitude, ``y_scale`` acts as the prior signal
    standard deviation in target units. Pass ``"std"`` to use the sample
    standard deviation (1 if it is zero). A precomputed Gram matrix ``K``
    may be supplied to avoid rebuilding it.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise DimensionMismatch(f"{X.shape[0]} inputs vs {y.shape[0]} targets")
    if noise_var < 0:
        raise ValueError("noise_var must be non-negative")
    y_mean = float(np.mean(y))
    if y_scale == "std":
        sd = float(np.std(y))
        y_scale = sd if sd > 0 else 1.0
    y_scale = float(y_scale)
    if not (y_scale > 0 and math.isfinite(y_scale)):
        raise ValueError("y_scale must be positive and finite")
    yc = (y - y_mean) / y_scale
    if K is None:
        K = kernel.gram(X)
    L, jitter = factorize(K, noise_var)
    alpha = cho_solve((L, True), yc, check_finite=False)
    X = X.copy()
    X.setflags(write=False)
    yc.setflags(write=False)
    return GPModel(X, y_mean, y_scale, kernel, float(noise_var), L, alpha, jitter, yc)


def gp_predict(model: GPModel, xs, return_var: bool = True):
    """Posterior mean and variance in target units.

    ``xs`` may be one input vector (floats are returned) or an ``(k, d)``
    batch (arrays are returned). Variance is clamped at zero.
    """
    xs = np.asarray(xs, dtype=float)
    single = xs.ndim == 1
    Xs = np.atleast_2d(xs)
    if Xs.shape[1] != model.X_train.shape[1]:
        raise DimensionMismatch(
            f"model expects {model.X_train.shape[1]} components, got {Xs.shape[1]}"
        )
    Ks = model.kernel.cross(Xs, model.X_train)
    mean = model.y_mean + model.y_scale * (Ks @ model.alpha)
    if not return_var:
        return mean[0] if single else mean
    v = solve_triangular(model.chol, Ks.T, lower=True, check_finite=False)
    var = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0) * model.y_scale**2
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def lml_from_factor(chol: np.ndarray, yc, alpha=None) -> float:
    """Gaussian log marginal likelihood from a Cholesky factor and centered targets."""
    yc = np.asarray(yc, dtype=float).reshape(-1)
    if alpha is None:
        alpha = cho_solve((chol, True), yc, check_finite=False)
    n = yc.size
    return float(-0.5 * yc @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * LOG_2PI)


def log_marginal_likelihood(model: GPModel, y=None) -> float:
    """LML of the (standardized) training targets under the fitted model.

    ``y`` defaults to the targets the model was fitted on; pass raw targets
    to score a different vector.
    """
    if y is None:
        if model.yc is None:
            raise ValueError("model carries no training targets; pass y")
        return lml_from_factor(model.chol, model.yc, model.alpha)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != model.n_train:
        raise DimensionMismatch(f"{y.size} targets for {model.n_train} training points")
    return lml_from_factor(model.chol, model.standardize(y))


def stabilized_objective(lml: float, a: float = 1.0) -> float:
    """``log(exp(lml) + a)`` without overflow or underflow."""
    if not a > 0:
        raise ValueError("a must be positive")
    log_a = math.log(a)
    if lml > log_a + 35.0:
        return lml + math.log1p(a * math.exp(-lml))
    return log_a + math.log1p(math.exp(lml) / a)


def save_model(model: GPModel, path, extra: dict | None = None) -> None:
    """Write a model as JSON with every float at full round-trip precision."""
    doc = {
        "format": MODEL_FORMAT,
        "kernel": model.kernel.to_dict(),
        "noise_var": model.noise_var,
        "jitter_used": model.jitter_used,
        "y_mean": model.y_mean,
        "y_scale": model.y_scale,
        "X_train": model.X_train.tolist(),
        "alpha": model.alpha.tolist(),
    }
    if extra:
        doc["meta"] = extra
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path) -> GPModel:
    """Read a model written by :func:`save_model`.

    The Cholesky factor is rebuilt from the stored inputs and jitter, which
    reproduces the fitted factor exactly.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} document")
    kernel = KernelConfig.from_dict(doc["kernel"])
    X = np.array(doc["X_train"], dtype=float, ndmin=2)
    X.setflags(write=False)
    alpha = np.array(doc["alpha"], dtype=float)
    if alpha.shape != (X.shape[0],):
        raise ValueError(f"{path}: alpha length does not match training inputs")
    K = kernel.gram(X)
    try:
        L = cholesky(_regularized(K, doc["noise_var"], doc["jitter_used"]),
                     lower=True, check_finite=False)
    except LinAlgError as exc:
        raise FactorizationFailure(f"{path}: stored model does not refactorize") from exc
    return GPModel(X, float(doc["y_mean"]), float(doc["y_scale"]), kernel,
                   float(doc["noise_var"]), L, alpha, float(doc["jitter_used"]))
