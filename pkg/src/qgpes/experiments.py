"""Experiment protocols: interpolation and energy-threshold extrapolation.

A run splits the data, tunes kernel parameters by Bayesian optimization of
the stabilized marginal-likelihood objective on the training set, refits the
GP at the best parameters and scores it by RMSE on every held-out point.

Also provides a deterministic 6-D synthetic surface used when no ab initio
data set is at hand.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bayesopt import BOTrace, SearchSpace, optimize
from .core import (HARTREE_CM, DataError, Dataset, EnergyWindow, InsufficientData, RunConfig,
                   format_float, split_train_test)
from .gp import (GPModel, KernelConfig, gp_fit, gp_predict, log_marginal_likelihood,
                 stabilized_objective)

# synthetic surface constants (cm^-1 for energies)
MORSE_DEPTH = 5000.0
MORSE_ALPHA = 1.5
MORSE_R0 = 1.2
COUPLING = 300.0
SYNTH_DIM = 6
SYNTH_DOMAIN = (0.5, 3.0)
SYNTH_MAX_POINTS = 31124

PREDICT_CHUNK = 2048


class EmptyInput(DataError):
    pass


class LengthMismatch(DataError, ValueError):
    pass


class OutOfDomain(DataError, ValueError):
    pass


def rmse(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=float).reshape(-1)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if p.size != t.size:
        raise LengthMismatch(f"{p.size} predictions vs {t.size} targets")
    if p.size == 0:
        raise EmptyInput("RMSE of an empty set")
    return float(np.sqrt(np.mean((t - p) ** 2)))


def synth_pes(x) -> float | np.ndarray:
    """Sum of six Morse wells plus a Gaussian pair coupling, in cm^-1.

    ``V(x) = sum_i D (1 - exp(-a (x_i - r)))^2 + b sum_{i<j} exp(-(x_i - x_j)^2)``
    with ``D = 5000``, ``a = 1.5``, ``r = 1.2``, ``b = 300``. Accepts one
    point or an ``(n, 6)`` batch with every component in ``[0.5, 3.0]``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != SYNTH_DIM:
        raise OutOfDomain(f"synthetic surface is {SYNTH_DIM}-D, got {x.shape[-1]} components")
    lo, hi = SYNTH_DOMAIN
    if not np.all((x >= lo) & (x <= hi)):
        raise OutOfDomain(f"components must lie in [{lo}, {hi}]")
    morse = MORSE_DEPTH * (1.0 - np.exp(-MORSE_ALPHA * (x - MORSE_R0))) ** 2
    i, j = np.triu_indices(SYNTH_DIM, 1)
    pair = COUPLING * np.exp(-((x[..., i] - x[..., j]) ** 2))
    v = morse.sum(axis=-1) + pair.sum(axis=-1)
    return float(v) if v.ndim == 0 else v


def synth_dataset(n: int, seed: int) -> Dataset:
    """``n`` points uniform in ``[0.5, 3.0]^6`` labelled by :func:`synth_pes`."""
    if not 1 <= n <= SYNTH_MAX_POINTS:
        raise ValueError(f"n must be in [1, {SYNTH_MAX_POINTS}]")
    rng = np.random.default_rng(seed)
    X = rng.uniform(*SYNTH_DOMAIN, size=(n, SYNTH_DIM))
    return Dataset(X, synth_pes(X))


def search_space(kind: str, dim: int, bounds=(0.05, 20.0)) -> SearchSpace:
    lo, hi = bounds
    if kind == "rbf":
        return SearchSpace.box(1, lo, hi, log_scale=True, names=("theta",))
    names = [f"theta_{i + 1}" for i in range(dim)]
    if kind == "entangled":
        names.append("theta_12")
    return SearchSpace.box(len(names), lo, hi, log_scale=True, names=names)


class MarginalLikelihoodObjective:
    """``theta -> (log(L + a), log L)`` for a fixed training set.

    Used as the BO objective; each call builds the Gram matrix and
    factorizes it once.
    """

    def __init__(self, train: Dataset, kind: str, a: float = 1.0, noise_var: float = 0.0,
                 y_scale: float = HARTREE_CM, abs_pair_diff: bool = False):
        self.train = train
        self.kind = kind
        self.a = a
        self.noise_var = noise_var
        self.y_scale = y_scale
        self.abs_pair_diff = abs_pair_diff

    def kernel(self, theta) -> KernelConfig:
        return KernelConfig.from_theta(self.kind, theta, self.abs_pair_diff)

    def fit(self, theta) -> GPModel:
        return gp_fit(self.train.X, self.train.y, self.kernel(theta), self.noise_var,
                      self.y_scale)

    def __call__(self, theta):
        lml = log_marginal_likelihood(self.fit(theta))
        return stabilized_objective(lml, self.a), lml


def predict_mean(model: GPModel, X) -> np.ndarray:
    """Posterior mean over many points, in fixed-size chunks."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    parts = [gp_predict(model, X[s:s + PREDICT_CHUNK], return_var=False)
             for s in range(0, X.shape[0], PREDICT_CHUNK)]
    return np.concatenate(parts)


@dataclass
class ExperimentReport:
    config: RunConfig
    rmse: float
    n_train: int
    n_test: int
    kernel_kind: str
    best_theta: np.ndarray
    lml: float
    objective: float
    wall_time: float
    trace: BOTrace = field(repr=False)
    model: GPModel = field(repr=False)
    test: Dataset = field(repr=False)
    predictions: np.ndarray = field(repr=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "config": self.config.to_dict(),
            "kernel_kind": self.kernel_kind,
            "rmse": self.rmse,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "best_theta": self.best_theta.tolist(),
            "theta_names": list(self.trace.space.names),
            "lml": self.lml,
            "objective": self.objective,
            "evaluations": len(self.trace),
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


def run_experiment(data: Dataset, cfg: RunConfig) -> ExperimentReport:
    """Split, optimize kernel parameters, refit at the best point, score."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    train, test = split_train_test(data, cfg, rng)
    if test is None:
        raise EmptyInput("no points left for testing; lower train_n")
    objective = MarginalLikelihoodObjective(train, cfg.kernel_kind, cfg.objective_offset_a,
                                            cfg.noise_var, cfg.target_scale, cfg.abs_pair_diff)
    space = search_space(cfg.kernel_kind, data.dimension, cfg.theta_bounds)
    trace = optimize(objective, space, cfg.bo_init, cfg.bo_iters, cfg.kappa, rng=rng,
                     seed=cfg.seed)
    model = objective.fit(trace.best_theta)
    lml = log_marginal_likelihood(model)
    pred = predict_mean(model, test.X)
    return ExperimentReport(
        config=cfg, rmse=rmse(pred, test.y), n_train=len(train), n_test=len(test),
        kernel_kind=cfg.kernel_kind, best_theta=trace.best_theta, lml=lml,
        objective=stabilized_objective(lml, cfg.objective_offset_a),
        wall_time=time.perf_counter() - t0, trace=trace, model=model, test=test,
        predictions=pred,
    )


def run_interpolation(data: Dataset, cfg: RunConfig) -> ExperimentReport:
    """Training points drawn from the whole data set; test on the rest."""
    if data.y.min() < cfg.window.lo or data.y.max() > cfg.window.hi:
        raise ValueError("interpolation runs need a window covering the full energy range")
    return run_experiment(data, cfg)


def run_extrapolation(data: Dataset, cfg: RunConfig) -> ExperimentReport:
    """Training points drawn below ``cfg.window.hi``; test over all remaining points."""
    if cfg.window.hi < data.y.min():
        raise InsufficientData(f"threshold {cfg.window.hi} is below every energy in the data")
    return run_experiment(data, cfg)


def threshold_config(cfg: RunConfig, threshold: float) -> RunConfig:
    return replace(cfg, window=EnergyWindow(cfg.window.lo, threshold))


def rmse_at_theta(train: Dataset, test: Dataset, kind: str, theta, y_scale: float = HARTREE_CM,
                  noise_var: float = 0.0, abs_pair_diff: bool = False) -> float:
    """Test RMSE of the GP fitted on ``train`` with fixed kernel parameters."""
    kernel = KernelConfig.from_theta(kind, theta, abs_pair_diff)
    model = gp_fit(train.X, train.y, kernel, noise_var, y_scale)
    return rmse(predict_mean(model, test.X), test.y)


def write_predictions_csv(test: Dataset, predictions, path, config: dict | None = None) -> None:
    """Columns ``x1..xd,energy_true,energy_pred`` after a ``#`` config comment."""
    buf = io.StringIO()
    if config is not None:
        buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*(f"x{i + 1}" for i in range(test.dimension)), "energy_true", "energy_pred"])
    for xi, yt, yp in zip(test.X, test.y, predictions):
        w.writerow([*map(format_float, xi), format_float(yt), format_float(yp)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_report_json(report: ExperimentReport, path, include_timing: bool = False) -> None:
    doc = report.to_dict(include_timing)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def percentile_threshold(data: Dataset, q: float) -> float:
    return float(np.percentile(data.y, q))
