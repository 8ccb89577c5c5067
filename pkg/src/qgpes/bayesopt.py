"""Gradient-free maximization with a GP surrogate and UCB acquisition.

The surrogate is an RBF-kernel GP fitted in unit-cube coordinates of the
search box; for log-scaled boxes the cube maps to ``log(theta)``. Its length
scale is re-selected on a fixed log grid by marginal likelihood at every
refit. Proposals maximize ``mu + kappa * sigma`` over random candidates.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError

from .core import QGPError, format_float
from .gp import GPModel, KernelConfig, gp_fit, gp_predict, log_marginal_likelihood

logger = logging.getLogger(__name__)

N_CANDIDATES = 2048
SURROGATE_NOISE = 1e-6
SURROGATE_THETA_GRID = np.logspace(-1.0, 2.5, 9)


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds per parameter. With ``log_scale`` sampling is log-uniform."""

    bounds: tuple[tuple[float, float], ...]
    names: tuple[str, ...] = ()
    log_scale: bool = False

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not bounds:
            raise ValueError("search space needs at least one dimension")
        for lo, hi in bounds:
            if not lo < hi:
                raise ValueError(f"bad bounds ({lo}, {hi})")
            if self.log_scale and lo <= 0:
                raise ValueError("log-scaled bounds must be positive")
        names = tuple(self.names) or tuple(f"theta_{i + 1}" for i in range(len(bounds)))
        if len(names) != len(bounds):
            raise ValueError("one name per dimension")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "names", names)

    @classmethod
    def box(cls, dim: int, lo: float, hi: float, log_scale: bool = False, names=()):
        return cls(((lo, hi),) * dim, tuple(names), log_scale)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def _edges(self):
        b = np.array(self.bounds)
        return (np.log(b[:, 0]), np.log(b[:, 1])) if self.log_scale else (b[:, 0], b[:, 1])

    def to_unit(self, theta) -> np.ndarray:
        lo, hi = self._edges()
        t = np.asarray(theta, dtype=float)
        t = np.log(t) if self.log_scale else t
        return (t - lo) / (hi - lo)

    def from_unit(self, u) -> np.ndarray:
        lo, hi = self._edges()
        t = lo + np.clip(np.asarray(u, dtype=float), 0.0, 1.0) * (hi - lo)
        if self.log_scale:
            t = np.exp(t)
            # exp(log(b)) may miss the bound by an ulp
            b = np.array(self.bounds)
            t = np.clip(t, b[:, 0], b[:, 1])
        return t

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.from_unit(rng.random((size, self.dim)))


@dataclass(frozen=True)
class Evaluation:
    theta: np.ndarray
    objective: float
    lml: float = math.nan
    failed: bool = False


@dataclass
class BOTrace:
    """All evaluations of one optimization run, in order."""

    space: SearchSpace
    seed: int | None
    kappa: float
    init_count: int
    evaluations: list[Evaluation] = field(default_factory=list)
    surrogate_thetas: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.evaluations)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([e.theta for e in self.evaluations])

    @property
    def objectives(self) -> np.ndarray:
        return np.array([e.objective for e in self.evaluations])

    @property
    def lmls(self) -> np.ndarray:
        return np.array([e.lml for e in self.evaluations])

    @property
    def best_so_far(self) -> np.ndarray:
        return np.maximum.accumulate(self.objectives)

    @property
    def best_index(self) -> int:
        # first occurrence of the maximum
        return int(np.argmax(self.objectives))

    @property
    def best_theta(self) -> np.ndarray:
        return self.evaluations[self.best_index].theta

    @property
    def best_objective(self) -> float:
        return self.evaluations[self.best_index].objective


def fit_surrogate(U, values) -> GPModel:
    """RBF GP on unit-cube inputs; length scale picked from a fixed grid by LML."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    values = np.asarray(values, dtype=float)
    best, best_lml = None, -math.inf
    for t in SURROGATE_THETA_GRID:
        try:
            model = gp_fit(U, values, KernelConfig.rbf(t), noise_var=SURROGATE_NOISE, y_scale="std")
        except (QGPError, LinAlgError):
            continue
        lml = log_marginal_likelihood(model)
        if lml > best_lml:
            best, best_lml = model, lml
    if best is None:
        raise QGPError("surrogate could not be fitted for any length scale")
    return best


def acquisition(surrogate: GPModel, theta, kappa: float):
    """Upper confidence bound ``mu + kappa * sigma`` at surrogate inputs."""
    mean, var = gp_predict(surrogate, theta)
    return mean + kappa * np.sqrt(var)


def propose_next(surrogate: GPModel, space: SearchSpace, kappa: float,
                 rng: np.random.Generator, n_candidates: int = N_CANDIDATES) -> np.ndarray:
    """Acquisition argmax over uniform random candidates in the box.

    Candidates are drawn in unit-cube coordinates; the winner is returned in
    parameter space. ``np.argmax`` breaks ties by the lowest index.
    """
    U = rng.random((n_candidates, space.dim))
    scores = acquisition(surrogate, U, kappa)
    return space.from_unit(U[int(np.argmax(scores))])


def _call_objective(objective, theta):
    try:
        out = objective(theta)
    except (QGPError, ArithmeticError, LinAlgError, ValueError) as exc:
        logger.warning("objective failed at %s: %s", theta, exc)
        return None, math.nan
    if isinstance(out, tuple):
        value, lml = float(out[0]), float(out[1])
    else:
        value, lml = float(out), math.nan
    if not math.isfinite(value):
        return None, lml
    return value, lml


def _surrogate_targets(raw: list) -> np.ndarray:
    finite = [v for v in raw if v is not None]
    floor = (min(finite) if finite else 0.0) - 1.0
    return np.array([floor if v is None else v for v in raw])


def optimize(objective: Callable, space: SearchSpace, init_count: int = 20,
             iterations: int = 30, kappa: float = 1.0,
             rng: np.random.Generator | None = None, seed: int | None = None,
             callback: Callable | None = None) -> BOTrace:
    """Maximize ``objective`` over ``space``.

    ``objective(theta)`` returns a float, or a ``(value, lml)`` tuple so the
    trace can carry the log marginal likelihood alongside the objective.
    Failed evaluations (exceptions from the numerical stack, non-finite
    values) are scored as the worst observed value minus one and the run
    continues. Repeated parameter vectors reuse the cached result.
    """
    if init_count < 2:
        raise ValueError("init_count must be >= 2")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if rng is None:
        rng = np.random.default_rng(seed)
    trace = BOTrace(space, seed, kappa, init_count)
    cache: dict[tuple, tuple] = {}
    raw: list = []

    def evaluate(theta):
        key = tuple(np.asarray(theta, dtype=float).tolist())
        if key not in cache:
            cache[key] = _call_objective(objective, np.array(key))
        value, lml = cache[key]
        raw.append(value)
        failed = value is None
        if failed:
            value = float(_surrogate_targets(raw)[-1])
        trace.evaluations.append(Evaluation(np.array(key), value, lml, failed))
        if callback is not None:
            callback(trace)

    for theta in space.sample(rng, init_count):
        evaluate(theta)
    for _ in range(iterations):
        surrogate = fit_surrogate(space.to_unit(trace.thetas), _surrogate_targets(raw))
        trace.surrogate_thetas.append(surrogate.kernel.rbf_theta)
        evaluate(propose_next(surrogate, space, kappa, rng))
    return trace


def write_trace_csv(trace: BOTrace, path, config: dict | None = None) -> None:
    """Columns ``iter,theta_1..theta_k,objective,lml,best_so_far``.

    The first line is a ``#`` comment holding the run configuration as JSON.
    """
    meta = {"seed": trace.seed, "kappa": trace.kappa, "init_count": trace.init_count,
            "names": list(trace.space.names), "bounds": [list(b) for b in trace.space.bounds],
            "log_scale": trace.space.log_scale}
    if config:
        meta["config"] = config
    k = trace.space.dim
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iter", *[f"theta_{i + 1}" for i in range(k)], "objective", "lml", "best_so_far"])
    for i, (e, best) in enumerate(zip(trace.evaluations, trace.best_so_far), start=1):
        w.writerow([i, *map(format_float, e.theta), format_float(e.objective),
                    format_float(e.lml), format_float(best)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_trace_csv(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Return ``(meta, columns)`` from a file written by :func:`write_trace_csv`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        meta = json.loads(lines[0][1:])
        lines = lines[1:]
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, len(header))
    return meta, {h: data[:, i] for i, h in enumerate(header)}
