"""Shared value types: datasets, energy windows, run configuration, splits.

Energies are kept in cm^-1 throughout. Input vectors are plain 1-D float
arrays; a dataset stores them row-wise in an ``(n, d)`` array.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

KERNEL_KINDS = ("entangled", "unentangled", "rbf")
HARTREE_CM = 219474.6313705  # cm^-1 per hartree


class QGPError(Exception):
    """Base class for errors raised by this package."""


class DataError(QGPError):
    """Malformed or inconsistent input data."""


class InsufficientData(DataError):
    """Too few points are available for the requested operation."""


class DimensionMismatch(QGPError, ValueError):
    pass


class NumericalFailure(QGPError):
    """A numerical routine could not produce a usable result."""


def as_input_vector(x, dimension: int | None = None) -> np.ndarray:
    """Validate ``x`` as a finite 1-D float vector of the given length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"input vector must be 1-D, got shape {v.shape}")
    if dimension is not None and v.shape[0] != dimension:
        raise DimensionMismatch(f"expected {dimension} components, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise DataError("input vector has non-finite components")
    return v


@dataclass(frozen=True)
class Dataset:
    """Geometry/energy pairs. ``X`` has shape ``(n, d)``, ``y`` shape ``(n,)``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float, ndmin=2)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.shape[0] == 0 or X.shape[1] == 0:
            raise DataError("dataset must be non-empty")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} inputs but {y.shape[0]} energies")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx])


@dataclass(frozen=True)
class EnergyWindow:
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"energy window needs lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, energies) -> np.ndarray:
        e = np.asarray(energies, dtype=float)
        return (e >= self.lo) & (e <= self.hi)


@dataclass(frozen=True)
class RunConfig:
    """Settings for one experiment run.

    Defaults: 20 random initial BO points,
    ``kappa = 1`` and objective offset ``a = 1``. ``abs_pair_diff`` switches
    the pair encoding to ``exp(-|x_i - x_j| / theta_12)``; it is off by
    default. GP targets are centered and then divided by ``target_scale``
    (cm^-1), i.e. fitted in hartree by default; RMSE is still reported in
    cm^-1.
    """

    seed: int = 0
    train_n: int = 200
    window: EnergyWindow = field(default_factory=EnergyWindow)
    kernel_kind: str = "entangled"
    bo_init: int = 20
    bo_iters: int = 30
    kappa: float = 1.0
    objective_offset_a: float = 1.0
    noise_var: float = 0.0
    theta_bounds: tuple[float, float] = (0.05, 20.0)
    abs_pair_diff: bool = False
    target_scale: float = HARTREE_CM

    def __post_init__(self):
        if self.seed < 0 or int(self.seed) != self.seed:
            raise ValueError("seed must be an unsigned integer")
        if self.train_n < 1:
            raise ValueError("train_n must be positive")
        if self.kernel_kind not in KERNEL_KINDS:
            raise ValueError(f"kernel_kind must be one of {KERNEL_KINDS}")
        if self.bo_init < 2:
            raise ValueError("bo_init must be at least 2")
        if self.bo_iters < 0:
            raise ValueError("bo_iters must be non-negative")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if not self.objective_offset_a > 0:
            raise ValueError("objective_offset_a must be positive")
        if self.noise_var < 0:
            raise ValueError("noise_var must be non-negative")
        if not (self.target_scale > 0 and math.isfinite(self.target_scale)):
            raise ValueError("target_scale must be positive and finite")
        lo, hi = self.theta_bounds
        if not 0 < lo < hi:
            raise ValueError("theta_bounds must satisfy 0 < lo < hi")

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinity; an open window side is null
        d["window"] = [v if math.isfinite(v) else None for v in (self.window.lo, self.window.hi)]
        d["theta_bounds"] = list(self.theta_bounds)
        return d


def split_train_test(data: Dataset, cfg: RunConfig, rng: np.random.Generator):
    """Draw ``cfg.train_n`` training points from inside ``cfg.window``.

    Sampling is uniform without replacement over the in-window points. The
    test set is every other point of ``data``, including points outside the
    window, in their original order.
    """
    pool = np.flatnonzero(cfg.window.contains(data.y))
    if pool.size < cfg.train_n:
        raise InsufficientData(
            f"{pool.size} points in window [{cfg.window.lo}, {cfg.window.hi}], "
            f"need {cfg.train_n}"
        )
    train_idx = np.sort(rng.choice(pool, size=cfg.train_n, replace=False))
    mask = np.ones(len(data), dtype=bool)
    mask[train_idx] = False
    test_idx = np.flatnonzero(mask)
    train = data.subset(train_idx)
    # an empty Dataset is not allowed, so an exhaustive draw yields None
    test = data.subset(test_idx) if test_idx.size else None
    return train, test


def read_dataset(path) -> Dataset:
    """Read a ``x1,...,xd,energy`` CSV file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header[-1] != "energy" or header[:-1] != [f"x{i + 1}" for i in range(d)]:
        raise DataError(f"{path}: header must be x1,...,xd,energy, got {','.join(header)}")
    try:
        values = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if values.size == 0:
        raise DataError(f"{path}: no data rows")
    if values.ndim != 2 or values.shape[1] != d + 1:
        raise DataError(f"{path}: every row needs {d + 1} fields")
    return Dataset(values[:, :d], values[:, d])


def format_float(v: float) -> str:
    # repr is the shortest string that round-trips a double exactly
    return repr(float(v))


def write_dataset(data: Dataset, path) -> None:
    d = data.dimension
    lines = [",".join([f"x{i + 1}" for i in range(d)] + ["energy"])]
    for xi, yi in zip(data.X, data.y):
        lines.append(",".join(format_float(v) for v in (*xi, yi)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
