"""Sampling environments for ranking-and-selection experiments.

Every problem exposes ``K``, ``true_means``, ``sample_one(k, rng)`` and
``sample_all(rng)``; larger true means are better.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, EmptyTable, InvalidRho


class Problem(Protocol):
    K: int
    true_means: np.ndarray
    labels: list[str]

    def sample_one(self, k: int, rng: np.random.Generator) -> float: ...

    def sample_all(self, rng: np.random.Generator) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# correlated multivariate normal
# ---------------------------------------------------------------------------

@dataclass
class MvnProblem:
    """``Y ~ N(mu, A)`` with ``mu = (1/K, ..., 1)`` and ``A_ij = (-rho)^|i-j|``."""

    K: int
    rho: float
    true_means: np.ndarray = field(init=False)
    covariance: np.ndarray = field(init=False)
    labels: list[str] = field(init=False)

    def __post_init__(self) -> None:
        if not 0 <= self.rho < 1:
            raise InvalidRho(f"rho must lie in [0, 1), got {self.rho}")
        if self.K < 1:
            raise DimensionMismatch("K must be positive")
        idx = np.arange(self.K)
        self.true_means = (idx + 1) / self.K
        self.covariance = (-self.rho) ** np.abs(idx[:, None] - idx[None, :])
        self._chol = np.linalg.cholesky(self.covariance)
        self.labels = [f"alt{i + 1}" for i in range(self.K)]

    def sample_one(self, k: int, rng: np.random.Generator) -> float:
        return float(self.true_means[k] + math.sqrt(self.covariance[k, k]) * rng.standard_normal())

    def sample_all(self, rng: np.random.Generator) -> np.ndarray:
        return self.true_means + self._chol @ rng.standard_normal(self.K)


def mvn_problem(K: int = 9, rho: float = 0.5) -> MvnProblem:
    return MvnProblem(K=K, rho=rho)


# ---------------------------------------------------------------------------
# borehole calibration
# ---------------------------------------------------------------------------

BOREHOLE_RANGES = np.array([
    [63070.0, 115600.0],   # x1 transmissivity, upper aquifer
    [0.05, 0.15],          # x2 borehole radius
    [1120.0, 1680.0],      # x3 potentiometric head, upper aquifer
    [63.1, 116.0],         # x4 transmissivity, lower aquifer
    [100.0, 50000.0],      # x5 radius of influence
    [170.0, 410.0],        # x6 (calibration)
    [9588.0, 12045.0],     # x7 (calibration)
])
CONTROL_RANGES = BOREHOLE_RANGES[:5]
PHYSICAL_X6 = 401.0
PHYSICAL_X7 = 11000.0


def _borehole(x1, x2, x3, x4, x5, x6, x7):
    log_ratio = np.log(x5 / x2)
    denom = log_ratio * (1 + 2 * x3 * x1 / (log_ratio * x2**2 * x7) + x1 / x4)
    return np.log(2 * np.pi * x1 * x6 / denom)


def _check_borehole_domain(x: np.ndarray) -> None:
    x2, x5 = x[..., 1], x[..., 4]
    if np.any(x[..., [0, 1, 3, 4, 5, 6]] <= 0):
        raise DomainError("borehole inputs must be positive")
    if np.any(x5 <= x2):
        raise DomainError("log(x5 / x2) must be positive")


def borehole_computer(x) -> float:
    """Log flow rate of the seven-input borehole model."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 7:
        raise DimensionMismatch("borehole model takes 7 inputs")
    _check_borehole_domain(x)
    lo, hi = BOREHOLE_RANGES[:, 0], BOREHOLE_RANGES[:, 1]
    if np.any((x < lo) | (x > hi)):
        warnings.warn("borehole input outside its nominal range", RuntimeWarning, stacklevel=2)
    out = _borehole(*np.moveaxis(x, -1, 0))
    return float(out) if np.ndim(out) == 0 else out


def borehole_truth(x) -> float | np.ndarray:
    """Noise-free physical response: the borehole model at ``x6=401``, ``x7=11000``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 5:
        raise DimensionMismatch("physical system takes 5 control inputs")
    full = np.concatenate([x, np.broadcast_to([PHYSICAL_X6, PHYSICAL_X7], x.shape[:-1] + (2,))], axis=-1)
    return borehole_computer(full)


def borehole_physical(x, rng: np.random.Generator) -> float | np.ndarray:
    """Noisy physical response, truth plus independent ``N(0, 1)``."""
    eta = borehole_truth(x)
    return eta + rng.standard_normal(np.shape(eta))


def lhs_design(d: int, m: int, ranges, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube: one uniform point per stratum in each column, scaled to ``ranges``."""
    if d < 1 or m < 1:
        raise ValueError("d and m must be at least 1")
    ranges = np.asarray(ranges, dtype=float).reshape(d, 2)
    unit = np.empty((m, d))
    for j in range(d):
        unit[:, j] = (rng.permutation(m) + rng.uniform(size=m)) / m
    return ranges[:, 0] + unit * (ranges[:, 1] - ranges[:, 0])


@dataclass(frozen=True)
class BoreholeConfig:
    x6_levels: int = 3
    x7_levels: int = 10
    design_runs: int = 8
    noise_sd: float = 1.0

    def __post_init__(self) -> None:
        if self.x6_levels != 3:
            raise ValueError("x6 uses three levels")
        if self.x7_levels not in (10, 17):
            raise ValueError("x7 uses 10 or 17 levels")
        if self.design_runs < 1:
            raise ValueError("design needs at least one run")

    @property
    def x6_grid(self) -> np.ndarray:
        return np.linspace(*BOREHOLE_RANGES[5], self.x6_levels)

    @property
    def x7_grid(self) -> np.ndarray:
        return np.linspace(*BOREHOLE_RANGES[6], self.x7_levels)


@dataclass
class CalibrationProblem:
    """Choose the ``(x6, x7)`` level pair whose borehole output best matches
    the physical system over a fixed design.

    Samples are negated mean squared discrepancies, so the best level has
    the largest mean.  Alternatives enumerate the grid x6-major.
    """

    config: BoreholeConfig
    design: np.ndarray
    K: int = field(init=False)
    levels: np.ndarray = field(init=False)
    true_means: np.ndarray = field(init=False)
    labels: list[str] = field(init=False)

    def __post_init__(self) -> None:
        cfg = self.config
        x6, x7 = np.meshgrid(cfg.x6_grid, cfg.x7_grid, indexing="ij")
        self.levels = np.column_stack([x6.ravel(), x7.ravel()])
        self.K = self.levels.shape[0]
        m = self.design.shape[0]
        full = np.concatenate([
            np.broadcast_to(self.design[None], (self.K, m, 5)),
            np.broadcast_to(self.levels[:, None, :], (self.K, m, 2)),
        ], axis=-1)
        self._model = borehole_computer(full)                 # K x m
        self._truth = borehole_truth(self.design)              # m
        gap = self._truth[None, :] - self._model
        self.true_means = -(np.mean(gap**2, axis=1) + cfg.noise_sd**2)
        self.labels = [f"x6={a:g};x7={b:g}" for a, b in self.levels]

    def _observe(self, rng: np.random.Generator) -> np.ndarray:
        return self._truth + self.config.noise_sd * rng.standard_normal(self._truth.shape)

    def sample_one(self, k: int, rng: np.random.Generator) -> float:
        eta = self._observe(rng)
        return float(-np.mean((eta - self._model[k]) ** 2))

    def sample_all(self, rng: np.random.Generator) -> np.ndarray:
        eta = self._observe(rng)
        return -np.mean((eta[None, :] - self._model) ** 2, axis=1)


def calibration_problem(cfg: BoreholeConfig, rng: np.random.Generator) -> CalibrationProblem:
    design = lhs_design(5, cfg.design_runs, CONTROL_RANGES, rng)
    return CalibrationProblem(config=cfg, design=design)


# ---------------------------------------------------------------------------
# bootstrap over historical joint observations
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalProblem:
    """Resample rows of a table of joint observations (one column per alternative)."""

    table: np.ndarray
    labels: list[str] = field(default_factory=list)
    K: int = field(init=False)
    true_means: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.table = np.asarray(self.table, dtype=float)
        if self.table.ndim != 2 or self.table.shape[0] == 0 or self.table.shape[1] == 0:
            raise EmptyTable("table must be a non-empty n x K matrix")
        if self.table.shape[0] < 2:
            raise EmptyTable("need at least two rows to resample")
        if not np.all(np.isfinite(self.table)):
            raise ValueError("table contains non-finite values")
        self.K = self.table.shape[1]
        self.true_means = self.table.mean(axis=0)
        if not self.labels:
            self.labels = [f"alt{i + 1}" for i in range(self.K)]

    def sample_one(self, k: int, rng: np.random.Generator) -> float:
        return float(self.table[rng.integers(self.table.shape[0]), k])

    def sample_all(self, rng: np.random.Generator) -> np.ndarray:
        return self.table[rng.integers(self.table.shape[0])].copy()


def empirical_problem(table, labels: Sequence[str] | None = None) -> EmpiricalProblem:
    return EmpiricalProblem(table=table, labels=list(labels or []))


def load_empirical_csv(path: str | Path) -> EmpiricalProblem:
    """Read a CSV whose header row holds alternative labels and whose
    remaining rows are joint observations."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyTable(f"{path}: file is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    if not body:
        raise EmptyTable(f"{path}: no data rows")
    try:
        table = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    if table.shape[1] != len(header):
        raise DimensionMismatch(f"{path}: header has {len(header)} labels, rows have {table.shape[1]}")
    return empirical_problem(table, [h.strip() for h in header])
