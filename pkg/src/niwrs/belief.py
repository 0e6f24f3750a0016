"""Normal-inverse-Wishart belief over the means of K alternatives.

The belief is

    mu | Sigma ~ N_K(theta, Sigma / q),    Sigma ~ IW_K(B, b),

so that ``E[Sigma] = B / (b - K - 1)``.  Alternatives are indexed from 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidHyperparameter,
    NotPositiveDefinite,
    TooFewPilotSamples,
    IndexOutOfRange,
)

SYMMETRY_RTOL = 1e-10
RIDGE_FLOOR = 1e-8


def is_positive_definite(matrix: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        return False
    return True


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def _check_scale_matrix(B: np.ndarray, K: int) -> None:
    if B.shape != (K, K):
        raise DimensionMismatch(f"B has shape {B.shape}, expected {(K, K)}")
    if not np.all(np.isfinite(B)):
        raise NotPositiveDefinite("B has non-finite entries")
    scale = max(np.max(np.abs(B)), np.finfo(float).tiny)
    if np.max(np.abs(B - B.T)) > SYMMETRY_RTOL * scale:
        raise NotPositiveDefinite("B is not symmetric")
    if not is_positive_definite(B):
        raise NotPositiveDefinite("B is not positive definite")


@dataclass(frozen=True, eq=False)
class BeliefState:
    """Hyperparameters ``(q, b, theta, B)`` of the current NIW belief.

    Instances are immutable; the arrays are copied on construction and
    flagged read-only.  Use :func:`new_belief` or the update functions
    rather than mutating fields.
    """

    theta: np.ndarray
    B: np.ndarray
    q: float
    b: float

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=float).reshape(-1)
        B = np.array(self.B, dtype=float)
        K = theta.shape[0]
        if K < 2:
            raise DimensionMismatch(f"need at least 2 alternatives, got {K}")
        if B.ndim != 2:
            raise DimensionMismatch(f"B must be a matrix, got ndim={B.ndim}")
        if not np.all(np.isfinite(theta)):
            raise InvalidHyperparameter("theta has non-finite entries")
        _check_scale_matrix(B, K)
        q, b = float(self.q), float(self.b)
        if not q > 0:
            raise InvalidHyperparameter(f"q must be positive, got {q}")
        if not b > K + 1:
            raise InvalidHyperparameter(f"b must exceed K + 1 = {K + 1}, got {b}")
        theta.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "b", b)

    @property
    def K(self) -> int:
        return self.theta.shape[0]

    def __repr__(self) -> str:
        return f"BeliefState(K={self.K}, q={self.q:g}, b={self.b:g}, theta={self.theta!r})"


def new_belief(theta, B, q: float, b: float) -> BeliefState:
    return BeliefState(theta=theta, B=B, q=q, b=b)


def estimate_prior(pilot, b0: float | None = None, q0: float | None = None,
                   ridge: float = 1e-6) -> BeliefState:
    """Build a prior from ``n0`` full-vector pilot samples.

    ``theta`` is the column mean and ``B = (b0 - K - 1) (S + lam I)``, where
    ``S`` is the unbiased sample covariance and
    ``lam = ridge * max(trace(S) / K, 1e-8)``.  The ridge keeps ``B``
    positive definite when ``n0 <= K`` or a column is constant.

    ``b0`` defaults to ``K + 4`` and ``q0`` to ``n0``: the pilot mean is an
    average of ``n0`` draws, so its spread is ``Sigma / n0``.
    """
    pilot = np.asarray(pilot, dtype=float)
    if pilot.ndim != 2:
        raise DimensionMismatch("pilot must be an n0 x K matrix")
    n0, K = pilot.shape
    if n0 < 2:
        raise TooFewPilotSamples(f"need at least 2 pilot rows, got {n0}")
    if b0 is None:
        b0 = K + 4.0
    if q0 is None:
        q0 = float(n0)
    if not b0 > K + 1:
        raise InvalidHyperparameter(f"b0 must exceed K + 1 = {K + 1}, got {b0}")
    if ridge < 0:
        raise InvalidHyperparameter("ridge must be nonnegative")
    theta = pilot.mean(axis=0)
    S = np.atleast_2d(np.cov(pilot, rowvar=False, ddof=1))
    lam = ridge * max(np.trace(S) / K, RIDGE_FLOOR)
    B = (b0 - K - 1) * symmetrize(S + lam * np.eye(K))
    return BeliefState(theta=theta, B=B, q=q0, b=b0)


def update_full(state: BeliefState, Y) -> BeliefState:
    """Exact conjugate update after observing all K alternatives at once."""
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if Y.shape[0] != state.K:
        raise DimensionMismatch(f"Y has length {Y.shape[0]}, expected {state.K}")
    q = state.q
    resid = state.theta - Y
    theta = (q * state.theta + Y) / (q + 1)
    B = state.B + (q / (q + 1)) * np.outer(resid, resid)
    return BeliefState(theta=theta, B=symmetrize(B), q=q + 1, b=state.b + 1)


def posterior_sigma_mean(state: BeliefState) -> np.ndarray:
    """Posterior mean of the sampling covariance, ``B / (b - K - 1)``."""
    return state.B / (state.b - state.K - 1)


def partition(B, k: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Split ``B`` around index ``k``.

    Returns ``(B_kk, B_{-k,k}, B_{-k|k})`` where the last entry is the Schur
    complement ``B_{-k,-k} - B_{-k,k} B_{k,-k} / B_kk``.
    """
    B = np.asarray(B, dtype=float)
    K = B.shape[0]
    if not 0 <= k < K:
        raise IndexOutOfRange(f"index {k} outside 0..{K - 1}")
    rest = np.arange(K) != k
    Bkk = float(B[k, k])
    Bmk = B[rest, k].copy()
    Bschur = B[np.ix_(rest, rest)] - np.outer(Bmk, Bmk) / Bkk
    return Bkk, Bmk, symmetrize(Bschur)


def assemble(k: int, Bkk: float, Bmk: np.ndarray, Brest: np.ndarray) -> np.ndarray:
    """Inverse of the block split: place ``Bkk``, ``Bmk`` and ``B_{-k,-k}``."""
    K = Bmk.shape[0] + 1
    rest = np.arange(K) != k
    out = np.empty((K, K))
    out[np.ix_(rest, rest)] = Brest
    out[rest, k] = Bmk
    out[k, rest] = Bmk
    out[k, k] = Bkk
    return out
