"""Monte Carlo oracles for checking the single-alternative updates.

Two routes estimate the same posterior moments after observing ``y`` at
alternative ``k``:

* :func:`oracle_posterior_mean` reweights draws from the prior by the
  likelihood of ``y`` (self-normalized importance sampling).  Prior draws
  come from :mod:`scipy.stats`.
* :func:`oracle_tilde_sigma_mean` samples the block decomposition
  ``(A, a, a_tilde, c)`` of the scaled conditional covariance directly,
  using a Bartlett inverse-Wishart sampler.

Neither is used inside the sequential loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .belief import BeliefState, is_positive_definite, partition
from .errors import DegenerateWeights, NotPositiveDefinite
from .updates import SingleObservation

MIN_DRAWS = 1000
MIN_ESS = 50.0


@dataclass(frozen=True)
class OracleDecomposition:
    """One or more joint draws of ``(A, a, a_tilde, c)``.

    A single draw has shapes ``(K-1, K-1)``, ``(K-1,)``, ``(K-1,)``, ``()``;
    batched draws carry a leading axis.
    """

    A: np.ndarray
    a: np.ndarray
    a_tilde: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class MomentEstimate:
    mean: np.ndarray
    scale: np.ndarray
    se_mean: np.ndarray
    se_scale: np.ndarray


def sample_inverse_wishart(df: float, scale, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` matrices from ``IW_p(df, scale)`` (mean ``scale/(df-p-1)``).

    Bartlett decomposition of ``W ~ Wishart(df, scale^{-1})``, then
    ``Sigma = W^{-1}``.  Real ``df > p - 1`` is allowed.
    """
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    p = scale.shape[0]
    if not df > p - 1:
        raise ValueError(f"inverse-Wishart needs df > p - 1, got df={df}, p={p}")
    L = np.linalg.cholesky(np.linalg.inv(scale))
    Z = np.zeros((size, p, p))
    Z[:, np.arange(p), np.arange(p)] = np.sqrt(rng.chisquare(df - np.arange(p), size=(size, p)))
    rows, cols = np.tril_indices(p, -1)
    Z[:, rows, cols] = rng.standard_normal((size, rows.size))
    # W = L Z Z^T L^T  =>  W^{-1} = L^{-T} Z^{-T} Z^{-1} L^{-1}
    M = np.linalg.solve(L @ Z, np.broadcast_to(np.eye(p), (size, p, p)))
    return np.einsum("nji,njk->nik", M, M)


def _decomposition_params(state: BeliefState, obs: SingleObservation):
    K, q, b, k = state.K, state.q, state.b, obs.k
    q1 = q + 1.0 / K
    Bkk, Bmk, Bschur = partition(state.B, k)
    r = obs.y - state.theta[k]
    c_scale = q1 / (q + 1) * (Bkk + q * r * r / (q + 1))
    return q1, Bkk, Bmk, Bschur, c_scale


def sample_decomposition(state: BeliefState, obs: SingleObservation, rng: np.random.Generator,
                         size: int | None = None) -> OracleDecomposition:
    """Draw from the posterior of the scaled conditional covariance's blocks.

    ``A ~ IW_{K-1}(b, (q'/q) B_{-k|k})`` and
    ``c ~ IW_1(b-K+2, (q'/(q+1)) [B_kk + q r^2/(q+1)])`` independently, then
    ``a | A ~ N(B_{-k,k}/B_kk, q A/(q' B_kk))`` and ``a_tilde = c a``.
    """
    n = 1 if size is None else int(size)
    K, q, b = state.K, state.q, state.b
    q1, Bkk, Bmk, Bschur, c_scale = _decomposition_params(state, obs)

    A = sample_inverse_wishart(b, q1 / q * Bschur, n, rng)
    c = c_scale / rng.chisquare(b - K + 2, size=n)
    chol = np.linalg.cholesky(q / (q1 * Bkk) * A)
    a = Bmk / Bkk + np.einsum("nij,nj->ni", chol, rng.standard_normal((n, K - 1)))
    a_tilde = c[:, None] * a
    if size is None:
        return OracleDecomposition(A=A[0], a=a[0], a_tilde=a_tilde[0], c=c[0])
    return OracleDecomposition(A=A, a=a, a_tilde=a_tilde, c=c)


def reconstruct_tilde_sigma(draws: OracleDecomposition, k: int) -> np.ndarray:
    """Stack ``[[A + c a a^T, a_tilde], [a_tilde^T, c]]`` with the k-th block in place."""
    A = np.asarray(draws.A)
    batched = A.ndim == 3
    A = A if batched else A[None]
    a = np.asarray(draws.a).reshape(A.shape[0], -1)
    at = np.asarray(draws.a_tilde).reshape(A.shape[0], -1)
    c = np.asarray(draws.c).reshape(-1)
    n, K = A.shape[0], A.shape[1] + 1
    rest = np.flatnonzero(np.arange(K) != k)
    out = np.empty((n, K, K))
    out[:, rest[:, None], rest[None, :]] = A + c[:, None, None] * a[:, :, None] * a[:, None, :]
    out[:, rest, k] = at
    out[:, k, rest] = at
    out[:, k, k] = c
    return out if batched else out[0]


def _mean_and_se(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # jackknife standard error of a sample mean reduces to sd / sqrt(n)
    n = x.shape[0]
    return x.mean(axis=0), x.std(axis=0, ddof=1) / np.sqrt(n)


def oracle_tilde_sigma_mean(state: BeliefState, obs: SingleObservation, n_draws: int,
                            rng: np.random.Generator) -> MomentEstimate:
    """Posterior means of ``theta_tilde`` and ``Sigma_tilde`` from decomposition draws.

    ``scale`` estimates ``E[Sigma_tilde | y]``, which the moment rule scales
    by ``b' - K - 1``.  ``mean`` estimates ``E[mu | y]`` through the
    conditional mean ``theta + r/(q+1) * (1 at k, a elsewhere)``.
    """
    if n_draws < MIN_DRAWS:
        raise ValueError(f"n_draws must be at least {MIN_DRAWS}")
    k = obs.k
    draws = sample_decomposition(state, obs, rng, size=n_draws)
    sig = reconstruct_tilde_sigma(draws, k)
    rest = np.arange(state.K) != k
    direction = np.ones((n_draws, state.K))
    direction[:, rest] = draws.a
    theta_tilde = state.theta + (obs.y - state.theta[k]) / (state.q + 1) * direction
    mean, se_mean = _mean_and_se(theta_tilde)
    scale, se_scale = _mean_and_se(sig)
    return MomentEstimate(mean=mean, scale=scale, se_mean=se_mean, se_scale=se_scale)


def tilde_sigma_of(sigma: np.ndarray, q: float, q1: float, k: int) -> np.ndarray:
    """Map draws of ``Sigma`` to ``Sigma_tilde = q' Var(mu | Sigma, y)``."""
    col = sigma[:, :, k]
    skk = sigma[:, k, k]
    post_cov = sigma / q - col[:, :, None] * col[:, None, :] / (q * (q + 1) * skk[:, None, None])
    return q1 * post_cov


def oracle_posterior_mean(state: BeliefState, obs: SingleObservation, n_draws: int,
                          rng: np.random.Generator) -> MomentEstimate:
    """Self-normalized importance-sampling estimate of ``E[mu | y_k]``.

    Proposals ``(mu, Sigma)`` come from the prior; weights are the
    likelihood ``N(y; mu_k, Sigma_kk)``.  ``scale`` is the weighted mean of
    ``Sigma_tilde`` computed directly from each ``Sigma`` draw.  Standard
    errors use the delta method for ratio estimators.

    Raises :class:`DegenerateWeights` if the effective sample size is below 50.
    """
    if n_draws < MIN_DRAWS:
        raise ValueError(f"n_draws must be at least {MIN_DRAWS}")
    K, q, k = state.K, state.q, obs.k
    sigma = stats.invwishart(df=state.b, scale=state.B).rvs(size=n_draws, random_state=rng)
    sigma = np.asarray(sigma).reshape(n_draws, K, K)
    chol = np.linalg.cholesky(sigma / q)
    mu = state.theta + np.einsum("nij,nj->ni", chol, rng.standard_normal((n_draws, K)))

    skk = sigma[:, k, k]
    logw = -0.5 * np.log(skk) - 0.5 * (obs.y - mu[:, k]) ** 2 / skk
    w = np.exp(logw - logw.max())
    w /= w.sum()
    ess = 1.0 / np.sum(w * w)
    if ess < MIN_ESS:
        raise DegenerateWeights(f"effective sample size {ess:.1f} below {MIN_ESS:g}")

    def weighted(x):
        flat = x.reshape(n_draws, -1)
        m = w @ flat
        se = np.sqrt(np.sum((w[:, None] * (flat - m)) ** 2, axis=0))
        return m.reshape(x.shape[1:]), se.reshape(x.shape[1:])

    mean, se_mean = weighted(mu)
    scale, se_scale = weighted(tilde_sigma_of(sigma, q, q + 1.0 / K, k))
    return MomentEstimate(mean=mean, scale=scale, se_mean=se_mean, se_scale=se_scale)


def dkl_objective(B_candidate, state: BeliefState, obs: SingleObservation) -> float:
    """Divergence (up to an additive constant) between the posterior of
    ``Sigma_tilde`` and ``IW(B_candidate, b + 1/K)``, as a function of the
    candidate scale.  Only differences between candidates are meaningful.
    """
    Bc = np.asarray(B_candidate, dtype=float)
    if Bc.shape != state.B.shape or not np.allclose(Bc, Bc.T, rtol=0, atol=1e-10 * np.abs(Bc).max()):
        raise NotPositiveDefinite("candidate must be a symmetric K x K matrix")
    if not is_positive_definite(Bc):
        raise NotPositiveDefinite("candidate is not positive definite")
    K, q, b, k = state.K, state.q, state.b, obs.k
    q1, b1 = q + 1.0 / K, b + 1.0 / K
    r = obs.y - state.theta[k]
    Bkk_n, Bmk_n, Bschur_n = partition(state.B, k)
    Ckk, Cmk, Cschur = partition(Bc, k)

    diag_term = (0.5 * (b + 1) * np.log(Ckk)
                 + q1 * (b1 - K + 1) * Bkk_n / (2 * (q + 1) * Ckk) * (1 + q * r * r / ((q + 1) * Bkk_n)))
    _, logdet = np.linalg.slogdet(Cschur)
    schur_term = 0.5 * b * logdet + q1 * b1 / (2 * q) * np.trace(np.linalg.solve(Cschur, Bschur_n))
    d = Cmk / Ckk - Bmk_n / Bkk_n
    direction_term = q1 * Bkk_n / (2 * q) * d @ np.linalg.solve(Cschur, d)
    return float(diag_term + schur_term + direction_term)
