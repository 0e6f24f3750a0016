"""Oracle checks comparing closed forms against independent Monte Carlo.

Each check returns a :class:`CheckResult`; the ``verify`` CLI subcommand and
the acceptance tests both run them.  Randomized K=3 states use ``b`` in
``[K + 4, K + 12]`` so the Monte Carlo estimators have finite variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import BeliefState, new_belief, partition
from .kg import expected_max_affine
from .oracle import (
    dkl_objective,
    oracle_posterior_mean,
    oracle_tilde_sigma_mean,
    sample_decomposition,
)
from .updates import SingleObservation, update_moment, update_moment_kl

N_SE = 3.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def random_state(rng: np.random.Generator, K: int = 3) -> BeliefState:
    G = rng.standard_normal((K, K))
    B = G @ G.T + 0.5 * np.eye(K)
    return new_belief(rng.normal(0, 1, K), B, q=rng.uniform(0.5, 4.0), b=K + rng.uniform(4.0, 12.0))


def random_observation(state: BeliefState, rng: np.random.Generator, bound: float = 2.0) -> SingleObservation:
    k = int(rng.integers(state.K))
    r = rng.uniform(-bound, bound) * np.sqrt(state.B[k, k])
    return SingleObservation(k, state.theta[k] + r)


def _z_scores(estimate, se, target) -> np.ndarray:
    # entries that are deterministic under the sampler have se == 0
    diff = np.abs(np.asarray(estimate) - np.asarray(target))
    floor = 1e-12 * (1.0 + np.abs(target))
    return np.where(se > 0, diff / np.maximum(se, 1e-300), np.where(diff <= floor, 0.0, np.inf))


def check_moment_rule(n_states: int, n_draws: int, seed: int) -> CheckResult:
    """Moment rule versus both oracles: theta' against importance sampling,
    ``B' / (b' - K - 1)`` against the decomposition sampler."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    fails = 0
    for _ in range(n_states):
        state = random_state(rng)
        obs = random_observation(state, rng)
        post = update_moment(state, obs)
        target_scale = post.B / (post.b - post.K - 1)
        est_mu = oracle_posterior_mean(state, obs, n_draws, rng)
        est_sig = oracle_tilde_sigma_mean(state, obs, n_draws, rng)
        iu = np.triu_indices(state.K)
        z = np.concatenate([
            _z_scores(est_mu.mean, est_mu.se_mean, post.theta),
            _z_scores(est_sig.scale[iu], est_sig.se_scale[iu], target_scale[iu]),
        ])
        worst = max(worst, float(z.max()))
        fails += int(np.sum(z > N_SE))
    return CheckResult("moment rule vs oracles", fails == 0,
                       f"{n_states} states, {n_draws} draws, worst |z|={worst:.2f}, {fails} entries beyond {N_SE:g} SE")


def check_oracles_agree(n_states: int, n_draws: int, seed: int) -> CheckResult:
    """Importance sampling and the decomposition sampler give the same
    ``E[mu | y]`` and ``E[Sigma_tilde | y]``."""
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, 0
    for _ in range(n_states):
        state = random_state(rng)
        obs = random_observation(state, rng)
        a = oracle_posterior_mean(state, obs, n_draws, rng)
        b = oracle_tilde_sigma_mean(state, obs, n_draws, rng)
        iu = np.triu_indices(state.K)
        z = np.concatenate([
            np.abs(a.mean - b.mean) / np.hypot(a.se_mean, b.se_mean),
            np.abs(a.scale - b.scale)[iu] / np.hypot(a.se_scale, b.se_scale)[iu],
        ])
        worst = max(worst, float(z.max()))
        fails += int(np.sum(z > N_SE))
    return CheckResult("importance sampling vs decomposition", fails == 0,
                       f"{n_states} states, worst |z|={worst:.2f}, {fails} entries beyond {N_SE:g} SE")


def decomposition_moments(state: BeliefState, obs: SingleObservation) -> dict[str, np.ndarray]:
    """Closed-form posterior means of ``A``, ``c``, ``a_tilde`` and ``c a a^T``."""
    K, q, b, k = state.K, state.q, state.b, obs.k
    q1 = q + 1.0 / K
    Bkk, Bmk, Bschur = partition(state.B, k)
    r = obs.y - state.theta[k]
    EA = q1 * Bschur / (q * (b - K))
    Ec = q1 / ((q + 1) * (b - K)) * (Bkk + q * r * r / (q + 1))
    tq = 1 + q * r * r / ((q + 1) * Bkk)
    Eat = q1 / ((q + 1) * (b - K)) * tq * Bmk
    Ecaa = q1 / ((q + 1) * (b - K)) * tq * (Bschur / (b - K) + np.outer(Bmk, Bmk) / Bkk)
    return {"A": EA, "c": np.array(Ec), "a_tilde": Eat, "caa": Ecaa}


def check_decomposition_moments(n_states: int, n_draws: int, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, 0
    for _ in range(n_states):
        state = random_state(rng)
        obs = random_observation(state, rng)
        d = sample_decomposition(state, obs, rng, size=n_draws)
        caa = d.c[:, None, None] * d.a[:, :, None] * d.a[:, None, :]
        expected = decomposition_moments(state, obs)
        iu = np.triu_indices(state.K - 1)
        for name, draws in (("A", d.A), ("c", d.c), ("a_tilde", d.a_tilde), ("caa", caa)):
            mean = draws.mean(axis=0)
            se = draws.std(axis=0, ddof=1) / np.sqrt(n_draws)
            exp = expected[name]
            if exp.ndim == 2:
                mean, se, exp = mean[iu], se[iu], exp[iu]
            z = np.atleast_1d(np.abs(mean - exp) / se)
            worst = max(worst, float(z.max()))
            fails += int(np.sum(z > N_SE))
    return CheckResult("decomposition moments", fails == 0,
                       f"{n_states} states, {n_draws} draws, worst |z|={worst:.2f}, {fails} entries beyond {N_SE:g} SE")


def perturb(B: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetrized ``B (I + eps E)`` with ``E`` symmetric standard normal."""
    E = rng.standard_normal(B.shape)
    E = 0.5 * (E + E.T)
    P = B @ (np.eye(B.shape[0]) + eps * E)
    return 0.5 * (P + P.T)


def check_moment_kl_minimizer(n_states: int, n_perturb: int, seed: int, eps: float = 1e-3) -> CheckResult:
    rng = np.random.default_rng(seed)
    trials = wins = 0
    for _ in range(n_states):
        state = random_state(rng)
        obs = random_observation(state, rng)
        B_star = update_moment_kl(state, obs).B
        d_star = dkl_objective(B_star, state, obs)
        for _ in range(n_perturb):
            trials += 1
            wins += int(d_star <= dkl_objective(perturb(B_star, eps, rng), state, obs))
    return CheckResult("moment-KL scale minimizes divergence", wins == trials,
                       f"{wins}/{trials} perturbations no better than the closed form")


def random_lines(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float]:
    """Random (intercepts, slopes, dof) with some tied slopes and dominated lines."""
    n = int(rng.integers(2, 9))
    a = rng.normal(0, 1, n)
    s = rng.normal(0, 1, n)
    if n > 2 and rng.uniform() < 0.5:
        s[1] = s[0]
    if n > 3 and rng.uniform() < 0.5:
        a[2] = a.min() - 5.0  # buried beneath the others
    return a, s, float(rng.uniform(2.0, 30.0))


def check_expected_max(n_instances: int, n_draws: int, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, 0
    for _ in range(n_instances):
        a, s, nu = random_lines(rng)
        closed = expected_max_affine(a, s, nu)
        T = rng.standard_t(nu, size=n_draws)
        m = np.max(a[None, :] + s[None, :] * T[:, None], axis=1)
        z = abs(m.mean() - closed) / (m.std(ddof=1) / np.sqrt(n_draws))
        worst = max(worst, z)
        fails += int(z > N_SE)
    return CheckResult("expected max of lines vs Monte Carlo", fails == 0,
                       f"{n_instances} instances, {n_draws} draws, worst |z|={worst:.2f}")


def run_all(draws: int = 100_000, seed: int = 1) -> list[CheckResult]:
    return [
        check_moment_rule(5, draws, seed),
        check_oracles_agree(3, draws, seed + 1),
        check_decomposition_moments(5, draws, seed + 2),
        check_moment_kl_minimizer(10, 100, seed + 3),
        check_expected_max(20, draws, seed + 4),
    ]
