"""Approximate conjugate updates after measuring a single alternative.

After observing only coordinate ``k`` the exact posterior leaves the NIW
family.  Each rule here projects it back, incrementing ``q`` and ``b`` by
``1/K``:

* ``KL``        - Kullback-Leibler projection of the full posterior.
* ``MOMENT``    - matches the posterior means of ``mu`` and of the scaled
  conditional covariance.
* ``MOMENT_KL`` - moment-matched ``theta``; ``B`` from a KL projection of
  the conditional covariance's posterior.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .belief import BeliefState, assemble, partition, symmetrize, update_full
from .errors import IndexOutOfRange, NotPositiveDefinite, RuleInputMismatch


class UpdateRule(enum.Enum):
    FULL_CONJUGATE = "full"
    KL = "kl"
    MOMENT = "moment"
    MOMENT_KL = "moment-kl"

    @classmethod
    def parse(cls, text: str) -> "UpdateRule":
        key = text.strip().lower().replace("_", "-")
        aliases = {"fullconjugate": "full", "full-conjugate": "full", "momentkl": "moment-kl"}
        key = aliases.get(key, key)
        for rule in cls:
            if rule.value == key:
                return rule
        raise ValueError(f"unknown update rule {text!r}")

    @property
    def label(self) -> str:
        return {"full": "Full", "kl": "KL", "moment": "Moment", "moment-kl": "Moment-KL"}[self.value]


SINGLE_RULES = (UpdateRule.KL, UpdateRule.MOMENT, UpdateRule.MOMENT_KL)


@dataclass(frozen=True)
class SingleObservation:
    """Measured value ``y`` of alternative ``k`` (0-based)."""

    k: int
    y: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.y):
            raise ValueError(f"observation must be finite, got {self.y}")


def _check_index(state: BeliefState, k: int) -> None:
    if not 0 <= k < state.K:
        raise IndexOutOfRange(f"alternative {k} outside 0..{state.K - 1}")


def tilde_q(state: BeliefState, obs: SingleObservation) -> float:
    """``1 + q (y - theta_k)^2 / ((q + 1) B_kk)``; always at least 1."""
    q = state.q
    r = obs.y - state.theta[obs.k]
    return 1.0 + q * r * r / ((q + 1) * state.B[obs.k, obs.k])


def _moment_theta(state: BeliefState, obs: SingleObservation) -> np.ndarray:
    k = obs.k
    col = state.B[:, k]
    return state.theta + col / col[k] * (obs.y - state.theta[k]) / (state.q + 1)


def update_moment(state: BeliefState, obs: SingleObservation) -> BeliefState:
    _check_index(state, obs.k)
    K, q, b, k = state.K, state.q, state.b, obs.k
    q1, b1 = q + 1.0 / K, b + 1.0 / K
    tq = tilde_q(state, obs)
    Bkk, Bmk, Bschur = partition(state.B, k)

    factor = q1 * (b1 - K - 1) / (b - K)
    new_kk = factor * tq / (q + 1) * Bkk
    new_mk = factor * tq / (q + 1) * Bmk
    new_rest = factor * (Bschur / q + tq / (q + 1) * (Bschur / (b - K) + np.outer(Bmk, Bmk) / Bkk))

    B = symmetrize(assemble(k, new_kk, new_mk, new_rest))
    return BeliefState(theta=_moment_theta(state, obs), B=B, q=q1, b=b1)


def update_kl(state: BeliefState, obs: SingleObservation) -> BeliefState:
    """KL-projection update with the ``1/K`` degrees-of-freedom increment.

    Raises :class:`NotPositiveDefinite` instead of repairing the matrix if the
    rank-one correction leaves ``B`` indefinite.
    """
    _check_index(state, obs.k)
    K, q, b, k = state.K, state.q, state.b, obs.k
    q1, b1 = q + 1.0 / K, b + 1.0 / K
    col = state.B[:, k]
    Bkk = col[k]
    r = obs.y - state.theta[k]

    denom = b1 * (q + 1) - K + 1
    theta = state.theta + r / (denom / (b1 - K + 1) * Bkk) * col
    gain = q * (b1 - K + 1) * r * r / denom - Bkk / b
    B = (b1 / b) * state.B + (b1 / (b + 1)) * gain * np.outer(col, col) / Bkk**2
    B = symmetrize(B)
    try:
        return BeliefState(theta=theta, B=B, q=q1, b=b1)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"KL update lost positive definiteness at k={k}, y={obs.y}") from exc


def update_moment_kl(state: BeliefState, obs: SingleObservation) -> BeliefState:
    _check_index(state, obs.k)
    K, q, b, k = state.K, state.q, state.b, obs.k
    q1, b1 = q + 1.0 / K, b + 1.0 / K
    r = obs.y - state.theta[k]
    Bkk, Bmk, Bschur = partition(state.B, k)

    new_kk = q1 * (b1 - K + 1) * (Bkk + q * r * r / (q + 1)) / ((b + 1) * (q + 1))
    new_mk = new_kk * Bmk / Bkk
    new_rest = (b1 * q1 / (b * q)) * Bschur + np.outer(new_mk, new_mk) / new_kk

    B = symmetrize(assemble(k, new_kk, new_mk, new_rest))
    return BeliefState(theta=_moment_theta(state, obs), B=B, q=q1, b=b1)


_SINGLE_UPDATES = {
    UpdateRule.KL: update_kl,
    UpdateRule.MOMENT: update_moment,
    UpdateRule.MOMENT_KL: update_moment_kl,
}


def apply(rule: UpdateRule, state: BeliefState, observation) -> BeliefState:
    """Dispatch to the update for ``rule``.

    ``FULL_CONJUGATE`` takes a length-K vector; the other rules take a
    :class:`SingleObservation`.
    """
    if rule is UpdateRule.FULL_CONJUGATE:
        if isinstance(observation, SingleObservation):
            raise RuleInputMismatch("full conjugate update needs a length-K vector")
        return update_full(state, observation)
    if not isinstance(observation, SingleObservation):
        raise RuleInputMismatch(f"{rule.label} update needs a SingleObservation")
    return _SINGLE_UPDATES[rule](state, observation)
