"""Knowledge-gradient (value of information) sampling policy.

Measuring alternative ``k`` moves the belief mean along a line,
``theta' = theta + s(k) T`` with ``T`` Student-t on ``b - K + 1`` degrees of
freedom.  The value of measuring ``k`` is ``E[max_j theta'_j] - max_j theta_j``,
computed exactly from the upper envelope of the lines ``theta_j + s_j(k) t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .belief import BeliefState
from .errors import DimensionMismatch, InvalidDof, UnsupportedRule
from .tdist import positive_part_scalar
from .updates import UpdateRule

SLOPE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class KgCoefficients:
    s: np.ndarray
    nu: float


@njit(cache=True)
def _expected_max_affine(a, s, nu):
    n = a.shape[0]
    order = np.argsort(s, kind="mergesort")
    scale = 0.0
    for i in range(n):
        if abs(s[i]) > scale:
            scale = abs(s[i])
    tol = SLOPE_TIE_TOL * (scale if scale > 1.0 else 1.0)

    # collapse equal slopes, keeping the largest intercept
    la = np.empty(n)
    ls = np.empty(n)
    m = 0
    for i in range(n):
        j = order[i]
        if m > 0 and s[j] - ls[m - 1] <= tol:
            if a[j] > la[m - 1]:
                la[m - 1] = a[j]
        else:
            la[m] = a[j]
            ls[m] = s[j]
            m += 1

    # upper envelope; bp[i] is where line i starts to dominate
    ea = np.empty(m)
    es = np.empty(m)
    bp = np.empty(m)
    top = 0
    for i in range(m):
        c = -np.inf
        while top > 0:
            c = (ea[top - 1] - la[i]) / (ls[i] - es[top - 1])
            if c <= bp[top - 1]:
                top -= 1
                c = -np.inf
            else:
                break
        ea[top] = la[i]
        es[top] = ls[i]
        bp[top] = c
        top += 1

    # Measure the envelope against the line on top at t = 0, whose intercept
    # is max(a).  Every term is then nonnegative, so a tiny excess is not
    # lost to cancellation.
    j0 = 0
    while j0 + 1 < top and bp[j0 + 1] <= 0.0:
        j0 += 1
    excess = 0.0
    for i in range(1, top):
        if i <= j0:
            excess += (es[i] - es[i - 1]) * positive_part_scalar(-bp[i], nu)
        else:
            excess += (es[i] - es[i - 1]) * positive_part_scalar(bp[i], nu)
    return ea[j0], excess


@njit(cache=True)
def _voi_kernel(theta, S, nu):
    K = S.shape[0]
    out = np.zeros(K)
    for k in range(K):
        row = S[k]
        if np.all(row == 0.0):
            continue
        out[k] = _expected_max_affine(theta, row, nu)[1]
    return out


def expected_max_affine(a, s, nu: float) -> float:
    """``E[max_j (a_j + s_j T)]`` for ``T ~ t(nu)``, ``nu > 1``."""
    a = np.ascontiguousarray(a, dtype=float).reshape(-1)
    s = np.ascontiguousarray(s, dtype=float).reshape(-1)
    if a.shape != s.shape or a.size == 0:
        raise DimensionMismatch("intercepts and slopes must be equal, nonzero length")
    nu = float(nu)
    if not nu > 1:
        raise InvalidDof(f"need nu > 1 for a finite mean, got {nu}")
    top, excess = _expected_max_affine(a, s, nu)
    return float(top + excess)


def _slope_factors(state: BeliefState, rule: UpdateRule) -> np.ndarray:
    K, q, b = state.K, state.q, state.b
    diag = np.diag(state.B)
    if rule is UpdateRule.KL:
        b1 = b + 1.0 / K
        spread = np.sqrt((q + 1) / (q * (b - K + 1)))
        return spread / ((q * b1 / (b1 - K + 1) + 1) * np.sqrt(diag))
    if rule in (UpdateRule.MOMENT, UpdateRule.MOMENT_KL):
        return 1.0 / np.sqrt(q * (q + 1) * (b - K + 1) * diag)
    raise UnsupportedRule(f"no single-alternative KG coefficients for {rule.label}")


def kg_coefficients(state: BeliefState, k: int, rule: UpdateRule) -> KgCoefficients:
    factors = _slope_factors(state, rule)
    return KgCoefficients(s=state.B[:, k] * factors[k], nu=state.b - state.K + 1)


def value_of_information(state: BeliefState, rule: UpdateRule) -> np.ndarray:
    """Vector of ``V_n(k)`` over all alternatives."""
    S = np.ascontiguousarray(_slope_factors(state, rule)[:, None] * state.B)
    return _voi_kernel(np.ascontiguousarray(state.theta), S, state.b - state.K + 1)


def select_alternative(state: BeliefState, rule: UpdateRule) -> int:
    """Index maximizing the value of information; ties go to the smallest index."""
    return int(np.argmax(value_of_information(state, rule)))
