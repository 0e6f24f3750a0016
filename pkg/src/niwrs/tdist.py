"""Student-t density and distribution function.

The distribution function goes through the regularized incomplete beta
function, evaluated by its continued fraction (modified Lentz).  Everything
is compiled with numba so the knowledge-gradient kernel can call it.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import InvalidDof

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


@njit(cache=True)
def _betacf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


@njit(cache=True)
def _betainc(a, b, x, xc):
    # xc = 1 - x, supplied separately so that x near 1 keeps its precision
    if x <= 0.0:
        return 0.0
    if xc <= 0.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log(xc))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, xc) / b


@njit(cache=True)
def betainc_reg(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``."""
    return _betainc(a, b, x, 1.0 - x)


@njit(cache=True)
def _t_sf_upper(z, nu):
    # P(T > z) for z >= 0
    z2 = z * z
    return 0.5 * _betainc(0.5 * nu, 0.5, nu / (nu + z2), z2 / (nu + z2))


@njit(cache=True)
def t_cdf_scalar(z, nu):
    if z >= 0.0:
        return 1.0 - _t_sf_upper(z, nu)
    return _t_sf_upper(-z, nu)


@njit(cache=True)
def t_sf_scalar(z, nu):
    if z >= 0.0:
        return _t_sf_upper(z, nu)
    return 1.0 - _t_sf_upper(-z, nu)


@njit(cache=True)
def t_pdf_scalar(z, nu):
    log_norm = math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu) - 0.5 * math.log(nu * math.pi)
    return math.exp(log_norm - 0.5 * (nu + 1.0) * math.log1p(z * z / nu))


@njit(cache=True)
def positive_part_scalar(c, nu):
    """``E[(T - c)^+]`` for ``T ~ t(nu)``, ``nu > 1``."""
    val = (nu + c * c) / (nu - 1.0) * t_pdf_scalar(c, nu) - c * t_sf_scalar(c, nu)
    lower = -c if c < 0.0 else 0.0
    return val if val > lower else lower


def _check_dof(nu: float, minimum: float = 0.0) -> float:
    nu = float(nu)
    if not nu > minimum or not math.isfinite(nu):
        raise InvalidDof(f"degrees of freedom must exceed {minimum:g}, got {nu}")
    return nu


def t_cdf(z, nu):
    """Standard Student-t distribution function; vectorized over ``z``."""
    nu = _check_dof(nu)
    z = np.asarray(z, dtype=float)
    out = np.vectorize(lambda v: t_cdf_scalar(v, nu), otypes=[float])(z)
    return float(out) if out.ndim == 0 else out


def t_pdf(z, nu):
    nu = _check_dof(nu)
    z = np.asarray(z, dtype=float)
    out = np.vectorize(lambda v: t_pdf_scalar(v, nu), otypes=[float])(z)
    return float(out) if out.ndim == 0 else out


def expected_positive_part(c: float, nu: float) -> float:
    """``E[(T - c)^+]`` with ``T ~ t(nu)``; requires ``nu > 1``."""
    nu = _check_dof(nu, 1.0)
    return float(positive_part_scalar(float(c), nu))
