"""Analytic laws of the beta-MANOVA generalized singular values.

All densities are for ordered values c_1 > ... > c_n (no 1/n! factor) and are
returned as logs. The largest-value CDF has two forms: a finite sum with
positive terms, available when t = (m-n+1)beta/2 - 1 is a nonnegative integer,
and a Gauss 2F1 form that truncates for the same t and is then summed at
I - Y, where its terms are positive.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from bmanova.combinatorics import BetaLike, BetaParam, log_gauss_2f1_identity, log_gen_gamma, log_K
from bmanova.errors import DomainError, NumericalError, ParameterError
from bmanova.jack import as_spectrum, jack_table_batch
from bmanova.mhg import (INTEGER_TOL, SeriesControl, SeriesResult, hyper_pq,
                         series_coefficients, truncation_order, with_weight)
from bmanova.sampler import ManovaParams

logger = logging.getLogger(__name__)

# CDF values may leave [0, 1] by this much before the result is rejected.
CLAMP_TOL = 1e-10
# The 2F1 form is rejected when rounding in its terms could exceed this absolute error.
CANCELLATION_TOL = 1e-10
EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class GsvPoint:
    """Generalized singular values 1 > c_1 > ... > c_n > 0."""

    c: np.ndarray

    def __post_init__(self):
        c = as_spectrum(self.c)
        if np.any(c <= 0) or np.any(c >= 1):
            raise DomainError(f"generalized singular values must lie in (0, 1), got {c}")
        if np.any(np.diff(c) >= 0):
            raise DomainError(f"generalized singular values must be strictly decreasing, got {c}")
        object.__setattr__(self, "c", c)


def _log_vandermonde(values: np.ndarray, power: float) -> float:
    i, j = np.triu_indices(values.size, k=1)
    return power * float(np.sum(np.log(np.abs(values[i] - values[j]))))


def _log_k_ratio(m: int, n: int, p: int, beta: BetaParam) -> float:
    return log_K(m + p, n, beta) - log_K(m, n, beta) - log_K(p, n, beta)


def joint_gsv_logdensity(params: ManovaParams, point: Union[GsvPoint, Sequence[float]],
                         ctl: SeriesControl = SeriesControl()) -> SeriesResult:
    """Log of the joint density of the generalized singular values at ``point``.

    The 1F0 factor is summed as a two-argument series; its diagnostics are
    carried on the result, with ``abs_sum`` and ``tail_estimate`` referring to
    that series. A series that does not converge gives ``converged=False``.
    """
    if not isinstance(point, GsvPoint):
        point = GsvPoint(np.asarray(point, dtype=float))
    c = point.c
    m, n, p, beta = params.m, params.n, params.p, params.beta
    if c.size != n:
        raise ParameterError(f"point must have n={n} values, got {c.size}")
    b = beta.beta
    omega = params.omega_array
    c2 = c * c

    log_pref = (n * math.log(2.0) + _log_k_ratio(m, n, p, beta)
                + p * b * float(np.sum(np.log(omega)))
                + ((p - n + 1) * b - 1.0) * float(np.sum(np.log(c)))
                - ((p + n - 1) * b / 2.0 + 1.0) * float(np.sum(np.log1p(-c2)))
                + _log_vandermonde(c2, b))

    a = (m + p) * b / 2.0
    x = c2 / (c2 - 1.0)
    if n == 1:
        # Scalar 1F0(a;;x,y) = (1 - x y)^(-a).
        series_value = (1.0 - x[0] * omega[0] ** 2) ** (-a)
        series = SeriesResult(series_value, 0, True, 0.0, series_value)
    else:
        series = hyper_pq([a], [], beta, x, omega ** 2, ctl)

    if series.value > 0 and math.isfinite(series.value):
        value = log_pref + math.log(series.value)
    elif series.converged:
        raise NumericalError(f"1F0 factor evaluated to {series.value} at c={c}")
    else:
        logger.warning("1F0 factor did not converge at c=%s (tail %.3g)", c, series.tail_estimate)
        value = math.nan
    return SeriesResult(value, series.weight_reached, series.converged,
                        series.tail_estimate, series.abs_sum)


def jacobi_logdensity(m: int, n: int, p: int, beta: BetaLike, u: Sequence[float]) -> float:
    """Log of the ordered beta-Jacobi density of u_1 > ... > u_n in (0, 1)."""
    beta = BetaParam.coerce(beta)
    if m < n or p < n:
        raise ParameterError(f"beta-Jacobi needs m, p >= n, got m={m}, p={p}, n={n}")
    u = as_spectrum(u)
    if u.size != n:
        raise ParameterError(f"u must have n={n} values, got {u.size}")
    if np.any(u <= 0) or np.any(u >= 1) or np.any(np.diff(u) >= 0):
        raise DomainError(f"u must be strictly decreasing inside (0, 1), got {u}")
    b = beta.beta
    return (_log_k_ratio(m, n, p, beta)
            + ((p - n + 1) * b / 2.0 - 1.0) * float(np.sum(np.log(u)))
            + ((m - n + 1) * b / 2.0 - 1.0) * float(np.sum(np.log1p(-u)))
            + _log_vandermonde(u, b))


def cdf_truncation_order(params: ManovaParams) -> int:
    """t = (m-n+1)beta/2 - 1, which must be a nonnegative integer for the finite CDF."""
    t = params.truncation
    r = round(t)
    if abs(t - r) > INTEGER_TOL or r < 0:
        raise ParameterError(
            f"the finite CDF needs t = (m-n+1)*beta/2 - 1 to be a nonnegative integer; "
            f"m={params.m}, n={params.n}, beta={params.beta.beta} give t={t:g}")
    return int(r)


def _cdf_arguments(params: ManovaParams, x: np.ndarray):
    if np.any(x <= 0) or np.any(x >= 1):
        raise DomainError("CDF points must lie in the open interval (0, 1)")
    b = params.beta.beta
    w2 = params.omega_array ** 2
    x2 = (x * x)[:, None]
    d = 1.0 - x2 + x2 * w2
    log_det = params.p * b / 2.0 * np.sum(np.log(x2 * w2 / d), axis=1)
    return log_det, (1.0 - x2) / d, x2 * w2 / d


def _clamp(values: np.ndarray) -> np.ndarray:
    worst = max(float(np.max(-values)), float(np.max(values - 1.0)), 0.0)
    if worst > CLAMP_TOL:
        raise NumericalError(f"CDF left [0, 1] by {worst:.3g}")
    return np.clip(values, 0.0, 1.0)


def cdf_largest_gsv(params: ManovaParams, x):
    """P(c_1 < x) as an exact finite sum over partitions with parts at most t.

    Accepts a scalar or an array of points; the Jack values for every point are
    evaluated in one batch.
    """
    t = cdf_truncation_order(params)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs).reshape(-1)
    log_det, z, _ = _cdf_arguments(params, xs)
    batch = jack_table_batch(params.beta, z, params.n * t, max_part=t)
    coef = series_coefficients([params.p * params.beta.beta / 2.0], [], params.beta, batch.partitions)
    values = _clamp(np.exp(log_det) * (coef @ batch.values))
    return float(values[0]) if scalar else values


def log_cdf_gamma_ratio(params: ManovaParams) -> float:
    m, n, p, beta = params.m, params.n, params.p, params.beta
    b = beta.beta
    return (log_gen_gamma((m + p) * b / 2.0, n, beta) + log_gen_gamma((n - 1) * b / 2.0 + 1.0, n, beta)
            - log_gen_gamma(m * b / 2.0, n, beta) - log_gen_gamma((n + p - 1) * b / 2.0 + 1.0, n, beta))


def cdf_largest_gsv_2f1(params: ManovaParams, x: float,
                        ctl: SeriesControl = SeriesControl()) -> SeriesResult:
    """P(c_1 < x) through the Gauss 2F1 form.

    When the upper parameter (n-m-1)beta/2 + 1 equals -t the polynomial in Y is
    rewritten as 2F1(a, b; c; I) * 2F1(a, b; a+b+1+(n-1)beta/2-c; I - Y), with
    the first factor from the Gauss summation; the second series has positive
    terms, so the value does not cancel near x = 1. Otherwise the series in Y
    is summed under ``ctl`` and rejected when eps times the sum of its term
    magnitudes exceeds CANCELLATION_TOL.
    """
    m, n, p = params.m, params.n, params.p
    b = params.beta.beta
    log_det, z, y = _cdf_arguments(params, np.atleast_1d(np.asarray(x, dtype=float)))
    upper, lower = (n - m - 1) * b / 2.0 + 1.0, (p + n - 1) * b / 2.0 + 1.0
    half_p = p * b / 2.0
    log_scale = float(log_det[0]) + log_cdf_gamma_ratio(params)
    t = truncation_order(upper)
    if t is not None:
        reflected = upper + half_p + 1.0 + (n - 1) * b / 2.0 - lower
        series = hyper_pq([upper, half_p], [reflected], params.beta, z[0], ctl=with_weight(ctl, n * t))
        log_scale += log_gauss_2f1_identity(upper, half_p, lower, n, params.beta)
    else:
        series = hyper_pq([upper, half_p], [lower], params.beta, y[0], ctl=ctl)
    scale = math.exp(log_scale)
    result = SeriesResult(scale * series.value, series.weight_reached, series.converged,
                          series.tail_estimate, scale * series.abs_sum)
    if EPS * result.abs_sum > CANCELLATION_TOL:
        raise NumericalError(
            f"2F1 form at x={float(np.ravel(x)[0])} cancels: term magnitudes sum to {result.abs_sum:.3g}")
    return result


def wishart_sv_logdensity(m: int, n: int, beta: BetaLike, D: Sequence[float], sigma: Sequence[float],
                          ctl: SeriesControl = SeriesControl()) -> SeriesResult:
    """Log of the ordered joint density of the beta-Wishart singular values.

    The 0F0(-Sigma^2/2, D^-1) factor has the closed form exp(-tr(Sigma^2)/(2d))
    when D = d I and is summed as a series otherwise.
    """
    beta = BetaParam.coerce(beta)
    b = beta.beta
    d = as_spectrum(D)
    s = as_spectrum(sigma)
    if d.size != n or s.size != n:
        raise ParameterError(f"D and sigma must have n={n} entries")
    if np.any(d <= 0):
        raise DomainError(f"covariance diagonal must be positive, got {d}")
    if np.any(s <= 0) or np.any(np.diff(s) >= 0):
        raise DomainError(f"singular values must be positive and strictly decreasing, got {s}")
    s2 = s * s
    log_pref = (n * math.log(2.0) - m * b / 2.0 * float(np.sum(np.log(d))) - log_K(m, n, beta)
                + ((m - n + 1) * b - 1.0) * float(np.sum(np.log(s)))
                + _log_vandermonde(s2, b))
    if np.all(d == d[0]):
        log_f = -float(np.sum(s2)) / (2.0 * d[0])
        return SeriesResult(log_pref + log_f, 0, True, 0.0, math.exp(log_f))
    series = hyper_pq([], [], beta, -s2 / 2.0, 1.0 / d, ctl)
    if series.value > 0 and math.isfinite(series.value):
        value = log_pref + math.log(series.value)
    else:
        logger.warning("0F0 factor evaluated to %g at sigma=%s", series.value, s)
        value = math.nan
    return SeriesResult(value, series.weight_reached, series.converged,
                        series.tail_estimate, series.abs_sum)
