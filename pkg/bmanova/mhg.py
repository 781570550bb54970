"""Truncated hypergeometric functions of one or two diagonal matrix arguments.

    pFq(a; b; X, Y) = sum_k sum_{kappa |- k}  prod (a_i)_kappa / prod (b_j)_kappa
                      * C_kappa(X) C_kappa(Y) / (k! C_kappa(I))

The one-argument form drops the C_kappa(Y)/C_kappa(I) ratio. Coefficients are
built along the partition lattice, each partition from its parent with the last
box removed, and summed weight by weight in decreasing lexicographic order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from bmanova.combinatorics import BetaLike, BetaParam, Partition, last_box
from bmanova.errors import DomainError, NumericalError, ParameterError
from bmanova.jack import as_spectrum, jack_C_identity, jack_table_batch

logger = logging.getLogger(__name__)

DEFAULT_MAX_WEIGHT = 30
DEFAULT_REL_TOL = 1e-12
# Consecutive small weight slices required before a series counts as converged.
QUIET_SLICES = 3
# Parameters within this distance of a nonpositive integer are treated as one.
INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class SeriesControl:
    max_weight: int = DEFAULT_MAX_WEIGHT
    rel_tol: float = DEFAULT_REL_TOL
    max_part: Optional[int] = None

    def __post_init__(self):
        if self.max_weight < 0:
            raise ParameterError(f"max_weight must be nonnegative, got {self.max_weight}")
        if not self.rel_tol > 0:
            raise ParameterError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_part is not None and self.max_part < 0:
            raise ParameterError(f"max_part must be nonnegative, got {self.max_part}")


@dataclass(frozen=True)
class SeriesResult:
    """A truncated sum with its diagnostics.

    ``tail_estimate`` is the last summed weight slice relative to the total and
    ``abs_sum`` the sum of term magnitudes, which bounds the rounding error of
    an alternating sum.
    """

    value: float
    weight_reached: int
    converged: bool
    tail_estimate: float
    abs_sum: float


def truncation_order(a: float) -> Optional[int]:
    """t when a = -t for a nonnegative integer t, else None."""
    r = round(a)
    if r <= 0 and abs(a - r) <= INTEGER_TOL:
        return int(-r)
    return None


def series_coefficients(a: Sequence[float], b: Sequence[float], beta: BetaLike,
                        partitions: Sequence[Partition]) -> np.ndarray:
    """prod (a_i)_kappa / prod (b_j)_kappa / k! for partitions listed parents first."""
    beta = BetaParam.coerce(beta)
    half = beta.beta / 2.0
    coef = {Partition(): 1.0}
    out = np.empty(len(partitions))
    for idx, kappa in enumerate(partitions):
        if kappa not in coef:
            parent, row, col = last_box(kappa)
            shift = col - row * half
            num = coef[parent]
            for ai in a:
                num *= ai + shift
            den = float(kappa.weight)
            for bj in b:
                den *= bj + shift
            if den == 0.0:
                if num != 0.0:
                    raise ParameterError(
                        f"lower parameters {tuple(b)} give a vanishing Pochhammer symbol at {tuple(kappa)}")
                coef[kappa] = 0.0
            else:
                coef[kappa] = num / den
        out[idx] = coef[kappa]
    return out


def _kahan_slices(terms: np.ndarray, weights: np.ndarray, ctl: SeriesControl,
                  exact: bool) -> SeriesResult:
    total, comp, abs_sum = 0.0, 0.0, 0.0
    quiet, tail, reached = 0, math.inf, 0
    top = int(weights[-1]) if weights.size else 0
    for k in range(top + 1):
        sl = terms[weights == k]
        slice_sum = 0.0
        for term in sl:
            y = term - comp
            t = total + y
            comp = (t - total) - y
            total = t
            slice_sum += term
            abs_sum += abs(term)
        reached = k
        if not math.isfinite(total):
            raise NumericalError(f"series accumulation overflowed at weight {k}")
        tail = abs(slice_sum) / abs(total) if total != 0.0 else (0.0 if slice_sum == 0.0 else math.inf)
        if k == 0:
            continue
        quiet = quiet + 1 if tail < ctl.rel_tol else 0
        if quiet >= QUIET_SLICES and not exact:
            return SeriesResult(total, reached, True, tail, abs_sum)
    if exact:
        return SeriesResult(total, reached, True, 0.0, abs_sum)
    converged = quiet >= QUIET_SLICES
    if not converged:
        logger.debug("series not converged by weight %d (tail %.3g)", reached, tail)
    return SeriesResult(total, reached, converged, tail, abs_sum)


def hyper_pq(a: Sequence[float], b: Sequence[float], beta: BetaLike, X: Sequence[float],
             Y: Optional[Sequence[float]] = None, ctl: SeriesControl = SeriesControl()) -> SeriesResult:
    """Truncated pFq^(beta)(a; b; X) or pFq^(beta)(a; b; X, Y).

    A numerator parameter equal to -t caps every part at t, so the series is a
    polynomial of degree n*t; when that degree fits under ``ctl.max_weight`` the
    sum is exact and reported as converged.
    """
    beta = BetaParam.coerce(beta)
    a, b = [float(v) for v in a], [float(v) for v in b]
    x = as_spectrum(X)
    n = x.size
    y = None
    if Y is not None:
        y = as_spectrum(Y)
        if y.size != n:
            raise ParameterError(f"X and Y must have the same length, got {n} and {y.size}")
        if np.all(y == 1.0):
            y = None

    max_part = ctl.max_part
    caps = [t for t in map(truncation_order, a) if t is not None]
    exact = False
    max_weight = ctl.max_weight
    if caps:
        cap = min(caps)
        user_cut = max_part is not None and max_part < cap
        max_part = cap if max_part is None else min(max_part, cap)
        if n * cap <= ctl.max_weight and not user_cut:
            exact = True
            max_weight = n * cap

    points = x[None, :] if y is None else np.vstack([x, y])
    batch = jack_table_batch(beta, points, max_weight, max_part)
    coef = series_coefficients(a, b, beta, batch.partitions)
    terms = coef * batch.values[:, 0]
    if y is not None:
        norm = np.array([jack_C_identity(kappa, beta, n) for kappa in batch.partitions])
        terms = terms * batch.values[:, 1] / norm
    weights = np.array([kappa.weight for kappa in batch.partitions])
    return _kahan_slices(terms, weights, ctl, exact)


def f10_closed(a: float, X: Sequence[float]) -> float:
    """1F0(a;;X) = det(I - X)^(-a) for X < I."""
    x = as_spectrum(X)
    if np.any(x >= 1.0):
        raise DomainError(f"1F0 closed form needs every x_i < 1, got {x}")
    return float(np.exp(-a * np.sum(np.log1p(-x))))


def f21_transform_check(a: float, b: float, c: float, beta: BetaLike, X: Sequence[float],
                        ctl: SeriesControl = SeriesControl(), form: int = 1) -> Tuple[float, float]:
    """Both sides of an Euler transformation of 2F1, each summed independently.

    form=1: 2F1(a,b;c;X) = 2F1(c-a,b;c;-X(I-X)^-1) |I-X|^-b
    form=2: 2F1(a,b;c;X) = 2F1(c-a,c-b;c;X) |I-X|^(c-a-b)
    """
    x = as_spectrum(X)
    if np.any(x >= 1.0):
        raise DomainError(f"Euler transformation needs X < I, got {x}")
    lhs = hyper_pq([a, b], [c], beta, x, ctl=ctl).value
    log_det = float(np.sum(np.log1p(-x)))
    if form == 1:
        rhs = hyper_pq([c - a, b], [c], beta, -x / (1.0 - x), ctl=ctl).value * math.exp(-b * log_det)
    elif form == 2:
        rhs = hyper_pq([c - a, c - b], [c], beta, x, ctl=ctl).value * math.exp((c - a - b) * log_det)
    else:
        raise ParameterError(f"form must be 1 or 2, got {form}")
    return lhs, rhs


def with_weight(ctl: SeriesControl, max_weight: int) -> SeriesControl:
    """A copy of ``ctl`` whose weight cap is at least ``max_weight``."""
    return replace(ctl, max_weight=max(ctl.max_weight, max_weight))
