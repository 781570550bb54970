"""Jack polynomials C_kappa^(beta) of diagonal matrix arguments.

Values come from the branching rule over variables,

    C_kappa(x_1..x_i) = sum_mu C_mu(x_1..x_{i-1}) x_i^{|kappa|-|mu|} g_{kappa mu},

summed over the mu for which kappa/mu is a horizontal strip. The coefficient
g_{kappa mu} is the J-normalized branching coefficient times s_kappa / s_mu,
where s_kappa = alpha^k k! / j_kappa converts J to C; it is formed in log
space, so intermediate values stay of the size of (sum x)^k at any weight.

The coefficients do not depend on x, so for a fixed (alpha, n, weight cap,
part cap) they are assembled once into sparse operators, one per power of
x_i, and reused for any batch of spectra.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from bmanova.combinatorics import (BetaLike, BetaParam, Partition, lower_hook,
                                   partitions_up_to, upper_hook)
from bmanova.errors import ParameterError

logger = logging.getLogger(__name__)

# Batches of spectra are evaluated in chunks of this many points.
CHUNK_POINTS = 4096


def as_spectrum(values: Sequence[float]) -> np.ndarray:
    """Validate a diagonal spectrum: a nonempty 1-D array of finite reals."""
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.size == 0:
        raise ParameterError("a spectrum needs at least one value")
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"spectrum entries must be finite: {x}")
    return x


def strip_predecessors(kappa: Partition, n_vars: int) -> Iterator[Partition]:
    """Partitions mu with at most n_vars - 1 parts such that kappa/mu is a horizontal strip."""
    if len(kappa) > n_vars:
        return
    ranges = [range(kappa.part(j + 1), kappa.part(j) + 1) for j in range(n_vars - 1)]
    for parts in itertools.product(*ranges):
        yield Partition(parts)


@lru_cache(maxsize=65536)
def _hooks(kappa: Partition, alpha: float) -> Tuple[Tuple[int, float, float], ...]:
    """(col, log upper hook, log lower hook) for every box of kappa."""
    return tuple((col, math.log(upper_hook(kappa, row, col, alpha)),
                  math.log(lower_hook(kappa, row, col, alpha)))
                 for row, length in enumerate(kappa) for col in range(length))


@lru_cache(maxsize=65536)
def log_c_scale(kappa: Partition, alpha: float) -> float:
    """ln(alpha^k k! / j_kappa), the J to C conversion; j_kappa is the product of all hooks."""
    k = kappa.weight
    return k * math.log(alpha) + math.lgamma(k + 1) - sum(up + lo for _, up, lo in _hooks(kappa, alpha))


def branch_coefficient(kappa: Partition, mu: Partition, alpha: float) -> float:
    """The coefficient g_{kappa mu} of the C-normalized branching rule.

    Boxes in a column where kappa and mu have the same height take the upper
    hook, all others the lower hook.
    """
    kc, mc = kappa.conjugate, mu.conjugate
    log_b = 0.0
    for col, up, lo in _hooks(kappa, alpha):
        log_b += up if kc[col] == mc.part(col) else lo
    for col, up, lo in _hooks(mu, alpha):
        log_b -= up if kc[col] == mc.part(col) else lo
    return math.exp(log_b + log_c_scale(kappa, alpha) - log_c_scale(mu, alpha))


@dataclass(frozen=True)
class _JackLevel:
    kappas: Tuple[Partition, ...]
    blocks: Tuple[Tuple[int, sparse.csr_matrix], ...]


@dataclass(frozen=True)
class _JackPlan:
    partitions: Tuple[Partition, ...]
    levels: Tuple[_JackLevel, ...]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """C values, shape (len(partitions), N), for spectra given as rows of ``points``."""
        out = np.empty((len(self.partitions), points.shape[0]))
        for start in range(0, points.shape[0], CHUNK_POINTS):
            chunk = points[start:start + CHUNK_POINTS]
            values = np.ones((1, chunk.shape[0]))
            for i, level in enumerate(self.levels):
                x = chunk[:, i]
                nxt = np.zeros((len(level.kappas), chunk.shape[0]))
                for power, op in level.blocks:
                    nxt += (op @ values) * (x ** power)[None, :]
                values = nxt
            out[:, start:start + CHUNK_POINTS] = values
        return out


def _padded(partitions: Sequence[Partition], width: int) -> np.ndarray:
    out = np.zeros((len(partitions), width), dtype=np.int64)
    for r, kappa in enumerate(partitions):
        out[r, :len(kappa)] = kappa
    return out


@dataclass(frozen=True)
class _HookSums:
    """Per-partition hook data in the form the branching rule gathers from.

    ``prefix[:, j]`` sums ln(upper hook) - ln(lower hook) over the boxes of
    columns 0..j-1, so the columns a strip passes through can be subtracted
    from ``log_upper`` with two lookups per row.
    """

    parts: np.ndarray
    weight: np.ndarray
    log_scale: np.ndarray
    log_upper: np.ndarray
    prefix: np.ndarray


def _hook_sums(partitions: Sequence[Partition], rows: int, width: int, alpha: float) -> _HookSums:
    parts = _padded(partitions, rows)
    cols = np.arange(width)[None, None, :]
    inside = parts[:, :, None] > cols
    conj = inside.sum(axis=1)
    arm = parts[:, :, None] - cols
    leg = conj[:, None, :] - np.arange(rows)[None, :, None]
    col_upper = np.log(np.where(inside, leg - 1 + alpha * arm, 1.0)).sum(axis=1)
    col_lower = np.log(np.where(inside, leg + alpha * (arm - 1), 1.0)).sum(axis=1)
    weight = parts.sum(axis=1)
    log_scale = (weight * math.log(alpha) + gammaln(weight + 1.0)
                 - col_upper.sum(axis=1) - col_lower.sum(axis=1))
    prefix = np.zeros((len(partitions), width + 1))
    prefix[:, 1:] = np.cumsum(col_upper - col_lower, axis=1)
    return _HookSums(parts, weight, log_scale, col_upper.sum(axis=1), prefix)


def _strip_pairs(parts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(row of kappa, parts of mu) for every horizontal strip kappa/mu, mu one row shorter."""
    rows = np.arange(parts.shape[0])
    mus = np.zeros((rows.size, 0), dtype=np.int64)
    for j in range(parts.shape[1] - 1):
        low, high = parts[rows, j + 1], parts[rows, j]
        counts = high - low + 1
        offsets = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
        mus = np.column_stack([np.repeat(mus, counts, axis=0), np.repeat(low, counts) + offsets])
        rows = np.repeat(rows, counts)
    return rows, mus


def _lookup(table: np.ndarray, wanted: np.ndarray, base: int) -> np.ndarray:
    """Row index in ``table`` of each row of ``wanted``; every wanted row must be present."""
    radix = base ** np.arange(table.shape[1] - 1, -1, -1, dtype=np.int64)
    keys, wanted_keys = table @ radix, wanted @ radix
    order = np.argsort(keys, kind="stable")
    return order[np.searchsorted(keys[order], wanted_keys)]


@lru_cache(maxsize=32)
def _plan(alpha: float, n: int, max_weight: int, max_part: Optional[int]) -> _JackPlan:
    width = max_weight if max_part is None else min(max_part, max_weight)
    prev: Tuple[Partition, ...] = (Partition(),)
    prev_sums = _hook_sums(prev, 0, width, alpha)
    levels = []
    for n_vars in range(1, n + 1):
        kappas = partitions_up_to(max_weight, n_vars, max_part)
        sums = _hook_sums(kappas, n_vars, width, alpha)
        rows, mus = _strip_pairs(sums.parts)
        cols = _lookup(prev_sums.parts, mus, max_weight + 1)
        # the strip occupies columns [mu_i, kappa_i) of row i, with mu_{n_vars-1} = 0
        lo = np.column_stack([mus, np.zeros(rows.size, dtype=np.int64)])
        hi = sums.parts[rows]
        r, c = rows[:, None], cols[:, None]
        strip = (sums.prefix[r, hi] - sums.prefix[r, lo]).sum(axis=1)
        strip_mu = (prev_sums.prefix[c, hi] - prev_sums.prefix[c, lo]).sum(axis=1)
        log_g = ((sums.log_upper[rows] - strip + sums.log_scale[rows])
                 - (prev_sums.log_upper[cols] - strip_mu + prev_sums.log_scale[cols]))
        vals = np.exp(log_g)
        powers = sums.weight[rows] - prev_sums.weight[cols]
        blocks = []
        for power in np.unique(powers):
            sel = powers == power
            op = sparse.csr_matrix((vals[sel], (rows[sel], cols[sel])),
                                   shape=(len(kappas), len(prev)))
            blocks.append((int(power), op))
        levels.append(_JackLevel(kappas, tuple(blocks)))
        prev, prev_sums = kappas, sums
    logger.debug("Jack plan alpha=%g n=%d weight<=%d part<=%s: %d partitions",
                 alpha, n, max_weight, max_part, len(prev))
    return _JackPlan(partitions=prev, levels=tuple(levels))


def jack_plan(beta: BetaLike, n: int, max_weight: int, max_part: Optional[int] = None) -> _JackPlan:
    if max_weight < 0:
        raise ParameterError(f"max_weight must be nonnegative, got {max_weight}")
    if max_part is not None and max_part >= max_weight:
        max_part = None
    return _plan(BetaParam.coerce(beta).alpha, int(n), int(max_weight), max_part)


@dataclass(frozen=True)
class JackBatch:
    """C_kappa values for many spectra: ``values[i, j]`` is C_{partitions[i]}(points[j])."""

    partitions: Tuple[Partition, ...]
    values: np.ndarray


def jack_table_batch(beta: BetaLike, points, max_weight: int,
                     max_part: Optional[int] = None) -> JackBatch:
    """Evaluate every C_kappa with |kappa| <= max_weight, l(kappa) <= n, kappa_1 <= max_part."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(pts)):
        raise ParameterError("spectra must be finite")
    plan = jack_plan(beta, pts.shape[1], max_weight, max_part)
    return JackBatch(plan.partitions, plan.evaluate(pts))


@dataclass(frozen=True)
class JackTable:
    """Memo of C_kappa^(beta)(x) for one spectrum x, keyed by partition."""

    beta: BetaParam
    max_weight: int
    n: int
    values: Mapping[Partition, float]

    def __getitem__(self, kappa: Sequence[int]) -> float:
        kappa = Partition(kappa)
        if len(kappa) > self.n:
            return 0.0
        return self.values[kappa]

    def weight_slice(self, k: int) -> Dict[Partition, float]:
        return {kappa: v for kappa, v in self.values.items() if kappa.weight == k}


def build_jack_table(beta: BetaLike, x: Sequence[float], max_weight: int,
                     max_part: Optional[int] = None) -> JackTable:
    beta = BetaParam.coerce(beta)
    x = as_spectrum(x)
    batch = jack_table_batch(beta, x[None, :], max_weight, max_part)
    values = {kappa: float(v) for kappa, v in zip(batch.partitions, batch.values[:, 0])}
    return JackTable(beta=beta, max_weight=max_weight, n=x.size, values=values)


def _c_recursive(kappa: Partition, x: Tuple[float, ...], alpha: float, memo: dict) -> float:
    if len(kappa) > len(x):
        return 0.0
    if not kappa:
        return 1.0
    key = (kappa, len(x))
    if key not in memo:
        last = x[-1]
        memo[key] = sum(
            _c_recursive(mu, x[:-1], alpha, memo) * last ** (kappa.weight - mu.weight)
            * branch_coefficient(kappa, mu, alpha)
            for mu in strip_predecessors(kappa, len(x)))
    return memo[key]


def jack_C(kappa: Sequence[int], beta: BetaLike, x: Sequence[float]) -> float:
    """C_kappa^(beta)(x_1, ..., x_n), the Jack polynomial in C normalization."""
    kappa = Partition(kappa)
    alpha = BetaParam.coerce(beta).alpha
    x = as_spectrum(x)
    if len(kappa) > x.size:
        return 0.0
    return _c_recursive(kappa, tuple(float(v) for v in x), alpha, {})


def jack_C_identity(kappa: Sequence[int], beta: BetaLike, n: int) -> float:
    """C_kappa^(beta)(I_n) = s_kappa * prod over boxes of (n - row + alpha col)."""
    kappa = Partition(kappa)
    alpha = BetaParam.coerce(beta).alpha
    if len(kappa) > n:
        return 0.0
    log_value = log_c_scale(kappa, alpha)
    for row, length in enumerate(kappa):
        for col in range(length):
            log_value += math.log(n - row + alpha * col)
    return math.exp(log_value)
