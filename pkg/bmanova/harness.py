"""Monte-Carlo verification of the samplers against the analytic laws.

Monte-Carlo draws are split into fixed-size batches; batch i always uses child
stream i of the run's RngStream, so results do not depend on how many worker
threads run the batches.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special, stats

from bmanova.combinatorics import BetaLike, BetaParam, Partition, log_gauss_2f1_identity
from bmanova.densities import cdf_largest_gsv, cdf_largest_gsv_2f1
from bmanova.errors import NumericalError, ParameterError
from bmanova.jack import jack_C_identity, jack_table_batch
from bmanova.mhg import SeriesControl, f10_closed, f21_transform_check, hyper_pq
from bmanova.sampler import ManovaParams, RngStream, sample_beta_manova_gsv

logger = logging.getLogger(__name__)

BATCH_SIZE = 2000
# The asymptotic Kolmogorov critical value is used from this sample count on.
ASYMPTOTIC_MIN_N = 1000
# Oracle draws whose Y^T Y condition number exceeds this are redrawn.
MAX_CONDITION = 1e12
MAX_REDRAW_FRACTION = 1e-3
THREADS_ENV = "BMANOVA_THREADS"
# n -> (spectral radius, weight cap) at which the 1F0 series reaches 1e-8 for a <= 7.5.
F10_CASES = {1: (0.7, 120), 2: (0.5, 70), 3: (0.3, 50), 4: (0.2, 40)}
# Distance from I for the 2F1 continuity check; the gap to the Gauss value is first order in it.
GAUSS_EPS = 1e-5


@dataclass(frozen=True)
class Ecdf:
    sorted_samples: np.ndarray
    count: int

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "Ecdf":
        data = np.sort(np.asarray(samples, dtype=float).reshape(-1))
        if data.size == 0:
            raise ParameterError("an empirical CDF needs at least one sample")
        return cls(data, int(data.size))


def ecdf_eval(e: Ecdf, x):
    """Fraction of samples <= x."""
    values = np.searchsorted(e.sorted_samples, x, side="right") / e.count
    return float(values) if np.ndim(values) == 0 else values


@dataclass
class KsReport:
    n_samples: int
    ks_stat: float
    critical_value: float
    alpha: float
    passed: bool
    config_digest: str
    runtime_ms: int = 0

    def as_dict(self, include_runtime: bool = False) -> Dict:
        out = asdict(self)
        if not include_runtime:
            out.pop("runtime_ms")
        return out


def ks_one_sample(e: Ecdf, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov-Smirnov distance between the ECDF and ``cdf``, checking both sides of every step."""
    return float(stats.kstest(e.sorted_samples, cdf, method="asymp").statistic)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    return float(stats.ks_2samp(a, b).statistic)


def ks_critical_value(alpha: float, n: int, n2: Optional[int] = None) -> float:
    """Critical KS distance at level ``alpha``.

    One-sample: the exact finite-n Kolmogorov law below ASYMPTOTIC_MIN_N,
    kstwobign.isf(alpha)/sqrt(n) from there on. Two-sample: the asymptotic
    value at the effective size n*n2/(n+n2).
    """
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if n2 is not None:
        return float(stats.kstwobign.isf(alpha) / math.sqrt(n * n2 / (n + n2)))
    if n >= ASYMPTOTIC_MIN_N:
        return float(stats.kstwobign.isf(alpha) / math.sqrt(n))
    return float(stats.kstwo.isf(alpha, n))


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning("ignoring %s=%r, not an integer", THREADS_ENV, env)
    return os.cpu_count() or 1


def monte_carlo(draw: Callable[[RngStream, int], np.ndarray], n_samples: int,
                rng: RngStream, batch_size: int = BATCH_SIZE) -> np.ndarray:
    """Run ``draw(stream, size)`` over fixed batches and stack the results in batch order."""
    if n_samples < 1:
        raise ParameterError(f"n_samples must be positive, got {n_samples}")
    sizes = [min(batch_size, n_samples - start) for start in range(0, n_samples, batch_size)]
    jobs = [(rng.substream(i), size) for i, size in enumerate(sizes)]
    workers = min(worker_count(), len(jobs))
    if workers == 1:
        parts = [draw(stream, size) for stream, size in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: draw(*job), jobs))
    return np.concatenate(parts, axis=0)


def sample_dense_real_manova_gsv(m: int, n: int, p: int, omega: Sequence[float],
                                 rng: RngStream, size: int) -> np.ndarray:
    """Cosine generalized singular values of (Y, X Omega) for real Gaussian X (m x n), Y (p x n).

    Solves Omega X^T X Omega v = mu Y^T Y v through the Cholesky factor of
    Y^T Y and returns c = (mu + 1)^(-1/2), descending, shape (size, n).
    """
    if m < n or p < n:
        raise ParameterError(f"the dense oracle needs m, p >= n, got m={m}, p={p}, n={n}")
    w = np.asarray(omega, dtype=float).reshape(-1)
    if w.size != n or np.any(w <= 0):
        raise ParameterError(f"omega must hold n={n} positive values")
    gen = rng.generator
    out = np.empty((size, n))
    todo = np.arange(size)
    redraws = 0
    while todo.size:
        k = todo.size
        X = gen.standard_normal((k, m, n))
        Y = gen.standard_normal((k, p, n))
        A = np.einsum("kij,kil->kjl", X, X) * w[None, :, None] * w[None, None, :]
        B = np.einsum("kij,kil->kjl", Y, Y)
        bad = np.linalg.cond(B) > MAX_CONDITION
        good = ~bad
        if np.any(good):
            L = np.linalg.cholesky(B[good])
            half = np.linalg.solve(L, A[good])
            M = np.linalg.solve(L, np.swapaxes(half, 1, 2))
            mu = np.clip(np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, 1, 2))), 0.0, None)
            out[todo[good]] = np.sort(1.0 / np.sqrt(mu + 1.0), axis=1)[:, ::-1]
        todo = todo[bad]
        redraws += int(bad.sum())
    if redraws:
        logger.info("dense oracle redrew %d of %d ill-conditioned draws", redraws, size)
    if redraws > MAX_REDRAW_FRACTION * size:
        raise NumericalError(f"dense oracle needed {redraws} redraws for {size} draws")
    return out


def dense_real_manova_gsv(m: int, n: int, p: int, omega: Sequence[float], rng: RngStream) -> np.ndarray:
    return sample_dense_real_manova_gsv(m, n, p, omega, rng, 1)[0]


def config_digest(payload: Dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def analytic_cdf(params: ManovaParams) -> Callable[[np.ndarray], np.ndarray]:
    """cdf_largest_gsv extended by 0 below (0, 1) and 1 above it."""
    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 1.0, 1.0, 0.0)
        inside = (x > 0) & (x < 1)
        if np.any(inside):
            out[inside] = cdf_largest_gsv(params, x[inside])
        return out
    return cdf


def verify_figure(params: ManovaParams, n_samples: int, grid: Sequence[float], alpha: float,
                  rng: RngStream, analytic: Optional[ManovaParams] = None,
                  digest: Optional[str] = None) -> Tuple[KsReport, pd.DataFrame]:
    """Compare the empirical CDF of the largest value against the analytic CDF.

    ``analytic`` replaces the parameters of the analytic curve only, which is
    how a deliberately wrong model is checked for rejection.
    """
    if n_samples < 100:
        raise ParameterError(f"verify needs at least 100 samples, got {n_samples}")
    analytic = analytic or params
    start = time.perf_counter()
    largest = monte_carlo(lambda s, size: sample_beta_manova_gsv(params, s, size)[:, 0],
                          n_samples, rng)
    e = Ecdf.from_samples(largest)
    cdf = analytic_cdf(analytic)
    stat = ks_one_sample(e, cdf)
    crit = ks_critical_value(alpha, e.count)
    grid = np.asarray(grid, dtype=float)
    curve = pd.DataFrame({"x": grid, "empirical": ecdf_eval(e, grid), "analytic": cdf(grid)})
    if digest is None:
        digest = config_digest({
            "m": params.m, "n": params.n, "p": params.p, "beta": params.beta.beta,
            "omega": list(params.omega), "n_samples": n_samples, "seed": rng.seed,
            "grid": grid.tolist(), "alpha": alpha})
    runtime_ms = int(round(1000 * (time.perf_counter() - start)))
    report = KsReport(e.count, stat, crit, alpha, bool(stat < crit), digest, runtime_ms)
    logger.info("KS %.5f vs critical %.5f at N=%d (%s, %d ms)",
                stat, crit, e.count, "pass" if report.passed else "fail", runtime_ms)
    return report, curve


def kaneko_mc_check(kappa: Sequence[int], a: float, b: float, beta: BetaLike, n: int,
                    n_points: int, rng: RngStream) -> Tuple[float, float, float]:
    """Monte-Carlo estimate of a Selberg-type Jack integral over (0,1)^n and its closed form.

    Returns (estimate, standard error, closed form).
    """
    beta = BetaParam.coerce(beta)
    kappa = Partition(kappa)
    if a <= -1 or b <= -1:
        raise ParameterError(f"the integral needs a, b > -1, got a={a}, b={b}")
    if len(kappa) > n:
        raise ParameterError(f"partition {tuple(kappa)} has more than n={n} parts")
    half = beta.beta / 2.0
    x = rng.generator.random((n_points, n))
    batch = jack_table_batch(beta, x, kappa.weight, max_part=kappa.part(0))
    jack = batch.values[batch.partitions.index(kappa)]
    i, j = np.triu_indices(n, k=1)
    log_w = (a * np.log(x) + b * np.log1p(-x)).sum(axis=1)
    log_w += half * 2.0 * np.log(np.abs(x[:, i] - x[:, j])).sum(axis=1)
    f = jack * np.exp(log_w)
    estimate = float(f.mean())
    se = float(f.std(ddof=1) / math.sqrt(n_points))

    log_closed = 0.0
    for idx in range(1, n + 1):
        k_i = kappa.part(idx - 1)
        log_closed += (special.gammaln(idx * half + 1.0) + special.gammaln(k_i + a + half * (n - idx) + 1.0)
                       + special.gammaln(b + half * (n - idx) + 1.0) - special.gammaln(half + 1.0)
                       - special.gammaln(k_i + a + b + half * (2 * n - idx - 1) + 2.0))
    closed = jack_C_identity(kappa, beta, n) * math.exp(log_closed)
    return estimate, se, closed


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    passed: bool
    detail: str


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def run_identity_suite(seed: int = 20240101) -> List[IdentityCheck]:
    """Special-function identities that must hold for a correct build."""
    gen = np.random.default_rng(seed)
    checks = []

    worst = 0.0
    for beta in (0.5, 1.0, 2.0, 2.5, 4.0):
        for n in range(1, 6):
            x = gen.uniform(0.0, 1.0, n)
            batch = jack_table_batch(beta, x[None, :], 6)
            weights = np.array([kappa.weight for kappa in batch.partitions])
            for k in range(7):
                total = batch.values[weights == k, 0].sum()
                worst = max(worst, _rel(total, x.sum() ** k))
    checks.append(IdentityCheck("jack sum rule", worst <= 1e-10, f"max rel err {worst:.2e}"))

    worst = 0.0
    for beta in (1.0, 2.0, 2.5):
        for a in (0.5, 2.0, 7.5):
            for n, (radius, weight) in F10_CASES.items():
                x = gen.uniform(0.0, radius, n)
                series = hyper_pq([a], [], beta, x, ctl=SeriesControl(max_weight=weight))
                worst = max(worst, _rel(series.value, f10_closed(a, x)))
    checks.append(IdentityCheck("1F0 determinant form", worst <= 1e-8, f"max rel err {worst:.2e}"))

    worst = 0.0
    for n in range(1, 6):
        x = gen.uniform(0.0, 1.0, n)
        worst = max(worst, _rel(hyper_pq([], [], 2.5, x).value, math.exp(x.sum())))
    checks.append(IdentityCheck("0F0 exponential", worst <= 1e-10, f"max rel err {worst:.2e}"))

    worst = 0.0
    beta, a, b, c = 2.0, -2.0, 1.5, 4.0
    for n in (1, 2, 3):
        x = gen.uniform(0.0, 1.0, n)
        c2 = a + b + 1.0 + (n - 1) * beta / 2.0 - c
        lhs = hyper_pq([a, b], [c], beta, x).value
        rhs = (math.exp(log_gauss_2f1_identity(a, b, c, n, beta))
               * hyper_pq([a, b], [c2], beta, 1.0 - x).value)
        worst = max(worst, _rel(lhs, rhs))
    checks.append(IdentityCheck("2F1 factorization at I - X", worst <= 1e-9, f"max rel err {worst:.2e}"))

    at_one, near_one = 0.0, 0.0
    for n in (1, 2, 3):
        exact = math.exp(log_gauss_2f1_identity(-3.0, 1.5, 5.0, n, 2.5))
        at_one = max(at_one, _rel(hyper_pq([-3.0, 1.5], [5.0], 2.5, np.ones(n)).value, exact))
        near_one = max(near_one, _rel(hyper_pq([-3.0, 1.5], [5.0], 2.5, np.full(n, 1.0 - GAUSS_EPS)).value, exact))
    checks.append(IdentityCheck("2F1 Gauss value at I", at_one <= 1e-9 and near_one <= 1e-4,
                                f"rel err {at_one:.2e} at I, {near_one:.2e} at (1-{GAUSS_EPS:g})I"))

    lhs, rhs = f21_transform_check(0.5, 1.0, 2.0, 2.0, [0.3])
    checks.append(IdentityCheck("2F1 Euler transformation", _rel(lhs, rhs) <= 1e-8,
                                f"lhs {lhs:.12g} rhs {rhs:.12g}"))

    worst = 0.0
    params = ManovaParams(5, 1, 3, 2.0, (1.0,))
    for x in (0.2, 0.5, 0.8):
        worst = max(worst, abs(cdf_largest_gsv(params, x) - special.betainc(3.0, 5.0, x * x)))
    checks.append(IdentityCheck("largest-value CDF at n=1", worst <= 1e-10, f"max abs err {worst:.2e}"))

    params = ManovaParams(5, 2, 3, 2.0, (1.0, 1.5))
    worst = 0.0
    for x in np.linspace(0.05, 0.95, 10):
        res = cdf_largest_gsv_2f1(params, x)
        worst = max(worst, abs(res.value - cdf_largest_gsv(params, x)))
    checks.append(IdentityCheck("CDF finite sum vs 2F1 form", worst <= 1e-10, f"max abs err {worst:.2e}"))

    for check in checks:
        logger.debug("%s: %s (%s)", check.name, "pass" if check.passed else "FAIL", check.detail)
    return checks
