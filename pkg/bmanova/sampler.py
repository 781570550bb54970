"""Recursive beta-Wishart and beta-MANOVA spectrum samplers.

The beta-Wishart singular values are built one dimension at a time: a scaled
chi variate to start, then at level k a broken-arrow matrix with the previous
singular values on the diagonal, a column of k-1 independent chi_beta draws and
a chi_{(m-k+1)beta} corner, all scaled by sqrt(D_kk). The MANOVA sampler calls
the Wishart sampler twice and maps the result into (0, 1).

Every sampler is batched over a leading axis; the single-draw operations are
the size-1 case.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence, Tuple

import numpy as np

from bmanova.combinatorics import BetaLike, BetaParam
from bmanova.errors import ParameterError
from bmanova.jack import as_spectrum
from bmanova.utils.validators import validate_manova_params

logger = logging.getLogger(__name__)

# Below this shape Gamma variates are drawn in log form to keep chi draws off zero.
LOG_GAMMA_SHAPE = 1.0
_TINY = np.finfo(float).tiny
_BELOW_ONE = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class ManovaParams:
    m: int
    n: int
    p: int
    beta: BetaParam
    omega: Tuple[float, ...]

    def __post_init__(self):
        beta = self.beta.beta if isinstance(self.beta, BetaParam) else self.beta
        omega = tuple(float(w) for w in np.asarray(self.omega, dtype=float).reshape(-1))
        ok, message = validate_manova_params(self.m, self.n, self.p, float(beta), omega)
        if not ok:
            raise ParameterError(message)
        object.__setattr__(self, "beta", BetaParam.coerce(beta))
        object.__setattr__(self, "omega", omega)

    @property
    def omega_array(self) -> np.ndarray:
        return np.asarray(self.omega)

    @property
    def truncation(self) -> float:
        """t = (m - n + 1) beta / 2 - 1, the part cap of the largest-value CDF."""
        return (self.m - self.n + 1) * self.beta.beta / 2.0 - 1.0

    def with_overrides(self, **changes) -> "ManovaParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class RngStream:
    """A reproducible variate stream keyed by (seed, stream_id).

    The stream is consumed by use: every sampler call advances ``generator``,
    so two calls on one object give different draws. ``restart()`` returns the
    same key positioned at its first variate. ``substream(i)`` derives
    independent child streams for parallel batches.
    """

    seed: int
    stream_id: int = 0
    path: Tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),) + tuple(self.path))
        object.__setattr__(self, "generator", np.random.Generator(np.random.PCG64(seq)))

    def restart(self) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path)

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(index),))


def chi_batch(dof: float, size, rng: RngStream) -> np.ndarray:
    """Chi variates with ``dof`` real degrees of freedom, as sqrt(2 Gamma(dof/2))."""
    if not (np.isfinite(dof) and dof > 0):
        raise ParameterError(f"chi degrees of freedom must be positive, got {dof}")
    gen = rng.generator
    shape = dof / 2.0
    if shape >= LOG_GAMMA_SHAPE:
        return np.sqrt(gen.gamma(shape, 2.0, size=size))
    # Gamma(a) = Gamma(a + 1) * U^(1/a)
    log_g = np.log(gen.gamma(shape + 1.0, 1.0, size=size)) + np.log(gen.random(size=size)) / shape
    return np.maximum(np.exp(0.5 * (np.log(2.0) + log_g)), _TINY)


def chi_sample(dof: float, rng: RngStream) -> float:
    return float(chi_batch(dof, 1, rng)[0])


def arrow_singular_values_batch(diag_block: np.ndarray, last_col: np.ndarray,
                                corner: np.ndarray) -> np.ndarray:
    """Singular values, descending, of broken-arrow matrices Z = [[diag(s), v], [0, c]].

    ``diag_block`` and ``last_col`` have shape (N, k-1), ``corner`` shape (N,).
    The eigenvalues of Z^T Z come from a batched symmetric eigensolver.
    """
    s = np.asarray(diag_block, dtype=float)
    v = np.asarray(last_col, dtype=float)
    c = np.asarray(corner, dtype=float)
    size, k1 = s.shape
    gram = np.zeros((size, k1 + 1, k1 + 1))
    idx = np.arange(k1)
    gram[:, idx, idx] = s * s
    sv = s * v
    gram[:, idx, k1] = sv
    gram[:, k1, idx] = sv
    gram[:, k1, k1] = np.sum(v * v, axis=1) + c * c
    eig = np.linalg.eigvalsh(gram)
    return np.sqrt(np.clip(eig, 0.0, None))[:, ::-1]


def arrow_singular_values(diag_block: Sequence[float], last_col: Sequence[float],
                          corner: float) -> np.ndarray:
    s = np.asarray(diag_block, dtype=float).reshape(1, -1)
    v = np.asarray(last_col, dtype=float).reshape(1, -1)
    if s.shape != v.shape:
        raise ParameterError(f"diagonal block and last column differ in length: {s.size} vs {v.size}")
    values = np.concatenate([s.ravel(), v.ravel(), [corner]])
    if not (np.all(np.isfinite(values)) and np.all(values >= 0)):
        raise ParameterError("arrow matrix entries must be finite and nonnegative")
    return arrow_singular_values_batch(s, v, np.array([float(corner)]))[0]


def _check_descending(values: np.ndarray, label: str) -> None:
    ties = np.sum(values[:, :-1] <= values[:, 1:])
    if ties:
        logger.warning("%s: %d tied or unordered adjacent values left in place", label, int(ties))


def sample_beta_wishart_sv(m: int, n: int, beta: BetaLike, D, rng: RngStream,
                           size: int) -> np.ndarray:
    """``size`` draws of the n beta-Wishart singular values, shape (size, n), descending.

    ``D`` is the covariance diagonal, either shape (n,) or one row per draw.
    """
    beta = BetaParam.coerce(beta)
    if not (isinstance(n, (int, np.integer)) and n >= 1 and m >= n):
        raise ParameterError(f"beta-Wishart needs m >= n >= 1, got m={m}, n={n}")
    d = np.broadcast_to(np.asarray(D, dtype=float), (size, n))
    if not (np.all(np.isfinite(d)) and np.all(d > 0)):
        raise ParameterError("covariance diagonal must be positive and finite")
    b = beta.beta
    root_d = np.sqrt(d)
    sigma = (chi_batch(m * b, size, rng) * root_d[:, 0])[:, None]
    for k in range(2, n + 1):
        col = chi_batch(b, (size, k - 1), rng) * root_d[:, k - 1:k]
        corner = chi_batch((m - k + 1) * b, size, rng) * root_d[:, k - 1]
        sigma = arrow_singular_values_batch(sigma, col, corner)
    _check_descending(sigma, "beta-Wishart")
    return sigma


def beta_wishart_sv(m: int, n: int, beta: BetaLike, D: Sequence[float], rng: RngStream) -> np.ndarray:
    d = as_spectrum(D)
    if d.size != n:
        raise ParameterError(f"covariance diagonal must have n={n} entries, got {d.size}")
    return sample_beta_wishart_sv(m, n, beta, d, rng, 1)[0]


def sample_beta_manova_gsv(params: ManovaParams, rng: RngStream, size: int) -> np.ndarray:
    """``size`` draws of the generalized singular values, shape (size, n), descending in (0, 1)."""
    sigma = sample_beta_wishart_sv(params.m, params.n, params.beta, params.omega_array ** 2, rng, size)
    lam = sigma * sigma
    tau = sample_beta_wishart_sv(params.p, params.n, params.beta, 1.0 / lam, rng, size)
    c = np.minimum(tau / np.sqrt(1.0 + tau * tau), _BELOW_ONE)
    return -np.sort(-c, axis=1)


def beta_manova_gsv(params: ManovaParams, rng: RngStream) -> np.ndarray:
    return sample_beta_manova_gsv(params, rng, 1)[0]
