"""Integer partitions, generalized Pochhammer symbols and generalized Gamma functions.

Everything here is a pure function of its inputs. Partitions are immutable
tuples with trailing zeros trimmed, so they can be used directly as dict keys.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator, Optional, Sequence, Tuple, Union

from scipy.special import gammaln

from bmanova.errors import DomainError, ParameterError

logger = logging.getLogger(__name__)

# Pochhammer products of larger weight are formed in log-magnitude + sign form.
LOG_SPACE_WEIGHT = 20


class Partition(tuple):
    """A weakly decreasing tuple of positive integers.

    ``Partition((3, 1, 0))`` and ``Partition((3, 1))`` are the same value.
    """

    def __new__(cls, parts: Sequence[int] = ()):
        parts = [int(p) for p in parts]
        while parts and parts[-1] == 0:
            parts.pop()
        if any(p < 0 for p in parts):
            raise ParameterError(f"partition parts must be nonnegative: {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ParameterError(f"partition parts must be weakly decreasing: {parts}")
        return super().__new__(cls, parts)

    @cached_property
    def weight(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    @cached_property
    def conjugate(self) -> "Partition":
        if not self:
            return self
        return Partition(sum(1 for p in self if p > j) for j in range(self[0]))

    def part(self, i: int) -> int:
        """Zero-based part access that reads 0 past the end."""
        return self[i] if i < len(self) else 0

    def __repr__(self) -> str:
        return f"Partition({tuple(self)!r})"


@dataclass(frozen=True)
class BetaParam:
    """The ensemble parameter beta and its Jack parameter alpha = 2 / beta."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ParameterError(f"beta must be a positive finite real, got {self.beta}")
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def alpha(self) -> float:
        return 2.0 / self.beta

    @classmethod
    def coerce(cls, value: Union["BetaParam", float]) -> "BetaParam":
        return value if isinstance(value, cls) else cls(float(value))


BetaLike = Union[BetaParam, float]


def _generate(k: int, max_len: int, max_part: int) -> Iterator[Tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    if max_len == 0:
        return
    for first in range(min(k, max_part), 0, -1):
        if first * max_len < k:
            break
        for rest in _generate(k - first, max_len - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=4096)
def _partitions_cached(k: int, max_len: int, max_part: int) -> Tuple[Partition, ...]:
    return tuple(Partition(parts) for parts in _generate(k, max_len, max_part))


def partitions_of(k: int, max_len: int, max_part: Optional[int] = None) -> Tuple[Partition, ...]:
    """Every partition of ``k`` with at most ``max_len`` parts, each at most ``max_part``.

    Partitions come in decreasing lexicographic order; ``k = 0`` gives the empty
    partition alone. Unsatisfiable bounds give an empty tuple.
    """
    if k < 0:
        raise ParameterError(f"weight must be nonnegative, got {k}")
    if max_len < 1:
        raise ParameterError(f"max_len must be positive, got {max_len}")
    cap = k if max_part is None else min(int(max_part), k)
    return _partitions_cached(int(k), int(max_len), max(cap, 0))


def partitions_up_to(max_weight: int, max_len: int, max_part: Optional[int] = None) -> Tuple[Partition, ...]:
    """All partitions of weight 0..max_weight, weights ascending, decreasing lex within a weight."""
    out = []
    for k in range(max_weight + 1):
        out.extend(partitions_of(k, max_len, max_part))
    return tuple(out)


def last_box(kappa: Partition) -> Tuple[Partition, int, int]:
    """Split off the last box of the last row: returns (parent, row, col), zero-based."""
    row = len(kappa) - 1
    col = kappa[row] - 1
    parent = Partition(kappa[:row] + (kappa[row] - 1,))
    return parent, row, col


def pochhammer_factor(a: float, row: int, col: int, beta: BetaLike) -> float:
    """The factor a - row*beta/2 + col contributed by box (row, col), zero-based."""
    return a - row * BetaParam.coerce(beta).beta / 2.0 + col


def upper_hook(kappa: Partition, row: int, col: int, alpha: float) -> float:
    return kappa.conjugate[col] - row - 1 + alpha * (kappa[row] - col)


def lower_hook(kappa: Partition, row: int, col: int, alpha: float) -> float:
    return kappa.conjugate[col] - row + alpha * (kappa[row] - col - 1)


def _factors(a: float, kappa: Partition, beta: BetaParam):
    for row, length in enumerate(kappa):
        for col in range(length):
            yield pochhammer_factor(a, row, col, beta)


def log_gen_pochhammer(a: float, kappa: Partition, beta: BetaLike) -> Tuple[float, float]:
    """(log|(a)_kappa|, sign). A vanishing symbol gives (-inf, 0.0)."""
    beta = BetaParam.coerce(beta)
    log_abs, sign = 0.0, 1.0
    for f in _factors(a, Partition(kappa), beta):
        if f == 0.0:
            return -math.inf, 0.0
        log_abs += math.log(abs(f))
        if f < 0:
            sign = -sign
    return log_abs, sign


def gen_pochhammer(a: float, kappa: Partition, beta: BetaLike) -> float:
    """Generalized Pochhammer symbol (a)_kappa^(beta)."""
    beta = BetaParam.coerce(beta)
    kappa = Partition(kappa)
    if kappa.weight <= LOG_SPACE_WEIGHT:
        return math.prod(_factors(a, kappa, beta))
    log_abs, sign = log_gen_pochhammer(a, kappa, beta)
    return sign * math.exp(log_abs) if sign else 0.0


def log_gen_gamma(c: float, n: int, beta: BetaLike) -> float:
    """ln Gamma_n^(beta)(c) for real c with c - (n-1)beta/2 > 0."""
    beta = BetaParam.coerce(beta)
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    args = [c - i * beta.beta / 2.0 for i in range(n)]
    if min(args) <= 0:
        raise DomainError(
            f"Gamma_{n}(c={c}) with beta={beta.beta} needs c > {(n - 1) * beta.beta / 2}")
    return n * (n - 1) * beta.beta / 4.0 * math.log(math.pi) + float(sum(gammaln(args)))


def log_K(m: int, n: int, beta: BetaLike) -> float:
    """ln of the normalization constant K_{m,n}^(beta)."""
    beta = BetaParam.coerce(beta)
    if n > m:
        raise ParameterError(f"K_{{m,n}} needs m >= n, got m={m}, n={n}")
    b = beta.beta
    return (m * n * b / 2.0 * math.log(2.0)
            - n * (n - 1) * b / 2.0 * math.log(math.pi)
            + log_gen_gamma(m * b / 2.0, n, beta)
            + log_gen_gamma(n * b / 2.0, n, beta)
            - n * float(gammaln(b / 2.0)))


def log_gauss_2f1_identity(a: float, b: float, c: float, n: int, beta: BetaLike) -> float:
    """ln 2F1^(beta)(a, b; c; I_n) through the generalized Gauss summation."""
    return (log_gen_gamma(c, n, beta) + log_gen_gamma(c - a - b, n, beta)
            - log_gen_gamma(c - a, n, beta) - log_gen_gamma(c - b, n, beta))
