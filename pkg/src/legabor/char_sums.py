"""Classical character sums and their published upper bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .zpz import FieldContext

REL_SLACK = 1e-9


@dataclass(frozen=True)
class BoundCheck:
    value: float
    bound: float

    @property
    def ratio(self) -> float:
        if self.bound > 0:
            return self.value / self.bound
        return 0.0 if self.value == 0 else math.inf

    @property
    def holds(self) -> bool:
        return self.value <= self.bound + REL_SLACK * self.bound


def weil_product_sum(ctx: FieldContext, shifts: Iterable[int]) -> BoundCheck:
    """|sum_n chi[n+d_1] ... chi[n+d_k]| against 9 k sqrt(p)."""
    d = [int(x) for x in shifts]
    p = ctx.p
    if not d:
        raise ValueError("at least one shift is required")
    if any(b <= a for a, b in zip(d, d[1:])) or d[0] <= 0 or d[-1] >= p:
        raise ValueError(f"shifts must satisfy 0 < d_1 < ... < d_k < p, got {d}")
    n = np.arange(p, dtype=np.int64)
    prod = np.ones(p, dtype=np.int64)
    for s in d:
        prod *= ctx.chi[(n + s) % p]
    return BoundCheck(float(abs(int(prod.sum()))), 9.0 * len(d) * math.sqrt(p))


def twisted_autocorrelation(ctx: FieldContext, m: int, n: int) -> BoundCheck:
    """|sum_k chi[k] chi[k+m] e^{-2 pi i k n / p}|; bound 2 sqrt(p) when m, n != 0."""
    p = ctx.p
    m %= p
    n %= p
    k = np.arange(p, dtype=np.int64)
    w = (ctx.chi * ctx.chi[(k + m) % p]).astype(np.float64)
    r = ctx.roots[(k * n) % p]
    value = abs(complex(math.fsum((w * r.real).tolist()), math.fsum((w * r.imag).tolist())))
    bound = 2.0 * math.sqrt(p) if (m and n) else float(p - 1)
    return BoundCheck(value, bound)


def twisted_autocorrelation_table(ctx: FieldContext) -> np.ndarray:
    """All |twisted sums| at once, indexed [m, n]."""
    return np.abs(kernels.twisted_rows(ctx.chi, ctx.roots, 0, ctx.p))


def polya_vinogradov_max(ctx: FieldContext, wrap: bool = False) -> BoundCheck:
    """Largest |sum_{M <= k <= M+N} chi[k]| over intervals, against sqrt(p) ln p.

    Non-wrapping intervals: the answer is the spread max(P) - min(P) of the
    prefix sums.  Wrapping intervals give the same set of values, because a
    full period sums to zero and a wrapped interval is minus its complement.
    """
    prefix = np.concatenate(([0], np.cumsum(ctx.chi, dtype=np.int64)))
    if wrap and prefix[-1] != 0:  # pragma: no cover - full period always vanishes
        raise AssertionError("character sum over a full period must vanish")
    value = float(prefix.max() - prefix.min())
    return BoundCheck(value, math.sqrt(ctx.p) * math.log(ctx.p))


def chung_double_sum(ctx: FieldContext, S: Iterable[int], T: Iterable[int]) -> BoundCheck:
    """|sum_{a in S, b in T} chi[a+b]| against sqrt(p|S||T|(1-|S|/p)(1-|T|/p))."""
    p = ctx.p
    s = np.unique(np.asarray(list(S), dtype=np.int64) % p)
    t = np.unique(np.asarray(list(T), dtype=np.int64) % p)
    if s.size == 0 or t.size == 0:
        raise ValueError("S and T must be nonempty")
    value = float(abs(int(ctx.chi[(s[:, None] + t[None, :]) % p].astype(np.int64).sum())))
    ns, nt = s.size, t.size
    bound = math.sqrt(p * ns * nt * max(0.0, 1 - ns / p) * max(0.0, 1 - nt / p))
    return BoundCheck(value, bound)
