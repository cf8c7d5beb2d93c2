"""Sine-ratio sums over consecutive blocks, their bounds and their growth in p.

The central quantity is

    A(p) = sum_{s != 0, -n} |sin(pi m1 s/p) / sin(pi s/p)| |sin(pi m2 (s+n)/p) / sin(pi (s+n)/p)|

for block lengths m1 <= m2 <= sqrt(p) and a modulation n ~ p^(1/2+delta).
Its expected growth is p^(3/2 - alpha) with alpha = sigma + (delta - sigma)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from ._runtime import parallel_map
from .zpz import FieldContext, is_prime, next_prime


@dataclass(frozen=True)
class ConsecutiveBlock:
    start: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"block length must be positive, got {self.length}")

    def members(self, p: int) -> np.ndarray:
        if self.length > p:
            raise ValueError(f"block length {self.length} exceeds p={p}")
        return (self.start + np.arange(self.length, dtype=np.int64)) % p


@dataclass(frozen=True)
class ThetaParams:
    """Modulation, block lengths and exponents for one prime.

    Construction checks only the basic ranges.  The stricter hypotheses
    (sizes within a factor 2 of their targets, even block lengths and ratio)
    are listed by :meth:`theorem_violations`.
    """

    p: int
    n: int
    m1len: int
    m2len: int
    sigma: float = 0.1
    delta: float = 0.3
    epsilon: float = 0.1

    def __post_init__(self):
        if self.p < 3 or not is_prime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        object.__setattr__(self, "n", int(self.n) % self.p)
        if not (1 <= self.m1len <= self.p and 1 <= self.m2len <= self.p):
            raise ValueError("block lengths must lie in [1, p]")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if not 0.0 <= self.sigma < 0.5:
            raise ValueError("sigma must lie in [0, 1/2)")
        if self.delta <= self.sigma:
            raise ValueError("delta must exceed sigma")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def alpha(self) -> float:
        return self.sigma + (self.delta - self.sigma) / 2

    @property
    def n_centered(self) -> int:
        return self.n if self.n <= self.p // 2 else self.n - self.p

    def theorem_violations(self) -> list[str]:
        out = []
        p = self.p
        n_target = p ** (0.5 + self.delta)
        m_target = p ** (0.5 - self.sigma)
        if self.n == 0:
            out.append("n must be nonzero mod p")
        elif not 0.5 <= abs(self.n_centered) / n_target <= 2.0:
            out.append(f"n={self.n} not within a factor 2 of p^(1/2+delta)={n_target:.3f}")
        if not 0.5 <= self.m1len / m_target <= 2.0:
            out.append(f"m1len={self.m1len} not within a factor 2 of p^(1/2-sigma)={m_target:.3f}")
        if not self.m1len <= self.m2len <= math.isqrt(p):
            out.append("need m1len <= m2len <= floor(sqrt(p))")
        if self.m1len % 2:
            out.append("m1len must be even")
        if self.m2len % self.m1len or (self.m2len // self.m1len) % 2:
            out.append("m2len / m1len must be an even integer")
        return out

    @classmethod
    def realize(cls, p: int, sigma: float = 0.1, delta: float = 0.3, epsilon: float = 0.1,
                mode: str = "free") -> "ThetaParams":
        """Concrete n, m1len, m2len for prime p.

        n is the nearest integer to p^(1/2+delta) (kept nonzero mod p); m1len the
        nearest even integer to p^(1/2-sigma), capped at floor(sqrt(p)); m2len is
        m1len times the largest even multiplier that stays within floor(sqrt(p)).
        When no such multiplier exists, ``mode="theorem"`` shrinks m1len (staying
        within a factor 2 of its target) and raises if that fails, while
        ``mode="free"`` falls back to m2len = m1len.
        """
        if mode not in ("free", "theorem"):
            raise ValueError(f"unknown mode {mode!r}")
        n = min(p - 1, max(1, round(p ** (0.5 + delta))))
        root = math.isqrt(p)
        cap = root - root % 2
        if cap < 2:
            raise ValueError(f"p={p} too small for even block lengths")
        target = p ** (0.5 - sigma)
        m1 = min(cap, max(2, 2 * round(target / 2)))
        mult = (root // m1) // 2 * 2
        if mult < 2 and mode == "theorem":
            for cand in range(m1 - 2, 1, -2):
                if target / cand > 2.0:
                    break
                if (root // cand) // 2 * 2 >= 2:
                    m1, mult = cand, (root // cand) // 2 * 2
                    break
        if mult >= 2:
            m2 = m1 * mult
        elif mode == "theorem":
            raise ValueError(f"no even block ratio fits under sqrt(p) for p={p}, sigma={sigma}")
        else:
            m2 = m1
        params = cls(p, n, m1, m2, sigma, delta, epsilon)
        if mode == "theorem":
            bad = params.theorem_violations()
            if bad:
                raise ValueError("; ".join(bad))
        return params


# ---------------------------------------------------------------------------
# kernels and exact sums


def _kernel_mag(p: int, length: int, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.int64) % p
    num = np.abs(np.sin(np.pi * ((length * t) % p) / p))
    den = np.abs(np.sin(np.pi * t / p))
    safe = np.where(t == 0, 1.0, den)
    return np.where(t == 0, float(length), num / safe)


def dirichlet_kernel_mag(p: int, block: ConsecutiveBlock | int, tshift: int) -> float:
    """|sum_{m in block} e^{2 pi i m t / p}| from the closed sine-ratio form."""
    length = block.length if isinstance(block, ConsecutiveBlock) else int(block)
    return float(_kernel_mag(p, length, tshift))


def _sine_terms(params: ThetaParams, s: np.ndarray) -> np.ndarray:
    return _kernel_mag(params.p, params.m1len, s) * _kernel_mag(params.p, params.m2len, s + params.n)


def _admissible_s(params: ThetaParams) -> np.ndarray:
    """Centered representatives of {s : s != 0, s != -n mod p}."""
    p = params.p
    s = np.arange(-(p // 2), p // 2 + 1, dtype=np.int64)
    return s[(s != 0) & ((s + params.n) % p != 0)]


def sine_sum_exact(params: ThetaParams) -> float:
    return float(kernels.sine_sum(params.p, params.n, params.m1len, params.m2len))


def trivial_bound(params: ThetaParams) -> float:
    return params.p * math.sqrt(params.m1len * params.m2len)


def _check_blocks(params: ThetaParams, block1: ConsecutiveBlock, block2: ConsecutiveBlock) -> None:
    if block1.length != params.m1len or block2.length != params.m2len:
        raise ValueError(
            f"block lengths ({block1.length}, {block2.length}) do not match "
            f"params ({params.m1len}, {params.m2len})")


def gabor_triple_sum(ctx: FieldContext, params: ThetaParams, block1: ConsecutiveBlock,
                     block2: ConsecutiveBlock) -> complex:
    """sum_k sum_{m1, m2} chi[k+m1-m2] chi[k] e^{2 pi i k n/p} e^{-2 pi i m2 n/p}.

    The block pair is collapsed to weights on the lags d = m1 - m2, after
    which each lag needs one length-p twisted autocorrelation.
    """
    _check_blocks(params, block1, block2)
    p, n = ctx.p, params.n
    m1 = block1.members(p)
    m2 = block2.members(p)
    lag = (m1[:, None] - m2[None, :]) % p
    phase = np.broadcast_to(ctx.roots[(m2 * n) % p][None, :], lag.shape)
    weights = np.zeros(p, np.complex128)
    np.add.at(weights, lag.ravel(), phase.ravel())
    lags = np.unique(lag)
    return complex(kernels.lagged_twisted_sum(ctx.chi, ctx.roots, lags, weights[lags], n))


def fixed_k_double_sum(ctx: FieldContext, params: ThetaParams, k: int, block1: ConsecutiveBlock,
                       block2: ConsecutiveBlock) -> complex:
    """sum_{m1, m2} chi[k+m1-m2] e^{2 pi i m2 n/p}; trivially bounded by m1len * m2len."""
    _check_blocks(params, block1, block2)
    p = ctx.p
    m1 = block1.members(p)
    m2 = block2.members(p)
    chi_sum = ctx.chi[(k + m1[:, None] - m2[None, :]) % p].astype(np.float64).sum(axis=0)
    return complex(np.dot(chi_sum, np.conj(ctx.roots[(m2 * params.n) % p])))


# ---------------------------------------------------------------------------
# piecewise-linear bounds


def _dist_to_int(x: np.ndarray) -> np.ndarray:
    return np.abs(x - np.round(x))


def piecewise_terms(params: ThetaParams, s, c: float = math.pi) -> np.ndarray:
    """p1u p2u / (p1l p2l) at each s, with upper factors c * ||.||."""
    p, n = params.p, params.n
    s = np.asarray(s, dtype=np.int64)
    # integer reductions keep the fractional parts exact
    p1u = c * _dist_to_int(((params.m1len * s) % p) / p)
    p1l = _dist_to_int((s % p) / p)
    p2u = c * _dist_to_int(((params.m2len * (s + n)) % p) / p)
    p2l = _dist_to_int(((s + n) % p) / p)
    return p1u * p2u / (p1l * p2l)


def piecewise_bound_sum(params: ThetaParams, c: float = math.pi) -> float:
    if params.m1len < 2 or params.m2len < 2:
        raise ValueError("piecewise bound needs block lengths >= 2")
    return math.fsum(piecewise_terms(params, _admissible_s(params), c).tolist())


# ---------------------------------------------------------------------------
# interval grid and the region decomposition


class IntervalGrid:
    """x-intervals of length p/m1len and y-intervals of length p/m2len shifted by -n.

    Intervals are half-open, so every integer lies in exactly one of each.
    J(i) collects the y-intervals whose left endpoint lies in x-interval i.
    """

    def __init__(self, p: int, n: int, m1len: int, m2len: int):
        self.p, self.m1len, self.m2len = p, m1len, m2len
        n %= p
        self.n = n if n <= p // 2 else n - p

    @classmethod
    def from_params(cls, params: ThetaParams) -> "IntervalGrid":
        return cls(params.p, params.n, params.m1len, params.m2len)

    @property
    def t(self) -> float:
        return self.n * self.m2len / self.p

    def x_interval(self, i: int) -> tuple[float, float]:
        return self.p * i / self.m1len, self.p * (i + 1) / self.m1len

    def y_interval(self, j: int) -> tuple[float, float]:
        return self.ytilde(j), self.ytilde(j + 1)

    def ytilde(self, j: int) -> float:
        return self.p * j / self.m2len - self.n

    def x_index(self, s):
        return (self.m1len * np.asarray(s, dtype=np.int64)) // self.p

    def y_index(self, s):
        return (self.m2len * (np.asarray(s, dtype=np.int64) + self.n)) // self.p

    def J(self, i: int) -> range:
        den = self.p * self.m1len
        base = self.n * self.m1len * self.m2len
        lo = -(-(self.p * i * self.m2len + base) // den)
        hi = -(-(self.p * (i + 1) * self.m2len + base) // den)
        return range(lo, hi)

    def x_of_y(self, j: int) -> int:
        """Index of the x-interval holding the left endpoint of y-interval j."""
        return (self.m1len * (self.p * j - self.n * self.m2len)) // (self.p * self.m2len)

    def y_members(self, j: int) -> np.ndarray:
        """Integers s with ytilde(j) <= s < ytilde(j+1)."""
        p, m2, n = self.p, self.m2len, self.n
        lo = -(-(p * j) // m2) - n
        hi = -(-(p * (j + 1)) // m2) - n
        return np.arange(lo, hi, dtype=np.int64)


@dataclass
class SumDecomposition:
    e1: float
    s_main: float
    e2: float
    e3: float
    total_bound: float
    regions: dict[str, frozenset] = field(repr=False)
    residuals: list[tuple[int, int, float]] = field(default_factory=list, repr=False)

    @property
    def discrepancy(self) -> float:
        return self.total_bound - (self.e1 + self.s_main + self.e2 + self.e3)


def _main_term_values(params: ThetaParams, i, j, s: np.ndarray) -> np.ndarray:
    p = params.p
    n = IntervalGrid.from_params(params).n
    return (4 * p * p / math.pi ** 2) * ((params.m1len * s / p - i) * (params.m2len * (s + n) / p - j)
                                         / (s * (s + n)))


def main_term_residual(params: ThetaParams, i: int, j: int) -> float:
    """Main-term sum over y-interval j minus its three-term closed form.

    The closed form is -2 p^3 i / (pi^2 m2 yt^2) + 2 n p^2 i / (pi^2 yt^2 j) + 2 p m1 / (pi^2 j)
    with yt = p j / m2 - n.  The sum skips s = 0 and s = -n.
    """
    grid = IntervalGrid.from_params(params)
    yt = grid.ytilde(j)
    if j == 0 or yt == 0:
        raise ValueError("main-term residual needs j != 0 and a nonzero interval start")
    s = grid.y_members(j)
    s = s[(s != 0) & (s + grid.n != 0)]
    return _residual_from(params, i, j, s)


def _residual_from(params: ThetaParams, i: int, j: int, s: np.ndarray) -> float:
    p, m1, m2 = params.p, params.m1len, params.m2len
    n = IntervalGrid.from_params(params).n
    yt = p * j / m2 - n
    total = math.fsum(_main_term_values(params, i, j, s).tolist()) if s.size else 0.0
    closed = (-2 * p ** 3 * i / (math.pi ** 2 * m2 * yt ** 2)
              + 2 * n * p ** 2 * i / (math.pi ** 2 * yt ** 2 * j)
              + 2 * p * m1 / (math.pi ** 2 * j))
    return total - closed


def sum_split_decompose(params: ThetaParams, c: float = 2.0, theorem_mode: bool = True,
                        with_residuals: bool = True) -> SumDecomposition:
    """Evaluate the four region sums E1, S, E2, E3 literally.

    Each admissible s (centered representative) gets x-index i and y-index j.
    s with |i| < p^eps forms the E1 region, summed with the piecewise bound.
    Every other s forms the main region, where S adds the signed smoothed
    term, E2 adds the odd-j correction and E3 the (even i, odd j) correction.
    ``regions`` maps "e1" and "main" (a partition) plus the "e2" and "e3"
    supports (subsets of "main") to residues mod p.
    """
    if not 0.0 < params.epsilon < params.delta - params.sigma:
        raise ValueError("epsilon must lie in (0, delta - sigma)")
    if theorem_mode:
        bad = params.theorem_violations()
        if bad:
            raise ValueError("; ".join(bad))
    p = params.p
    grid = IntervalGrid.from_params(params)
    n = grid.n
    s = _admissible_s(params)
    i = grid.x_index(s)
    j = grid.y_index(s)
    bound_terms = piecewise_terms(params, s, c)
    cut = p ** params.epsilon
    near = np.abs(i) < cut
    far = ~near
    sf, i_f, j_f = s[far], i[far], j[far]
    sign = np.where((i_f + j_f) % 2 == 0, 1.0, -1.0)
    main = sign * _main_term_values(params, i_f, j_f, sf)
    odd_j = (j_f % 2) == 1
    base = (4 * p * p / math.pi ** 2) / (sf * (sf + n))
    e2_terms = np.where(i_f % 2 == 0, 1.0, -1.0) * (params.m1len * sf / p - i_f) * base
    e3_mask = odd_j & (i_f % 2 == 0)

    def fs(x):
        return math.fsum(np.asarray(x).tolist())

    residues = lambda arr: frozenset((arr % p).tolist())  # noqa: E731
    regions = {
        "e1": residues(s[near]),
        "main": residues(sf),
        "e2": residues(sf[odd_j]),
        "e3": residues(sf[e3_mask]),
    }
    residuals = []
    if with_residuals:
        for jj in np.unique(j_f).tolist():
            ii = grid.x_of_y(jj)
            if jj == 0 or grid.ytilde(jj) == 0 or abs(ii) < cut:
                continue
            residuals.append((ii, jj, main_term_residual(params, ii, jj)))
    return SumDecomposition(
        e1=fs(bound_terms[near]),
        s_main=fs(main),
        e2=fs(e2_terms[odd_j]),
        e3=fs(base[e3_mask]),
        total_bound=fs(bound_terms),
        regions=regions,
        residuals=residuals,
    )


def singular_region_sums(params: ThetaParams, k_intervals: int = 1) -> tuple[float, float]:
    """Sine-ratio sum near s = 0 and near s = -n.

    near_zero covers |s| <= p^(1/2 + eps + sigma); near_neg_n covers
    |s + n| <= k p / m2len, i.e. 2k whole y-intervals around the pole.
    """
    if k_intervals < 1:
        raise ValueError("k_intervals must be positive")
    p = params.p
    s = _admissible_s(params)
    n = IntervalGrid.from_params(params).n
    terms = _sine_terms(params, s)
    zero_mask = np.abs(s) <= p ** (0.5 + params.epsilon + params.sigma)
    pole_mask = np.abs(s + n) * params.m2len <= k_intervals * p
    return math.fsum(terms[zero_mask].tolist()), math.fsum(terms[pole_mask].tolist())


# ---------------------------------------------------------------------------
# growth fits


@dataclass(frozen=True)
class ScalingFit:
    points: tuple[tuple[int, float], ...]
    exponent: float
    logK: float
    r2: float

    @property
    def K(self) -> float:
        return math.exp(self.logK)


def scaling_fit(points: Iterable[tuple[int, float]]) -> ScalingFit:
    """Least-squares line through (ln p, ln value)."""
    pts = tuple((int(q), float(v)) for q, v in points)
    if len(pts) < 5:
        raise ValueError(f"need at least 5 points, got {len(pts)}")
    if any(v <= 0 or not math.isfinite(v) for _, v in pts):
        raise ValueError("values must be positive and finite")
    if len({q for q, _ in pts}) != len(pts):
        raise ValueError("duplicate primes in fit")
    x = np.log([q for q, _ in pts])
    y = np.log([v for _, v in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    ss_tot = float(((y - ym) ** 2).sum())
    ss_res = float(((y - intercept - slope * x) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return ScalingFit(pts, slope, intercept, r2)


def log_spaced_primes(lo: int, hi: int, count: int) -> list[int]:
    """Smallest prime at or above each of ``count`` log-spaced targets in [lo, hi]."""
    out = []
    for target in np.geomspace(lo, hi, count):
        q = next_prime(int(round(target)))
        if q <= hi and q not in out:
            out.append(q)
    return out


@dataclass(frozen=True)
class SweepRow:
    params: ThetaParams
    sine_sum: float
    trivial_bound: float

    @property
    def ratio(self) -> float:
        return self.sine_sum / self.trivial_bound


def sine_sum_sweep(primes: Sequence[int], sigma: float, delta: float, epsilon: float = 0.1,
                   mode: str = "free", workers: int = 1) -> list[SweepRow]:
    def one(q):
        params = ThetaParams.realize(q, sigma, delta, epsilon, mode)
        return SweepRow(params, sine_sum_exact(params), trivial_bound(params))

    return sorted(parallel_map(one, primes, workers), key=lambda r: r.params.p)
