"""Flat-RIP machinery over index sets of the Legendre Gabor frame.

The pair-sum inner product <sum_{Omega_1} u, sum_{Omega_2} u> is computed by
two independent routes.  The direct route builds both sum vectors in the
time domain.  The spectral route expands chi in its Fourier series, so that
each frequency pair (n1, n2) contributes

    sum_s chi[s] chi[s - n] D_A(-s) D_B(s - n),     n = n1 - n2,

with D_M(t) = sum_{m in M} exp(2 pi i m t / p), A and B the time-shift fibers
of Omega_1 at n1 and Omega_2 at n2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from ._runtime import DEFAULT_SEED, derive_rng, parallel_map
from .gabor import (
    GRAM_CAP,
    NormConvention,
    TimeFreqIndex,
    coherence,
    column_scale,
    gabor_vector,
    gram_submatrix,
    inner_product,
)
from .linalg import hermitian_extreme_eigenvalues
from .zpz import FieldContext


class OmegaSet:
    """A finite set of time-frequency indices with fiber and projection views."""

    __slots__ = ("pairs", "fibers", "projection")

    def __init__(self, pairs: Iterable = ()):
        self.pairs = frozenset(TimeFreqIndex(int(l), int(j)) for l, j in pairs)
        fibers: dict[int, list[int]] = {}
        for l, j in self.pairs:
            fibers.setdefault(j, []).append(l)
        self.fibers = {j: sorted(ls) for j, ls in sorted(fibers.items())}
        self.projection = list(self.fibers)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __repr__(self):
        return f"OmegaSet({sorted(self.pairs)!r})"

    def isdisjoint(self, other: "OmegaSet") -> bool:
        return self.pairs.isdisjoint(other.pairs)

    def fiber(self, j: int) -> list[int]:
        return self.fibers.get(j, [])

    def check_theorem_size(self, p: int) -> None:
        if len(self) > math.isqrt(p):
            raise ValueError(f"|Omega| = {len(self)} exceeds sqrt(p) for p={p}")


@dataclass(frozen=True)
class RipReport:
    order: int
    delta: float
    mu: float
    trials: int
    convention: NormConvention
    relaxed_delta: float | None = None
    notes: tuple[str, ...] = field(default=())


class RipTransfer(NamedTuple):
    order: int
    delta: float


def _require_disjoint(o1: OmegaSet, o2: OmegaSet) -> None:
    if not o1.isdisjoint(o2):
        raise ValueError("Omega_1 and Omega_2 must be disjoint")


def _sum_vector(ctx: FieldContext, omega: OmegaSet, conv) -> np.ndarray:
    out = np.zeros(ctx.p, np.complex128)
    for idx in omega:
        out += gabor_vector(ctx, idx, conv)
    return out


def pair_sum_inner_product_direct(ctx: FieldContext, o1: OmegaSet, o2: OmegaSet,
                                  conv=NormConvention.UNIT) -> complex:
    _require_disjoint(o1, o2)
    if not len(o1) or not len(o2):
        return 0j
    return inner_product(_sum_vector(ctx, o1, conv), _sum_vector(ctx, o2, conv))


def _dirichlet_table(ctx: FieldContext, fiber: Sequence[int]) -> np.ndarray:
    t = np.arange(ctx.p, dtype=np.int64)
    m = np.asarray(fiber, dtype=np.int64)
    return np.conj(ctx.roots[np.outer(m, t) % ctx.p]).sum(axis=0)


def pair_sum_inner_product_spectral(ctx: FieldContext, o1: OmegaSet, o2: OmegaSet,
                                    conv=NormConvention.UNIT) -> complex:
    _require_disjoint(o1, o2)
    if not len(o1) or not len(o2):
        return 0j
    p = ctx.p
    s = np.arange(p, dtype=np.int64)
    chi = ctx.chi.astype(np.float64)
    root_p = math.sqrt(p)
    # chi[x] = (1 / (eps sqrt p)) sum_s chi[s] e^{2 pi i s x / p}, and the collapsed
    # k-sum returns eps sqrt p chi[s - n]; keep both factors explicit.
    expand = 1.0 / (ctx.epsilon * root_p)
    collapse = ctx.epsilon * root_p
    d1 = {n1: _dirichlet_table(ctx, o1.fiber(n1)) for n1 in o1.projection}
    d2 = {n2: _dirichlet_table(ctx, o2.fiber(n2)) for n2 in o2.projection}
    neg_s = (-s) % p
    re = []
    im = []
    for n1, da in d1.items():
        da_neg = da[neg_s]
        for n2, db in d2.items():
            shifted = (s - (n1 - n2)) % p
            terms = chi * chi[shifted] * da_neg * db[shifted]
            re.extend(terms.real.tolist())
            im.extend(terms.imag.tolist())
    total = complex(math.fsum(re), math.fsum(im))
    return column_scale(p, conv) ** 2 * expand * collapse * total


# ---------------------------------------------------------------------------
# samplers


def consecutive_fiber_omega(rng: np.random.Generator, p: int, size: int) -> OmegaSet:
    """Random Omega of the given size whose fibers are consecutive blocks of time shifts."""
    if size < 1 or size > p * p:
        raise ValueError(f"size must be in [1, p^2], got {size}")
    n_fibers = int(rng.integers(-(-size // p), min(size, p) + 1))
    freqs = rng.choice(p, size=n_fibers, replace=False)
    # random composition of `size` into n_fibers positive parts, each at most p
    while True:
        cuts = np.sort(rng.choice(np.arange(1, size), size=n_fibers - 1, replace=False)) if n_fibers > 1 else np.array([], int)
        lengths = np.diff(np.concatenate(([0], cuts, [size])))
        if lengths.max() <= p:
            break
    pairs = []
    for j, length in zip(freqs.tolist(), lengths.tolist()):
        start = int(rng.integers(p))
        pairs.extend(((start + t) % p, j) for t in range(length))
    return OmegaSet(pairs)


def sample_disjoint_pair(rng: np.random.Generator, p: int, k: int,
                         max_tries: int = 1000) -> tuple[OmegaSet, OmegaSet]:
    """Two disjoint consecutive-fiber sets with sizes drawn uniformly from 1..k."""
    for _ in range(max_tries):
        o1 = consecutive_fiber_omega(rng, p, int(rng.integers(1, k + 1)))
        o2 = consecutive_fiber_omega(rng, p, int(rng.integers(1, k + 1)))
        if o1.isdisjoint(o2):
            return o1, o2
    raise RuntimeError(f"no disjoint pair found in {max_tries} draws")


def all_singleton_pairs(p: int):
    """Every ordered pair of distinct singleton index sets."""
    idx = [(l, j) for l in range(p) for j in range(p)]
    for a in idx:
        for b in idx:
            if a != b:
                yield OmegaSet([a]), OmegaSet([b])


def flat_rip_delta(ctx: FieldContext, k: int, trials: int = 100, conv=NormConvention.UNIT,
                   seed: int = DEFAULT_SEED, pairs: Iterable | None = None,
                   sampler: Callable | None = None, theorem_mode: bool = True,
                   mu: float | None = None, workers: int = 1) -> RipReport:
    """Sampled flat-RIP constant: max |<sum, sum>| / sqrt(|Omega_1||Omega_2|).

    ``pairs`` overrides sampling with an explicit iterable of (Omega_1, Omega_2).
    Otherwise trial t draws from ``derive_rng(seed, t)`` via ``sampler``
    (default: :func:`sample_disjoint_pair`).  Sampling only lower-bounds the
    true constant.
    """
    conv = NormConvention.parse(conv)
    if k < 1:
        raise ValueError("k must be positive")
    if theorem_mode and k > math.isqrt(ctx.p):
        raise ValueError(f"k={k} exceeds sqrt(p) for p={ctx.p}")
    if pairs is None:
        if trials < 1:
            raise ValueError("trials must be positive")
        draw = sampler or sample_disjoint_pair
        pairs = [draw(derive_rng(seed, t), ctx.p, k) for t in range(trials)]
    else:
        pairs = list(pairs)
        for o1, o2 in pairs:
            if len(o1) > k or len(o2) > k:
                raise ValueError(f"pair exceeds order k={k}")

    def one(pair):
        o1, o2 = pair
        v = abs(pair_sum_inner_product_direct(ctx, o1, o2, conv))
        return v / math.sqrt(len(o1) * len(o2)), v / k

    results = parallel_map(one, pairs, workers)
    delta = max(r[0] for r in results)
    relaxed = max(r[1] for r in results)
    if mu is None:
        mu = coherence(ctx, conv)
    return RipReport(order=k, delta=delta, mu=mu, trials=len(pairs), convention=conv,
                     relaxed_delta=relaxed, notes=("sampled lower bound",))


def rip_order_from_flat(k: int, delta: float, s: int) -> RipTransfer:
    """RIP order and constant implied by flat RIP: (2 s k, 44 s delta ln k)."""
    if k < 1 or s < 1:
        raise ValueError("k and s must be positive integers")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return RipTransfer(2 * s * k, 44.0 * s * delta * math.log(k))


def lemma_hypotheses(k: int, mu: float) -> dict[str, bool]:
    """Which hypotheses of the flat-to-RIP transfer hold (log base is natural)."""
    return {"k_at_least_1024": k >= 2 ** 10, "coherence_at_most_1_over_k": mu <= 1.0 / k}


def rip_delta_sampled(ctx: FieldContext, S: int, trials: int = 100, conv=NormConvention.UNIT,
                      seed: int = DEFAULT_SEED, supports: Iterable | None = None,
                      cap: int = GRAM_CAP, mu: float | None = None, workers: int = 1) -> RipReport:
    """Lower bound on delta_S from Gram spectra of random (or given) supports.

    Trial t draws its support from ``derive_rng(seed, t)``, so the first N
    trials of a longer run are exactly the N-trial run.
    """
    conv = NormConvention.parse(conv)
    p = ctx.p
    if S < 1 or S > cap or S > p * p:
        raise ValueError(f"S={S} outside [1, {min(cap, p * p)}]")
    if supports is None:
        if trials < 1:
            raise ValueError("trials must be positive")
        supports = []
        for t in range(trials):
            flat = derive_rng(seed, t).choice(p * p, size=S, replace=False)
            supports.append([(int(f) // p, int(f) % p) for f in flat])
    else:
        supports = [list(sp) for sp in supports]

    def one(support):
        lo, hi = hermitian_extreme_eigenvalues(gram_submatrix(ctx, support, conv, cap))
        return max(hi - 1.0, 1.0 - lo)

    deltas = parallel_map(one, supports, workers)
    if mu is None:
        mu = coherence(ctx, conv)
    return RipReport(order=S, delta=max(deltas), mu=mu, trials=len(supports), convention=conv,
                     notes=("sampled lower bound",))
