"""Sparse recovery with the Legendre Gabor frame as sensing matrix.

Signals live on the p^2 time-frequency indices, measurements in C^p.  The
frame is never stored: synthesis and correlation go through the kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from ._runtime import DEFAULT_SEED, derive_rng, parallel_map
from .gabor import GRAM_CAP, NormConvention, TimeFreqIndex, column_scale, gabor_vector, gram_submatrix
from .linalg import hermitian_solve
from .zpz import FieldContext


@dataclass(frozen=True)
class SparseSignal:
    p: int
    support: tuple[TimeFreqIndex, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        support = tuple(TimeFreqIndex(int(l), int(j)) for l, j in self.support)
        values = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if len(support) != values.size:
            raise ValueError("support and values differ in length")
        if len(set(support)) != len(support):
            raise ValueError("support indices must be distinct")
        if np.any(values == 0):
            raise ValueError("values must be nonzero on the support")
        for l, j in support:
            if not (0 <= l < self.p and 0 <= j < self.p):
                raise ValueError(f"index {(l, j)} out of range for p={self.p}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    def dense(self) -> np.ndarray:
        X = np.zeros((self.p, self.p), np.complex128)
        for (l, j), v in zip(self.support, self.values):
            X[l, j] = v
        return X


@dataclass
class RecoveryResult:
    support: tuple[TimeFreqIndex, ...]
    values: np.ndarray = field(repr=False)
    exact_support_match: bool
    residual_norm: float
    iterations: int
    history: list[float] = field(default_factory=list, repr=False)


def measure(ctx: FieldContext, x: SparseSignal, conv=NormConvention.UNIT) -> np.ndarray:
    if x.p != ctx.p:
        raise ValueError(f"signal dimension p={x.p} does not match context p={ctx.p}")
    b = np.zeros(ctx.p, np.complex128)
    for idx, v in zip(x.support, x.values):
        b += v * gabor_vector(ctx, idx, conv)
    return b


def frame_apply(ctx: FieldContext, X: np.ndarray, conv=NormConvention.UNIT) -> np.ndarray:
    """A x for a dense coefficient array indexed [l, j]."""
    X = np.ascontiguousarray(X, dtype=np.complex128).reshape(ctx.p, ctx.p)
    return kernels.synthesize(ctx.chi, ctx.roots, X, column_scale(ctx.p, conv))


def frame_adjoint(ctx: FieldContext, r: np.ndarray, conv=NormConvention.UNIT) -> np.ndarray:
    """A^H r as a [l, j] array: entry (l, j) is <r, u_{l,j}>."""
    r = np.ascontiguousarray(r, dtype=np.complex128)
    return kernels.correlate(ctx.chi, ctx.roots, r, column_scale(ctx.p, conv))


def _matches(found: Iterable, truth: Iterable | None) -> bool:
    if truth is None:
        return False
    return set(map(tuple, found)) == set(map(tuple, truth))


def _least_squares(ctx, support, b, conv):
    G = gram_submatrix(ctx, support, conv)
    cols = np.stack([gabor_vector(ctx, s, conv) for s in support], axis=1)
    coef = hermitian_solve(G.conj(), cols.conj().T @ b)
    return coef, b - cols @ coef


def omp(ctx: FieldContext, b: np.ndarray, k: int, conv=NormConvention.UNIT,
        truth: Sequence | None = None, tol: float = 1e-12, cap: int = GRAM_CAP) -> RecoveryResult:
    """Orthogonal matching pursuit for k steps (fewer once the residual vanishes).

    Ties in |correlation| go to the smallest (l, j).
    """
    conv = NormConvention.parse(conv)
    if conv is not NormConvention.UNIT:
        raise ValueError("OMP needs unit-norm columns (convention 'unit')")
    p = ctx.p
    if k < 0 or k > min(cap, p * p):
        raise ValueError(f"k={k} outside [0, {min(cap, p * p)}]")
    b = np.asarray(b, dtype=np.complex128)
    stop = tol * max(1.0, float(np.linalg.norm(b)))
    r = b.copy()
    support: list[TimeFreqIndex] = []
    coef = np.zeros(0, np.complex128)
    history = [float(np.linalg.norm(r))]
    for _ in range(k):
        if history[-1] <= stop:
            break
        score = np.abs(frame_adjoint(ctx, r, conv))
        for l, j in support:
            score[l, j] = -1.0
        flat = int(np.argmax(score))
        support.append(TimeFreqIndex(flat // p, flat % p))
        coef, r = _least_squares(ctx, support, b, conv)
        history.append(float(np.linalg.norm(r)))
    return RecoveryResult(tuple(support), coef, _matches(support, truth), history[-1],
                          len(support), history)


def operator_norm_sq(ctx: FieldContext, conv=NormConvention.UNIT, iterations: int = 50,
                     seed: int = DEFAULT_SEED) -> float:
    """Largest eigenvalue of A A^H by power iteration."""
    v = derive_rng(seed, 0).normal(size=ctx.p) + 0j
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = frame_apply(ctx, frame_adjoint(ctx, v, conv), conv)
        lam_new = float(np.real(np.vdot(v, w)))
        v = w / np.linalg.norm(w)
        if abs(lam_new - lam) <= 1e-14 * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return lam


def _soft(z: np.ndarray, thresh: float) -> np.ndarray:
    mag = np.abs(z)
    shrink = np.maximum(mag - thresh, 0.0)
    return np.where(mag > 0, shrink / np.where(mag > 0, mag, 1.0), 0.0) * z


def _objective(ctx, X, b, lam, conv):
    resid = frame_apply(ctx, X, conv) - b
    return 0.5 * float(np.vdot(resid, resid).real) + lam * float(np.abs(X).sum())


def ista_l1(ctx: FieldContext, b: np.ndarray, lam: float, iterations: int = 500,
            conv=NormConvention.UNIT, step: float | None = None, truth: Sequence | None = None,
            x0: np.ndarray | None = None, tol: float = 0.0) -> RecoveryResult:
    """Iterative soft thresholding on 1/2 ||Ax - b||^2 + lam ||x||_1.

    Raises RuntimeError if the objective ever increases.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    p = ctx.p
    lipschitz = operator_norm_sq(ctx, conv)
    max_step = 1.0 / (lipschitz * (1 + 1e-9))
    if step is None:
        step = max_step
    if step <= 0 or step > max_step:
        raise ValueError(f"step must lie in (0, {max_step:.6g}]")
    b = np.asarray(b, dtype=np.complex128)
    X = np.zeros((p, p), np.complex128) if x0 is None else np.array(x0, np.complex128).reshape(p, p)
    obj = _objective(ctx, X, b, lam, conv)
    history = [obj]
    it = 0
    for it in range(1, iterations + 1):
        grad = frame_adjoint(ctx, frame_apply(ctx, X, conv) - b, conv)
        X_new = _soft(X - step * grad, step * lam)
        obj_new = _objective(ctx, X_new, b, lam, conv)
        if obj_new > obj + 1e-12 * max(1.0, abs(obj)):
            raise RuntimeError(f"ISTA objective increased at iteration {it}: {obj} -> {obj_new}")
        change = float(np.abs(X_new - X).max())
        X, obj = X_new, obj_new
        history.append(obj)
        if change <= tol:
            break
    nz = np.argwhere(X != 0)
    support = tuple(TimeFreqIndex(int(l), int(j)) for l, j in nz)
    values = X[nz[:, 0], nz[:, 1]] if len(nz) else np.zeros(0, np.complex128)
    resid = float(np.linalg.norm(frame_apply(ctx, X, conv) - b))
    return RecoveryResult(support, values, _matches(support, truth), resid, it, history)


def ista_recover(ctx: FieldContext, b: np.ndarray, k: int, conv=NormConvention.UNIT,
                 iterations: int = 300, bisection_steps: int = 40,
                 truth: Sequence | None = None) -> RecoveryResult:
    """Bisect lambda until ISTA returns exactly k nonzeros, then debias on that support."""
    b = np.asarray(b, dtype=np.complex128)
    if k == 0 or not np.any(b):
        return RecoveryResult((), np.zeros(0, np.complex128), _matches((), truth),
                              float(np.linalg.norm(b)), 0)
    hi = float(np.abs(frame_adjoint(ctx, b, conv)).max())
    lo = 0.0
    best = None
    for _ in range(bisection_steps):
        lam = 0.5 * (lo + hi)
        res = ista_l1(ctx, b, lam, iterations, conv, tol=1e-13)
        size = len(res.support)
        if size == k:
            best = res
            break
        if size > k:
            lo = lam
        else:
            hi = lam
            if size and (best is None or len(best.support) < size):
                best = res
    if best is None or not best.support:
        return RecoveryResult((), np.zeros(0, np.complex128), _matches((), truth),
                              float(np.linalg.norm(b)), 0)
    coef, r = _least_squares(ctx, list(best.support), b, conv)
    return RecoveryResult(best.support, coef, _matches(best.support, truth),
                          float(np.linalg.norm(r)), best.iterations, best.history)


def random_sparse_signal(rng: np.random.Generator, p: int, k: int) -> SparseSignal:
    """Uniform support without replacement, unit-modulus coefficients with uniform phase."""
    flat = rng.choice(p * p, size=k, replace=False)
    phase = rng.uniform(0.0, 2 * math.pi, size=k)
    return SparseSignal(p, tuple((int(f) // p, int(f) % p) for f in flat), np.exp(1j * phase))


@dataclass(frozen=True)
class SuccessRow:
    k: int
    trials: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 1.0


def recovery_experiment(ctx: FieldContext, k_range: Iterable[int], trials: int = 100,
                        seed: int = DEFAULT_SEED, method: str = "omp", conv=NormConvention.UNIT,
                        workers: int = 1) -> list[SuccessRow]:
    """Exact-support success counts per sparsity level.

    Trial t at sparsity k uses ``derive_rng(seed, k, t)``.
    """
    if method not in ("omp", "ista"):
        raise ValueError(f"unknown method {method!r}")
    ks = sorted(set(int(k) for k in k_range))
    tasks = [(k, t) for k in ks for t in range(trials)]

    def one(task):
        k, t = task
        if k == 0:
            return True
        x = random_sparse_signal(derive_rng(seed, k, t), ctx.p, k)
        b = measure(ctx, x, conv)
        if method == "omp":
            res = omp(ctx, b, k, conv, truth=x.support)
        else:
            res = ista_recover(ctx, b, k, conv, truth=x.support)
        return res.exact_support_match

    hits = parallel_map(one, tasks, workers)
    counts = {k: 0 for k in ks}
    for (k, _), ok in zip(tasks, hits):
        counts[k] += bool(ok)
    return [SuccessRow(k, trials, counts[k]) for k in ks]
