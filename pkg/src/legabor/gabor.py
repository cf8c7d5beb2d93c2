"""The Gabor system of Legendre symbols.

Column (l, j) of the p x p^2 frame is ``c * chi[k - l] * exp(-2 pi i k j / p)``.
Two normalizations are supported: ``PAPER`` uses c = 1/sqrt(p), which leaves
column norm^2 = (p-1)/p because chi[0] = 0; ``UNIT`` rescales to exact unit
columns.  Nothing here materializes the whole frame except the brute-force
coherence path, which is capped at small p.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .zpz import FieldContext

BRUTE_COHERENCE_MAX_P = 31
GRAM_CAP = 256


class NormConvention(enum.Enum):
    PAPER = "paper"
    UNIT = "unit"

    @classmethod
    def parse(cls, value: "NormConvention | str") -> "NormConvention":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown convention {value!r}; expected 'paper' or 'unit'") from None


class TimeFreqIndex(NamedTuple):
    l: int
    j: int


def column_scale(p: int, conv: NormConvention) -> float:
    conv = NormConvention.parse(conv)
    return 1.0 / math.sqrt(p) if conv is NormConvention.PAPER else 1.0 / math.sqrt(p - 1)


def _check_index(ctx: FieldContext, idx) -> TimeFreqIndex:
    l, j = int(idx[0]), int(idx[1])
    if not (0 <= l < ctx.p and 0 <= j < ctx.p):
        raise ValueError(f"index {(l, j)} out of range for p={ctx.p}")
    return TimeFreqIndex(l, j)


def gabor_vector(ctx: FieldContext, idx, conv=NormConvention.PAPER) -> np.ndarray:
    l, j = _check_index(ctx, idx)
    p = ctx.p
    k = np.arange(p, dtype=np.int64)
    return column_scale(p, conv) * ctx.chi[(k - l) % p] * ctx.roots[(k * j) % p]


def inner_product(u: np.ndarray, v: np.ndarray) -> complex:
    """sum_k u[k] * conj(v[k]), each component summed with exact rounding."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    w = u * np.conj(v)
    return complex(math.fsum(w.real.tolist()), math.fsum(w.imag.tolist()))


def frame_matrix(ctx: FieldContext, conv=NormConvention.PAPER) -> np.ndarray:
    """Dense p x p^2 frame, column index l*p + j.  Small p only."""
    p = ctx.p
    k = np.arange(p)[:, None]
    l = np.repeat(np.arange(p), p)[None, :]
    j = np.tile(np.arange(p), p)[None, :]
    return column_scale(p, conv) * ctx.chi[(k - l) % p] * ctx.roots[(k * j) % p]


def shift_class_table(ctx: FieldContext, m_lo: int = 0, m_hi: int | None = None) -> np.ndarray:
    """|sum_k chi[k] chi[k+a] e^{-2 pi i k b / p}| for a in [m_lo, m_hi), all b.

    |<u_{l1,j1}, u_{l2,j2}>| equals c^2 times entry (l1 - l2, j1 - j2).
    """
    m_hi = ctx.p if m_hi is None else m_hi
    return np.abs(kernels.twisted_rows(ctx.chi, ctx.roots, m_lo, m_hi))


def coherence(ctx: FieldContext, conv=NormConvention.PAPER, mode: str = "shift_class",
              max_brute_p: int = BRUTE_COHERENCE_MAX_P, block_rows: int = 256) -> float:
    """Largest |<u_a, u_b>| over distinct frame columns."""
    conv = NormConvention.parse(conv)
    p = ctx.p
    c2 = column_scale(p, conv) ** 2
    if mode == "brute":
        if p > max_brute_p:
            raise ValueError(f"brute coherence limited to p <= {max_brute_p}, got {p}")
        A = frame_matrix(ctx, conv)
        G = np.abs(A.conj().T @ A)
        np.fill_diagonal(G, 0.0)
        return float(G.max())
    if mode != "shift_class":
        raise ValueError(f"unknown coherence mode {mode!r}")
    best = 0.0
    for lo in range(0, p, block_rows):
        hi = min(p, lo + block_rows)
        rows = shift_class_table(ctx, lo, hi)
        if lo == 0:
            rows[0, 0] = 0.0
        best = max(best, float(rows.max()))
    return c2 * best


def gram_submatrix(ctx: FieldContext, support: Sequence, conv=NormConvention.PAPER,
                   cap: int = GRAM_CAP) -> np.ndarray:
    """G[a, b] = <u_a, u_b> for the listed columns."""
    idx = [_check_index(ctx, s) for s in support]
    if len(set(idx)) != len(idx):
        raise ValueError("support contains duplicate indices")
    if len(idx) > cap:
        raise ValueError(f"support size {len(idx)} exceeds cap {cap}")
    cols = np.stack([gabor_vector(ctx, s, conv) for s in idx], axis=1) if idx else np.zeros((ctx.p, 0))
    G = cols.T @ cols.conj()
    return 0.5 * (G + G.conj().T)
