"""Arithmetic in Z/pZ: primality, the Legendre character and root tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Deterministic for every n < 3.3e24, which covers all 64-bit inputs.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

MAX_TABLE_PRIME = 50_000_000


def is_prime(m: int) -> bool:
    """Deterministic Miller-Rabin primality test for 64-bit integers."""
    m = int(m)
    if m < 0:
        raise ValueError(f"is_prime expects a nonnegative integer, got {m}")
    if m < 2:
        return False
    for q in _MR_WITNESSES:
        if m % q == 0:
            return m == q
    d = m - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, m)
        if x == 1 or x == m - 1:
            continue
        for _ in range(r - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def primes_between(lo: int, hi: int) -> list[int]:
    """All primes in the closed range [lo, hi]."""
    return [q for q in range(max(lo, 2), hi + 1) if is_prime(q)]


def next_prime(m: int) -> int:
    q = max(int(m), 2)
    while not is_prime(q):
        q += 1
    return q


def _check_odd_prime(p: int) -> int:
    p = int(p)
    if p < 3 or not is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")
    return p


def legendre_symbol(k: int, p: int) -> int:
    """(k/p) via Euler's criterion; 0 when p divides k."""
    p = _check_odd_prime(p)
    k %= p
    if k == 0:
        return 0
    return 1 if pow(k, (p - 1) // 2, p) == 1 else -1


@dataclass(frozen=True, eq=False)
class FieldContext:
    """Precomputed tables for one odd prime p.

    ``chi[k]`` is the Legendre symbol stored as int8, ``roots[k]`` is
    ``exp(-2j*pi*k/p)``.  Instances are immutable and shared freely.
    """

    p: int
    chi: np.ndarray = field(repr=False)
    roots: np.ndarray = field(repr=False)

    @property
    def gauss(self) -> complex:
        return gauss_sum(self)

    @property
    def epsilon(self) -> complex:
        """Unimodular factor G / sqrt(p): 1 for p = 1 mod 4, i for p = 3 mod 4."""
        return gauss_sum(self) / math.sqrt(self.p)


def build_context(p: int, max_prime: int = MAX_TABLE_PRIME) -> FieldContext:
    p = _check_odd_prime(p)
    if p > max_prime:
        raise ValueError(f"p={p} exceeds the table budget ({max_prime})")
    chi = np.full(p, -1, dtype=np.int8)
    k = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
    chi[(k * k) % p] = 1
    chi[0] = 0
    # angle per index, never by repeated multiplication
    roots = np.exp(-2j * np.pi * np.arange(p, dtype=np.float64) / p)
    chi.setflags(write=False)
    roots.setflags(write=False)
    return FieldContext(p=p, chi=chi, roots=roots)


def gauss_sum(ctx: FieldContext) -> complex:
    """G = sum_k chi[k] e^{+2 pi i k / p}, summed with exact rounding per component."""
    c = ctx.chi.astype(np.float64)
    w = np.conj(ctx.roots)
    return complex(math.fsum((c * w.real).tolist()), math.fsum((c * w.imag).tolist()))
