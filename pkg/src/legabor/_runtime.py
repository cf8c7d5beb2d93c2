"""Seed derivation and order-preserving fan-out shared by the experiment drivers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

DEFAULT_SEED = 20_170_923

T = TypeVar("T")
R = TypeVar("R")


def derive_rng(seed: int, *counters: int) -> np.random.Generator:
    """Generator for task ``counters`` under master ``seed``.

    The (seed, counters...) tuple is hashed by numpy's SeedSequence, so a
    task's stream depends only on its coordinates, never on scheduling.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, counters)]))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
