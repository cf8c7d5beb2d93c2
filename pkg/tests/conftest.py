import math

import pytest

from legabor.zpz import build_context

SMALL_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31]


def trial_division(m):
    if m < 2:
        return False
    return all(m % d for d in range(2, math.isqrt(m) + 1))


def squares_chi(p):
    """chi by enumerating the nonzero squares."""
    sq = {(x * x) % p for x in range(1, p)}
    return [0] + [1 if a in sq else -1 for a in range(1, p)]


def direct_twisted(p, m, n):
    chi = squares_chi(p)
    return sum(chi[k] * chi[(k + m) % p] * complex(math.cos(-2 * math.pi * k * n / p),
                                                   math.sin(-2 * math.pi * k * n / p))
               for k in range(p))


@pytest.fixture(scope="session")
def ctx_cache():
    cache = {}

    def get(p):
        if p not in cache:
            cache[p] = build_context(p)
        return cache[p]
    return get


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
