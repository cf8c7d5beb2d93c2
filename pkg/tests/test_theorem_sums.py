import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from legabor._runtime import derive_rng
from legabor.theorem_sums import (
    ConsecutiveBlock,
    IntervalGrid,
    ThetaParams,
    _residual_from,
    dirichlet_kernel_mag,
    fixed_k_double_sum,
    gabor_triple_sum,
    log_spaced_primes,
    main_term_residual,
    piecewise_bound_sum,
    piecewise_terms,
    scaling_fit,
    sine_sum_exact,
    sine_sum_sweep,
    singular_region_sums,
    sum_split_decompose,
    trivial_bound,
)
from legabor.zpz import build_context, is_prime, primes_between

from conftest import squares_chi


def _e(x):
    return cmath.exp(2j * math.pi * x)


def test_kernel_examples():
    assert dirichlet_kernel_mag(7, 1, 3) == pytest.approx(1.0, abs=1e-15)
    assert dirichlet_kernel_mag(7, 5, 0) == 5.0
    assert dirichlet_kernel_mag(7, ConsecutiveBlock(4, 5), 14) == 5.0
    direct = abs(1 + _e(1 / 7) + _e(2 / 7))
    assert dirichlet_kernel_mag(7, ConsecutiveBlock(2, 3), 1) == pytest.approx(direct, abs=1e-12)
    assert direct == pytest.approx(2.24698, abs=1e-5)


@pytest.mark.parametrize("p", [7, 23, 53])
def test_kernel_identity(p):
    t = np.arange(p)
    for length in range(1, p + 1):
        direct = np.abs(np.exp(2j * np.pi * np.outer(np.arange(length), t) / p).sum(axis=0))
        got = np.array([dirichlet_kernel_mag(p, length, s) for s in range(p)])
        assert np.abs(got - direct).max() <= 1e-9 * length


def test_block_members():
    assert ConsecutiveBlock(5, 4).members(7).tolist() == [5, 6, 0, 1]
    with pytest.raises(ValueError):
        ConsecutiveBlock(0, 0)
    with pytest.raises(ValueError):
        ConsecutiveBlock(0, 8).members(7)


def _direct_sine_sum(p, n, m1, m2):
    total = 0.0
    for s in range(1, p):
        if (s + n) % p == 0:
            continue
        a = abs(sum(_e(m * s / p) for m in range(m1)))
        b = abs(sum(_e(m * (s + n) / p) for m in range(m2)))
        total += a * b
    return total


def test_sine_sum_direct_oracle():
    params = ThetaParams(101, 32, 4, 8)
    assert sine_sum_exact(params) == pytest.approx(_direct_sine_sum(101, 32, 4, 8), rel=1e-9)


@pytest.mark.parametrize("p", [7, 101, 10007])
def test_sine_sum_degenerate(p):
    assert abs(sine_sum_exact(ThetaParams(p, 3, 1, 1)) - (p - 2)) <= 1e-9 * p


def test_trivial_bound_examples():
    assert trivial_bound(ThetaParams(101, 5, 4, 9)) == 606
    assert trivial_bound(ThetaParams(101, 5, 1, 1)) == 101
    root = math.isqrt(10007)
    assert trivial_bound(ThetaParams(10007, 5, root, root)) == pytest.approx(10007 ** 1.5, rel=1e-2)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 10_000), st.data())
def test_trivial_bound_dominates(lo, data):
    p = next(q for q in range(lo, lo + 200) if is_prime(q) and q > 2)
    n = data.draw(st.integers(0, p - 1))
    m1 = data.draw(st.integers(1, p))
    m2 = data.draw(st.integers(1, p))
    params = ThetaParams(p, n, m1, m2)
    assert sine_sum_exact(params) <= trivial_bound(params) * (1 + 1e-12)


def test_theta_params_validation():
    with pytest.raises(ValueError):
        ThetaParams(101, 5, 4, 8, sigma=0.3, delta=0.1)
    with pytest.raises(ValueError):
        ThetaParams(100, 5, 4, 8)
    with pytest.raises(ValueError):
        ThetaParams(101, 5, 0, 8)
    assert ThetaParams(101, 205, 4, 8).n == 3
    assert ThetaParams(101, 5, 4, 8).alpha == pytest.approx(0.2)


@pytest.mark.parametrize("p", [1009, 4999, 100_003])
def test_realize_theorem_mode(p):
    params = ThetaParams.realize(p, 0.1, 0.3, 0.1, mode="theorem")
    assert params.theorem_violations() == []
    assert params.m1len % 2 == 0 and (params.m2len // params.m1len) % 2 == 0
    assert params.m2len <= math.isqrt(p)


def test_realize_free_mode_falls_back():
    params = ThetaParams.realize(1009, 0.0, 0.2, 0.1, mode="free")
    assert params.m1len == params.m2len
    with pytest.raises(ValueError):
        ThetaParams.realize(1009, 0.0, 0.2, 0.1, mode="theorem")


def _naive_triple(p, n, b1, b2):
    chi = squares_chi(p)
    total = 0j
    for k in range(p):
        for m1 in b1.members(p).tolist():
            for m2 in b2.members(p).tolist():
                total += chi[(k + m1 - m2) % p] * chi[k] * _e(k * n / p) * _e(-m2 * n / p)
    return total


def test_triple_sum_example():
    p = 31
    params = ThetaParams(p, 7, 2, 4)
    b1, b2 = ConsecutiveBlock(3, 2), ConsecutiveBlock(11, 4)
    got = gabor_triple_sum(build_context(p), params, b1, b2)
    assert abs(got - _naive_triple(p, 7, b1, b2)) <= 1e-8 * max(1.0, abs(got))


@pytest.mark.parametrize("p", [31, 61, 101])
def test_triple_sum_random_configs(p):
    ctx = build_context(p)
    rng = derive_rng(17, p)
    for _ in range(8):
        m1, m2 = sorted(int(x) for x in rng.integers(1, math.isqrt(p) + 1, size=2))
        params = ThetaParams(p, int(rng.integers(1, p)), m1, m2)
        b1 = ConsecutiveBlock(int(rng.integers(p)), m1)
        b2 = ConsecutiveBlock(int(rng.integers(p)), m2)
        got = gabor_triple_sum(ctx, params, b1, b2)
        assert abs(got - _naive_triple(p, params.n, b1, b2)) <= 1e-8 * max(1.0, abs(got))
        assert abs(got) <= sine_sum_exact(params) + 1e-6 * p


def test_triple_sum_full_blocks_vanish():
    p = 29
    params = ThetaParams(p, 4, p, p)
    got = gabor_triple_sum(build_context(p), params, ConsecutiveBlock(0, p), ConsecutiveBlock(5, p))
    assert abs(got) < 1e-8


def test_triple_sum_length_mismatch():
    with pytest.raises(ValueError):
        gabor_triple_sum(build_context(31), ThetaParams(31, 7, 2, 4),
                         ConsecutiveBlock(0, 3), ConsecutiveBlock(0, 4))


def test_fixed_k_double_sum():
    p = 31
    ctx = build_context(p)
    chi = squares_chi(p)
    params = ThetaParams(p, 9, 3, 5)
    b1, b2 = ConsecutiveBlock(2, 3), ConsecutiveBlock(20, 5)
    for k in (0, 7, 30):
        naive = sum(chi[(k + m1 - m2) % p] * _e(m2 * 9 / p)
                    for m1 in b1.members(p).tolist() for m2 in b2.members(p).tolist())
        assert abs(fixed_k_double_sum(ctx, params, k, b1, b2) - naive) < 1e-10
    one = ThetaParams(p, 9, 1, 1)
    for k in range(p):
        v = abs(fixed_k_double_sum(ctx, one, k, ConsecutiveBlock(0, 1), ConsecutiveBlock(4, 1)))
        assert min(abs(v), abs(v - 1)) < 1e-12
    ctx = build_context(101)
    params = ThetaParams(101, 40, 6, 9)
    worst = max(abs(fixed_k_double_sum(ctx, params, k, ConsecutiveBlock(1, 6), ConsecutiveBlock(50, 9)))
                for k in range(101))
    assert worst <= 54


def _sine_ratio(p, m, t):
    t = np.asarray(t) % p
    return np.abs(np.sin(np.pi * m * t / p) / np.sin(np.pi * t / p))


@pytest.mark.parametrize("p", [31, 61, 101])
def test_piecewise_pi_dominates_pointwise(p):
    rng = derive_rng(2, p)
    for _ in range(10):
        m1, m2 = (int(x) for x in rng.integers(2, math.isqrt(p) + 1, size=2))
        params = ThetaParams(p, int(rng.integers(1, p)), m1, m2)
        s = np.array([x for x in range(1, p) if (x + params.n) % p])
        sines = _sine_ratio(p, m1, s) * _sine_ratio(p, m2, s + params.n)
        assert np.all(piecewise_terms(params, s) >= sines * (1 - 1e-12))
        assert sine_sum_exact(params) <= piecewise_bound_sum(params)


def test_piecewise_constant_scaling_and_periodicity():
    params = ThetaParams(101, 40, 4, 8)
    assert piecewise_bound_sum(params, math.pi) == pytest.approx(
        (math.pi / 2) ** 2 * piecewise_bound_sum(params, 2.0), rel=1e-12)
    s = np.array([3, 17, 55])
    np.testing.assert_allclose(piecewise_terms(params, s), piecewise_terms(params, s + 101))
    assert np.all(piecewise_terms(params, s) >= 0)
    with pytest.raises(ValueError):
        piecewise_bound_sum(ThetaParams(101, 40, 1, 8))


def test_grid_tiles_and_J_sizes():
    for p, n, m1, m2 in [(1009, 253, 14, 28), (4999, 1000, 20, 60), (1013, -254, 8, 24)]:
        grid = IntervalGrid(p, n, m1, m2)
        lo, hi = math.floor(m2 / m1), math.ceil(m2 / m1)
        for i in range(-m1, m1):
            assert len(grid.J(i)) in (lo, hi)
            for j in grid.J(i):
                a, b = grid.x_interval(i)
                assert a <= grid.ytilde(j) < b
                assert grid.x_of_y(j) == i
        s = np.arange(-p, p)
        i = grid.x_index(s)
        a = p * i / m1
        assert np.all((a <= s) & (s < a + p / m1))
        for j in range(-3, 4):
            mem = grid.y_members(j)
            assert np.all(grid.y_index(mem) == j)
        assert grid.t == pytest.approx(grid.n * m2 / p)


@pytest.fixture(scope="module")
def dec1009():
    params = ThetaParams.realize(1009, 0.1, 0.3, 0.1, mode="theorem")
    return params, sum_split_decompose(params)


def test_decomposition_partition(dec1009):
    params, dec = dec1009
    p = params.p
    admissible = {s for s in range(p) if s != 0 and (s + params.n) % p}
    assert dec.regions["e1"].isdisjoint(dec.regions["main"])
    assert dec.regions["e1"] | dec.regions["main"] == admissible
    assert dec.regions["e2"] <= dec.regions["main"] and dec.regions["e3"] <= dec.regions["e2"]
    assert {1, p - 1} <= dec.regions["e1"]


def test_decomposition_regression(dec1009):
    # values frozen from a reviewed run at p = 1009, n = 253, lengths 14 and 28
    params, dec = dec1009
    assert (params.n, params.m1len, params.m2len) == (253, 14, 28)
    for got, want in [(dec.e1, 6036.1617432550047), (dec.s_main, -3785.836748658387),
                      (dec.e2, 2462.1262508113264), (dec.e3, 6197.5044735721303),
                      (dec.total_bound, 17776.851608936518)]:
        assert got == pytest.approx(want, rel=1e-9)
    assert dec.discrepancy == pytest.approx(dec.total_bound - dec.e1 - dec.s_main - dec.e2 - dec.e3)
    assert all(math.isfinite(r[2]) for r in dec.residuals) and dec.residuals


def test_decomposition_total_bound_uses_c():
    params = ThetaParams.realize(1009, 0.1, 0.3, 0.1, mode="theorem")
    dec = sum_split_decompose(params, c=math.pi, with_residuals=False)
    assert dec.total_bound == pytest.approx(piecewise_bound_sum(params), rel=1e-12)
    assert dec.residuals == []


def test_decomposition_rejects():
    params = ThetaParams(1009, 253, 14, 28, epsilon=0.25)
    with pytest.raises(ValueError):
        sum_split_decompose(params)
    with pytest.raises(ValueError):
        sum_split_decompose(ThetaParams(1009, 253, 15, 28))


def test_main_term_residual_definition(dec1009):
    params, _ = dec1009
    p, n, m1, m2 = params.p, params.n, params.m1len, params.m2len
    grid = IntervalGrid.from_params(params)
    j = 7
    i = grid.x_of_y(j)
    yt = p * j / m2 - n
    s = [x for x in range(math.ceil(yt), math.ceil(p * (j + 1) / m2 - n)) if x and x + n]
    direct = math.fsum((4 * p * p / math.pi ** 2) * (m1 * x / p - i) * (m2 * (x + n) / p - j) / (x * (x + n))
                       for x in s)
    closed = (-2 * p ** 3 * i / (math.pi ** 2 * m2 * yt ** 2) + 2 * n * p ** 2 * i / (math.pi ** 2 * yt ** 2 * j)
              + 2 * p * m1 / (math.pi ** 2 * j))
    assert main_term_residual(params, i, j) == pytest.approx(direct - closed, rel=1e-9)
    # an empty interval contributes nothing, leaving minus the closed form
    assert _residual_from(params, i, j, np.zeros(0, np.int64)) == pytest.approx(-closed, rel=1e-12)
    with pytest.raises(ValueError):
        main_term_residual(params, 0, 0)


def _theorem_primes(lo, hi, count, sigma=0.1, delta=0.3):
    out = []
    for q in log_spaced_primes(lo, hi, count):
        try:
            out.append(ThetaParams.realize(q, sigma, delta, 0.1, mode="theorem"))
        except ValueError:
            pass
    return out


def test_residual_growth_exponent():
    points = []
    for params in _theorem_primes(1000, 200_000, 16):
        dec = sum_split_decompose(params)
        points.append((params.p, math.fsum(abs(r[2]) for r in dec.residuals)))
    assert len(points) >= 5
    fit = scaling_fit(points)
    assert fit.exponent <= 1.5 - 0.2 + 0.15


def test_singular_regions():
    params = ThetaParams.realize(10007, 0.1, 0.3, 0.1)
    nz, nn = singular_region_sums(params)
    s1 = dirichlet_kernel_mag(params.p, params.m1len, 1) * dirichlet_kernel_mag(params.p, params.m2len, 1 + params.n)
    assert nz >= s1 >= 0
    assert nz + nn <= sine_sum_exact(params) * (1 + 1e-12) + 1e-9
    _, wider = singular_region_sums(params, k_intervals=3)
    assert wider >= nn
    with pytest.raises(ValueError):
        singular_region_sums(params, 0)


def test_scaling_fit_exact_power_law():
    pts = [(q, 7 * q ** 1.3) for q in primes_between(100, 200)[:8]]
    fit = scaling_fit(pts)
    assert fit.exponent == pytest.approx(1.3, abs=1e-10)
    assert fit.logK == pytest.approx(math.log(7), abs=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-10)
    assert fit.K == pytest.approx(7, rel=1e-9)


@pytest.mark.parametrize("pts", [[(101, 1.0)], [(q, 1.0) for q in (3, 5, 7, 11)],
                                 [(3, 1.0), (5, 1.0), (7, 0.0), (11, 1.0), (13, 1.0)],
                                 [(3, 1.0), (3, 2.0), (7, 1.0), (11, 1.0), (13, 1.0)]])
def test_scaling_fit_rejects(pts):
    with pytest.raises(ValueError):
        scaling_fit(pts)


def test_log_spaced_primes():
    qs = log_spaced_primes(1000, 300_000, 20)
    assert 15 <= len(qs) <= 20
    assert all(is_prime(q) and 1000 <= q <= 300_000 for q in qs)
    assert qs == sorted(qs)


@pytest.mark.parametrize("sigma,delta", [(0.1, 0.3), (0.05, 0.25), (0.0, 0.2)])
def test_sine_sum_growth(sigma, delta):
    rows = sine_sum_sweep(log_spaced_primes(1000, 300_000, 20), sigma, delta)
    fit = scaling_fit((r.params.p, r.sine_sum) for r in rows)
    alpha = sigma + (delta - sigma) / 2
    assert fit.exponent <= 1.5 - alpha + 0.10
    assert fit.r2 >= 0.9
    assert all(r.ratio <= 1 for r in rows)
