import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from legabor.gabor import (
    NormConvention,
    TimeFreqIndex,
    coherence,
    column_scale,
    frame_matrix,
    gabor_vector,
    gram_submatrix,
    inner_product,
    shift_class_table,
)
from legabor.zpz import build_context

from conftest import squares_chi


def _naive_vector(p, l, j, c):
    chi = squares_chi(p)
    return np.array([c * chi[(k - l) % p] * complex(math.cos(2 * math.pi * k * j / p),
                                                    -math.sin(2 * math.pi * k * j / p))
                     for k in range(p)])


@pytest.mark.parametrize("conv", list(NormConvention))
def test_vector_matches_definition(conv):
    p = 11
    ctx = build_context(p)
    c = column_scale(p, conv)
    for l, j in [(0, 0), (3, 5), (10, 10)]:
        np.testing.assert_allclose(gabor_vector(ctx, (l, j), conv), _naive_vector(p, l, j, c), atol=1e-14)


@pytest.mark.parametrize("p", [5, 13, 29])
def test_column_norms(p):
    ctx = build_context(p)
    for idx in [(0, 0), (p - 1, 2)]:
        u = gabor_vector(ctx, idx, "paper")
        assert abs(inner_product(u, u) - (p - 1) / p) < 1e-14
        u = gabor_vector(ctx, idx, "unit")
        assert abs(inner_product(u, u) - 1) < 1e-14


@pytest.mark.parametrize("conv,norm_sq", [("paper", lambda p: p - 1), ("unit", lambda p: p)])
def test_tight_frame(conv, norm_sq):
    p = 13
    A = frame_matrix(build_context(p), conv)
    assert A.shape == (p, p * p)
    np.testing.assert_allclose(A @ A.conj().T, norm_sq(p) * np.eye(p), atol=1e-11)


def test_frame_column_order():
    ctx = build_context(7)
    A = frame_matrix(ctx)
    np.testing.assert_allclose(A[:, 3 * 7 + 4], gabor_vector(ctx, (3, 4)))


def test_inner_product_conjugates_second_argument():
    u = np.array([1j, 0])
    v = np.array([1, 1j])
    assert inner_product(u, v) == 1j
    with pytest.raises(ValueError):
        inner_product(u, np.ones(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 16), st.integers(0, 16), st.integers(0, 16), st.integers(0, 16))
def test_shift_class_reduction(l1, j1, l2, j2):
    p = 17
    ctx = build_context(p)
    table = shift_class_table(ctx)
    ip = inner_product(gabor_vector(ctx, (l1, j1)), gabor_vector(ctx, (l2, j2)))
    assert abs(abs(ip) - table[(l1 - l2) % p, (j1 - j2) % p] / p) < 1e-12


@pytest.mark.parametrize("p", [5, 7, 11, 13])
@pytest.mark.parametrize("conv", ["paper", "unit"])
def test_coherence_shift_class_equals_brute(p, conv):
    ctx = build_context(p)
    assert abs(coherence(ctx, conv) - coherence(ctx, conv, mode="brute")) <= 1e-10


def test_coherence_streaming_blocks_agree():
    ctx = build_context(61)
    assert coherence(ctx, block_rows=7) == coherence(ctx)


@pytest.mark.parametrize("p", [3, 31, 53, 101, 211])
def test_coherence_below_weil(p):
    assert coherence(build_context(p)) <= 2 / math.sqrt(p) + 1e-12


def test_coherence_errors():
    ctx = build_context(37)
    with pytest.raises(ValueError):
        coherence(ctx, mode="brute")
    with pytest.raises(ValueError):
        coherence(ctx, mode="nope")


@pytest.mark.parametrize("conv", ["paper", "unit"])
def test_gram_properties(conv):
    p = 19
    ctx = build_context(p)
    support = [(0, 0), (1, 3), (5, 5), (18, 2)]
    G = gram_submatrix(ctx, support, conv)
    np.testing.assert_allclose(G, G.conj().T)
    cols = [gabor_vector(ctx, s, conv) for s in support]
    for a in range(4):
        for b in range(4):
            assert abs(G[a, b] - inner_product(cols[a], cols[b])) < 1e-13
    assert np.linalg.eigvalsh(G).min() >= -1e-12


def test_gram_singleton_sqrt_p_scaling():
    p = 23
    G = gram_submatrix(build_context(p), [(4, 7)], "paper")
    assert abs(G[0, 0] - (p - 1) / p) < 1e-14


def test_gram_rejects_duplicates_and_cap():
    ctx = build_context(7)
    with pytest.raises(ValueError):
        gram_submatrix(ctx, [(1, 1), (1, 1)])
    with pytest.raises(ValueError):
        gram_submatrix(ctx, [(l, j) for l in range(7) for j in range(3)], cap=20)
    with pytest.raises(ValueError):
        gabor_vector(ctx, (7, 0))


def test_norm_convention_parse():
    assert NormConvention.parse("UNIT") is NormConvention.UNIT
    assert NormConvention.parse(NormConvention.PAPER) is NormConvention.PAPER
    with pytest.raises(ValueError):
        NormConvention.parse("half")
    assert TimeFreqIndex(1, 2).j == 2


def test_worked_values():
    ctx3 = build_context(3)
    np.testing.assert_allclose(gabor_vector(ctx3, (0, 0)), np.array([0, 1, -1]) / math.sqrt(3))
    u = gabor_vector(ctx3, (0, 0))
    assert abs(inner_product(u, u) - 2 / 3) < 1e-15
    ctx5 = build_context(5)
    same_l = inner_product(gabor_vector(ctx5, (0, 0)), gabor_vector(ctx5, (0, 1)))
    assert abs(abs(same_l) - 1 / 5) < 1e-14
    assert abs(abs(gram_submatrix(ctx5, [(0, 0), (0, 1)])[0, 1]) - 1 / 5) < 1e-14
    ctx7 = build_context(7)
    chi = squares_chi(7)
    expect = sum(chi[k] * chi[(k - 1) % 7] for k in range(7)) / 7
    assert abs(inner_product(gabor_vector(ctx7, (0, 0)), gabor_vector(ctx7, (1, 0))) - expect) < 1e-14
    np.testing.assert_allclose(gram_submatrix(ctx7, [(2, 3)], "unit"), [[1.0]], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_inner_product_conjugate_symmetric(seed_a, seed_b):
    ctx = build_context(11)
    ra, rb = np.random.default_rng(seed_a), np.random.default_rng(seed_b)
    u = gabor_vector(ctx, tuple(ra.integers(11, size=2)))
    v = gabor_vector(ctx, tuple(rb.integers(11, size=2)))
    assert inner_product(u, v) == pytest.approx(np.conj(inner_product(v, u)), abs=1e-15)


@pytest.mark.parametrize("p", [5, 7, 11])
def test_frame_energy_constant_on_sphere(p):
    A = frame_matrix(build_context(p))
    rng = np.random.default_rng(p)
    energies = []
    for _ in range(20):
        x = rng.normal(size=p) + 1j * rng.normal(size=p)
        x /= np.linalg.norm(x)
        energies.append(float(np.sum(np.abs(A.conj().T @ x) ** 2)))
    assert (max(energies) - min(energies)) / max(energies) <= 1e-8
