"""Both kernel backends against direct sums and against each other."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from legabor import kernels
from legabor.kernels import IMPLS
from legabor.zpz import build_context

BACKENDS = sorted(IMPLS)


@pytest.fixture(params=BACKENDS)
def impl(request):
    return IMPLS[request.param]


def _ctx(p):
    ctx = build_context(p)
    return ctx, ctx.chi.astype(np.int64), np.exp(-2j * np.pi * np.arange(p) / p)


@pytest.mark.parametrize("p", [5, 13, 31])
def test_twisted_rows_direct(impl, p):
    ctx, chi, w = _ctx(p)
    T = impl["twisted_rows"](ctx.chi, ctx.roots, 0, p)
    k = np.arange(p)
    for m in range(p):
        for n in range(p):
            direct = np.sum(chi * chi[(k + m) % p] * w[(k * n) % p])
            assert abs(T[m, n] - direct) < 1e-10


def test_twisted_rows_partial_block(impl):
    ctx = build_context(23)
    full = impl["twisted_rows"](ctx.chi, ctx.roots, 0, 23)
    part = impl["twisted_rows"](ctx.chi, ctx.roots, 5, 11)
    np.testing.assert_allclose(part, full[5:11], atol=1e-12)


def _sine_direct(p, n, m1, m2):
    total = 0.0
    for s in range(1, p):
        if (s + n) % p == 0:
            continue
        a = abs(math.sin(math.pi * m1 * s / p) / math.sin(math.pi * s / p))
        b = abs(math.sin(math.pi * m2 * (s + n) / p) / math.sin(math.pi * (s + n) / p))
        total += a * b
    return total


@pytest.mark.parametrize("p,n,m1,m2", [(31, 7, 2, 4), (101, 40, 4, 8), (13, 1, 1, 1), (97, 96, 3, 9)])
def test_sine_sum_direct(impl, p, n, m1, m2):
    assert abs(impl["sine_sum"](p, n, m1, m2) - _sine_direct(p, n, m1, m2)) < 1e-9 * p


def test_lagged_twisted_sum_direct(impl):
    p = 29
    ctx, chi, w = _ctx(p)
    lags = np.array([0, 3, 7, 28], dtype=np.int64)
    weights = np.array([2.0, -1.0, 0.5, 3.0])
    k = np.arange(p)
    for n in (0, 1, 11):
        direct = sum(wd * np.sum(chi[(k + d) % p] * chi * np.conj(w[(k * n) % p]))
                     for d, wd in zip(lags, weights))
        got = impl["lagged_twisted_sum"](ctx.chi, ctx.roots, lags, weights, n)
        assert abs(got - direct) < 1e-10


def _dense_frame(p, scale):
    chi = build_context(p).chi.astype(float)
    k = np.arange(p)
    A = np.zeros((p, p * p), complex)
    for l in range(p):
        for j in range(p):
            A[:, l * p + j] = scale * chi[(k - l) % p] * np.exp(-2j * np.pi * k * j / p)
    return A


@pytest.mark.parametrize("p", [7, 17])
def test_correlate_and_synthesize_match_dense_frame(impl, p):
    ctx = build_context(p)
    scale = 1 / math.sqrt(p - 1)
    A = _dense_frame(p, scale)
    rng = np.random.default_rng(3)
    r = rng.normal(size=p) + 1j * rng.normal(size=p)
    X = rng.normal(size=(p, p)) + 1j * rng.normal(size=(p, p))
    np.testing.assert_allclose(impl["correlate"](ctx.chi, ctx.roots, r, scale).reshape(-1),
                               A.conj().T @ r, atol=1e-12)
    np.testing.assert_allclose(impl["synthesize"](ctx.chi, ctx.roots, X, scale),
                               A @ X.reshape(-1), atol=1e-11)


def _cubic_eigs(H):
    """Eigenvalues of a 3x3 Hermitian matrix by the trigonometric cubic formula."""
    q = np.trace(H).real / 3
    B = H - q * np.eye(3)
    pp = math.sqrt((np.sum(np.abs(B) ** 2)) / 6)
    if pp == 0:
        return [q, q, q]
    r = np.linalg.det(B / pp).real / 2
    phi = math.acos(min(1.0, max(-1.0, r))) / 3
    e1 = q + 2 * pp * math.cos(phi)
    e3 = q + 2 * pp * math.cos(phi + 2 * math.pi / 3)
    return sorted([e1, 3 * q - e1 - e3, e3])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=9, max_size=9))
def test_jacobi_3x3_matches_cubic(vals):
    a = np.array(vals)
    H = np.array([[a[0], a[1] + 1j * a[2], a[3] + 1j * a[4]],
                  [0, a[5], a[6] + 1j * a[7]],
                  [0, 0, a[8]]], complex)
    H = np.triu(H) + np.triu(H, 1).conj().T
    for name in BACKENDS:
        w, v, off, _ = IMPLS[name]["jacobi_eigh"](H, 1e-13, 60)
        # the trigonometric form loses ~sqrt(eps) near repeated roots
        np.testing.assert_allclose(sorted(w), _cubic_eigs(H), atol=1e-7 * max(1.0, np.abs(H).max()))
        np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, H, atol=1e-9)


def test_jacobi_unitary_eigenvectors(impl):
    rng = np.random.default_rng(11)
    M = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    H = M + M.conj().T
    w, v, off, sweeps = impl["jacobi_eigh"](H, 1e-13, 60)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(12), atol=1e-12)
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(H), atol=1e-10)
    assert off <= 1e-13 * np.linalg.norm(H)
    assert sweeps < 60


def test_backends_agree():
    ctx = build_context(61)
    a = IMPLS["numba"]["twisted_rows"](ctx.chi, ctx.roots, 0, 61)
    b = IMPLS["numpy"]["twisted_rows"](ctx.chi, ctx.roots, 0, 61)
    np.testing.assert_allclose(a, b, atol=1e-11)
    assert abs(IMPLS["numba"]["sine_sum"](1009, 253, 14, 28)
               - IMPLS["numpy"]["sine_sum"](1009, 253, 14, 28)) < 1e-9


def test_dispatch_names_follow_backend():
    assert kernels.BACKEND in IMPLS
    assert kernels.sine_sum is IMPLS[kernels.BACKEND]["sine_sum"]
    assert kernels.jacobi_eigh is IMPLS[kernels.BACKEND]["jacobi_eigh"]
    for name in kernels.FFT_BOUND:
        assert getattr(kernels, name) is IMPLS["numpy"][name]


@pytest.mark.parametrize("nnz", [3, 200])
def test_synthesize_dispatch(nnz):
    p = 37
    ctx = build_context(p)
    X = np.zeros(p * p, complex)
    X[np.random.default_rng(1).choice(p * p, nnz, replace=False)] = 1 - 2j
    X = X.reshape(p, p)
    np.testing.assert_allclose(kernels.synthesize(ctx.chi, ctx.roots, X, 1.0),
                               IMPLS["numpy"]["synthesize"](ctx.chi, ctx.roots, X, 1.0), atol=1e-11)


@pytest.mark.parametrize("density", [0.01, 1.0])
def test_synthesize_sparse_and_dense(impl, density):
    p = 23
    ctx = build_context(p)
    rng = np.random.default_rng(8)
    X = (rng.normal(size=(p, p)) + 1j * rng.normal(size=(p, p))) * (rng.random((p, p)) < density)
    ref = IMPLS["numpy"]["synthesize"](ctx.chi, ctx.roots, X, 0.5)
    np.testing.assert_allclose(impl["synthesize"](ctx.chi, ctx.roots, X, 0.5), ref, atol=1e-11)
