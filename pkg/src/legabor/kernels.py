"""Hot inner loops.

Each kernel exists twice: a numba ``@njit`` loop and a vectorized numpy twin
with the same signature and the same result up to rounding.  The dispatch
names at the bottom of the module pick one of the two at import time;
setting ``LEGABOR_NO_JIT=1`` in the environment (or running without numba
installed) selects the numpy twins.  The FFT-shaped kernels listed in
``FFT_BOUND`` use numpy under either setting.  ``IMPLS`` exposes both sides so tests
and the benchmark can drive them explicitly.

Conventions shared by every kernel: ``chi`` is the int8 Legendre table of
length p and ``roots[k] = exp(-2j*pi*k/p)``.
"""

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("LEGABOR_NO_JIT", "").strip().lower()
JIT_ENABLED = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------------------
# twisted autocorrelation rows:  T[m, n] = sum_k chi[k] chi[k+m] e^{-2 pi i k n / p}


@njit
def _twisted_rows_nb(chi, roots, m_lo, m_hi):
    p = chi.shape[0]
    out = np.empty((m_hi - m_lo, p), np.complex128)
    prod = np.empty(p, np.float64)
    for row in range(m_hi - m_lo):
        m = m_lo + row
        for k in range(p):
            prod[k] = chi[k] * chi[(k + m) % p]
        for n in range(p):
            re = 0.0
            im = 0.0
            idx = 0
            for k in range(p):
                w = prod[k]
                if w != 0.0:
                    r = roots[idx]
                    re += w * r.real
                    im += w * r.imag
                idx += n
                if idx >= p:
                    idx -= p
            out[row, n] = complex(re, im)
    return out


def _twisted_rows_np(chi, roots, m_lo, m_hi):
    p = chi.shape[0]
    c = chi.astype(np.float64)
    k = np.arange(p)
    m = np.arange(m_lo, m_hi)[:, None]
    prod = c[None, :] * c[(k[None, :] + m) % p]
    return np.fft.fft(prod, axis=1)


# ---------------------------------------------------------------------------
# sine-ratio sum:  sum over s in 1..p-1, s != -n of K(m1, s) K(m2, s + n)
# with K(L, t) = |sin(pi L t / p) / sin(pi t / p)|.


@njit
def _sine_sum_nb(p, n, m1, m2):
    total = 0.0
    comp = 0.0
    pi_p = math.pi / p
    for s in range(1, p):
        t = (s + n) % p
        if t == 0:
            continue
        a = abs(math.sin(pi_p * ((m1 * s) % p)) / math.sin(pi_p * s))
        b = abs(math.sin(pi_p * ((m2 * t) % p)) / math.sin(pi_p * t))
        x = a * b
        # Neumaier compensation
        y = total + x
        if abs(total) >= abs(x):
            comp += (total - y) + x
        else:
            comp += (x - y) + total
        total = y
    return total + comp


def _sine_sum_np(p, n, m1, m2):
    s = np.arange(1, p, dtype=np.int64)
    t = (s + n) % p
    s = s[t != 0]
    t = t[t != 0]
    pi_p = np.pi / p
    a = np.abs(np.sin(pi_p * ((m1 * s) % p)) / np.sin(pi_p * s))
    b = np.abs(np.sin(pi_p * ((m2 * t) % p)) / np.sin(pi_p * t))
    return math.fsum((a * b).tolist())


# ---------------------------------------------------------------------------
# lagged twisted sum:  sum_d w[d] sum_k chi[k + lag_d] chi[k] e^{+2 pi i k n / p}


@njit
def _lagged_twisted_sum_nb(chi, roots, lags, weights, n):
    p = chi.shape[0]
    re = 0.0
    im = 0.0
    for d in range(lags.shape[0]):
        lag = lags[d] % p
        sr = 0.0
        si = 0.0
        idx = 0
        for k in range(p):
            w = chi[(k + lag) % p] * chi[k]
            if w != 0:
                r = roots[idx]
                sr += w * r.real
                si -= w * r.imag
            idx += n
            if idx >= p:
                idx -= p
        wd = weights[d]
        re += wd.real * sr - wd.imag * si
        im += wd.real * si + wd.imag * sr
    return complex(re, im)


def _lagged_twisted_sum_np(chi, roots, lags, weights, n):
    p = chi.shape[0]
    c = chi.astype(np.float64)
    k = np.arange(p)
    twist = np.conj(roots[(k * n) % p])
    inner = (c[(k[None, :] + lags[:, None]) % p] * c[None, :]) @ twist
    return complex(np.dot(weights, inner))


# ---------------------------------------------------------------------------
# frame adjoint:  C[l, j] = scale * sum_k chi[k - l] r[k] e^{+2 pi i k j / p}


@njit
def _correlate_nb(chi, roots, r, scale):
    p = chi.shape[0]
    out = np.empty((p, p), np.complex128)
    y = np.empty(p, np.complex128)
    for l in range(p):
        for k in range(p):
            y[k] = chi[(k - l) % p] * r[k]
        for j in range(p):
            acc = 0.0 + 0.0j
            idx = 0
            for k in range(p):
                acc += y[k] * roots[idx].conjugate()
                idx += j
                if idx >= p:
                    idx -= p
            out[l, j] = scale * acc
    return out


def _correlate_np(chi, roots, r, scale):
    p = chi.shape[0]
    k = np.arange(p)
    circ = chi[(k[None, :] - k[:, None]) % p].astype(np.float64)
    return scale * p * np.fft.ifft(circ * r[None, :], axis=1)


# ---------------------------------------------------------------------------
# frame synthesis:  b[k] = scale * sum_{l,j} X[l, j] chi[k - l] e^{-2 pi i k j / p}


@njit
def _synthesize_nb(chi, roots, X, scale):
    # O(nnz * p): cheap for the sparse coefficient arrays of OMP and ISTA
    p = chi.shape[0]
    out = np.zeros(p, np.complex128)
    for l in range(p):
        for j in range(p):
            x = X[l, j]
            if x == 0:
                continue
            idx = 0
            for k in range(p):
                w = chi[(k - l) % p]
                if w != 0:
                    out[k] += w * x * roots[idx]
                idx += j
                if idx >= p:
                    idx -= p
    for k in range(p):
        out[k] *= scale
    return out


def _synthesize_np(chi, roots, X, scale):
    p = chi.shape[0]
    k = np.arange(p)
    circ = chi[(k[None, :] - k[:, None]) % p].astype(np.float64)
    F = np.fft.fft(X, axis=1)
    return scale * (circ * F).sum(axis=0)


# ---------------------------------------------------------------------------
# cyclic Jacobi for complex Hermitian matrices


@njit
def _jacobi_eigh_nb(A, tol, max_sweeps):
    n = A.shape[0]
    a = A.copy()
    v = np.eye(n, dtype=np.complex128)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += abs(a[i, j]) ** 2
    scale = max(1.0, math.sqrt(scale))
    sweeps = 0
    off = 0.0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += abs(a[i, j]) ** 2
        off = math.sqrt(2.0 * off)
        if off <= tol * scale or sweep == max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                ph = apq / mag
                # make a[p, q] real: column q *= conj(ph), row q *= ph
                for k in range(n):
                    a[k, q] *= ph.conjugate()
                    v[k, q] *= ph.conjugate()
                for k in range(n):
                    a[q, k] *= ph
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
    w = np.empty(n, np.float64)
    for i in range(n):
        w[i] = a[i, i].real
    return w, v, off, sweeps


def _jacobi_eigh_np(A, tol, max_sweeps):
    n = A.shape[0]
    a = np.array(A, dtype=np.complex128)
    v = np.eye(n, dtype=np.complex128)
    scale = max(1.0, float(np.linalg.norm(a)))
    iu = np.triu_indices(n, 1)
    sweeps = 0
    off = 0.0
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(2.0 * float(np.sum(np.abs(a[iu]) ** 2)))
        if off <= tol * scale or sweep == max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                ph = apq / mag
                a[:, q] *= np.conj(ph)
                v[:, q] *= np.conj(ph)
                a[q, :] *= ph
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp = a[:, p].copy()
                a[:, p] = c * colp - s * a[:, q]
                a[:, q] = s * colp + c * a[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
                rowp = a[p, :].copy()
                a[p, :] = c * rowp - s * a[q, :]
                a[q, :] = s * rowp + c * a[q, :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
    return a.diagonal().real.copy(), v, off, sweeps


IMPLS = {
    "numba": {
        "twisted_rows": _twisted_rows_nb,
        "sine_sum": _sine_sum_nb,
        "lagged_twisted_sum": _lagged_twisted_sum_nb,
        "correlate": _correlate_nb,
        "synthesize": _synthesize_nb,
        "jacobi_eigh": _jacobi_eigh_nb,
    },
    "numpy": {
        "twisted_rows": _twisted_rows_np,
        "sine_sum": _sine_sum_np,
        "lagged_twisted_sum": _lagged_twisted_sum_np,
        "correlate": _correlate_np,
        "synthesize": _synthesize_np,
        "jacobi_eigh": _jacobi_eigh_np,
    },
}

BACKEND = "numba" if JIT_ENABLED else "numpy"
# numba has no FFT, so its loops for the transform-bound kernels are O(p^3)
# against O(p^2 log p); those two always dispatch to the FFT twin and the
# loops stay in IMPLS as direct-sum references.
FFT_BOUND = ("twisted_rows", "correlate")
_active = {name: IMPLS["numpy" if name in FFT_BOUND else BACKEND][name] for name in IMPLS[BACKEND]}
# the numba synthesis loop costs O(nnz p); past about 8p nonzeros the FFT wins
SPARSE_SYNTH_FACTOR = 4


def _synthesize_dispatch(chi, roots, X, scale):
    if BACKEND == "numba" and np.count_nonzero(X) <= SPARSE_SYNTH_FACTOR * chi.shape[0]:
        return _synthesize_nb(chi, roots, X, scale)
    return _synthesize_np(chi, roots, X, scale)


_active["synthesize"] = _synthesize_dispatch

twisted_rows = _active["twisted_rows"]
sine_sum = _active["sine_sum"]
lagged_twisted_sum = _active["lagged_twisted_sum"]
correlate = _active["correlate"]
synthesize = _active["synthesize"]
jacobi_eigh = _active["jacobi_eigh"]
