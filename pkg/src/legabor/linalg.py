"""Small Hermitian eigenproblems by cyclic Jacobi rotations."""

from __future__ import annotations

import numpy as np

from . import kernels

MAX_DIM = 256


def _check_hermitian(G, tol: float = 1e-10) -> np.ndarray:
    G = np.asarray(G, dtype=np.complex128)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {G.shape}")
    if G.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {G.shape[0]} exceeds {MAX_DIM}")
    scale = max(1.0, float(np.abs(G).max(initial=0.0)))
    if G.size and float(np.abs(G - G.conj().T).max()) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    return G


def hermitian_eigh(G, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    G = _check_hermitian(G)
    if G.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), np.complex128)
    w, v, off, _ = kernels.jacobi_eigh(np.ascontiguousarray(G), tol, max_sweeps)
    if off > tol * max(1.0, float(np.linalg.norm(G))):
        raise RuntimeError(f"Jacobi sweeps did not converge (off-diagonal norm {off:.3e})")
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_extreme_eigenvalues(G) -> tuple[float, float]:
    w, _ = hermitian_eigh(G)
    if w.size == 0:
        raise ValueError("empty matrix has no eigenvalues")
    return float(w[0]), float(w[-1])


def hermitian_solve(G, rhs, rcond: float = 1e-12) -> np.ndarray:
    """Minimum-norm solution of G x = rhs through the eigendecomposition."""
    w, v = hermitian_eigh(G)
    cutoff = rcond * max(1.0, float(np.abs(w).max(initial=0.0)))
    inv = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0, 1.0, w), 0.0)
    return v @ (inv * (v.conj().T @ np.asarray(rhs, dtype=np.complex128)))
