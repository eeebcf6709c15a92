"""Discrete Fourier machinery for two-variable probability series.

A probability grid S over {0..n-1}^2 is synthesised on the unit torus by

    B[u][v] = sum_{l,m} S[l][m] exp(+2*pi*i*(u*l + v*m)/n)  = (psi S psi^T)[u][v]

with the unnormalised basis psi[j][k] = exp(2*pi*i*j*k/n), and recovered by the
inverse transform

    S[l][m] = (1/n^2) sum_{u,v} B[u][v] exp(-2*pi*i*(l*u + m*v)/n).

Both directions are evaluated with numpy's FFT (radix-agnostic, O(n^2 log n)),
which matches the sums above exactly: numpy's forward FFT carries the e^{-}
kernel and no normalisation, its inverse the e^{+} kernel and 1/n per axis.
"""

from __future__ import annotations

import numpy as np


def unitary_dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix F[j][k] = exp(2*pi*i*j*k/n) / sqrt(n)."""
    if n < 1:
        raise ValueError(f"matrix order must be >= 1, got {n}")
    jk = np.outer(np.arange(n), np.arange(n))
    return np.exp(2j * np.pi * jk / n) / np.sqrt(n)


def series_basis(n: int) -> np.ndarray:
    """Unnormalised synthesis basis psi[j][k] = exp(2*pi*i*j*k/n).

    psi @ S @ psi.T evaluates the double series of S at all n^2 points of
    the uniform unit-circle product grid. psi = sqrt(n) * unitary_dft_matrix(n),
    and its rows are orthogonal: psi @ psi.conj().T = n * I.
    """
    if n < 1:
        raise ValueError(f"basis order must be >= 1, got {n}")
    jk = np.outer(np.arange(n), np.arange(n))
    return np.exp(2j * np.pi * jk / n)


def partial_rows(basis: np.ndarray, indices) -> np.ndarray:
    """Select rows of a square basis matrix by index, preserving order."""
    basis = np.asarray(basis)
    if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
        raise ValueError(f"basis must be square, got shape {basis.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("indices must be a non-empty 1-d sequence")
    n = basis.shape[0]
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError(f"indices must lie in [0, {n}), got range "
                         f"[{idx.min()}, {idx.max()}]")
    return basis[idx, :]


def basis_rows(n: int, indices) -> np.ndarray:
    """Rows of series_basis(n) built directly, without the full n x n matrix.

    Equivalent to partial_rows(series_basis(n), indices); preferred for large n.
    """
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("indices must be a non-empty 1-d sequence")
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError(f"indices must lie in [0, {n})")
    return np.exp(2j * np.pi * np.outer(idx, np.arange(n)) / n)


def series_transform(coeffs: np.ndarray) -> np.ndarray:
    """Synthesise grid values B = psi @ coeffs @ psi.T on the torus grid.

    B[u][v] = sum_{l,m} coeffs[l][m] e^{+2 pi i (u l + v m)/n}.
    """
    c = _require_square(coeffs)
    n = c.shape[0]
    return n * n * np.fft.ifft2(c)


def inverse_series_transform(grid: np.ndarray) -> np.ndarray:
    """Recover series coefficients from torus grid values.

    T[l][m] = (1/n^2) sum_{u,v} grid[u][v] e^{-2 pi i (l u + m v)/n}; exact
    inverse of series_transform up to roundoff.
    """
    g = _require_square(grid)
    n = g.shape[0]
    return np.fft.fft2(g) / (n * n)


def _require_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("grid contains non-finite entries")
    return a
