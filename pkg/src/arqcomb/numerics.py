"""Complex linear-algebra kernels shared by the receiver chain.

Block vectors are stored as 2-D arrays of shape ``(num_blocks, block_size)``:
row ``i`` holds the ``i``-th channel use (time domain) or frequency bin across
antennas.  The block DFT acts along the block axis and leaves the within-block
dimension untouched, so a length-``T*N`` vector with ``T`` blocks of size ``N``
transforms each antenna's length-``T`` sequence independently.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularMatrixError",
    "dft_block",
    "idft_block",
    "channel_frequency_response",
    "hermitian_inverse",
    "numerical_rank",
]


class SingularMatrixError(ValueError):
    """A matrix that must be positive definite failed the pivot test."""


def _as_blocks(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 2:
        raise ValueError(
            f"expected a (num_blocks, block_size) array, got shape {v.shape}"
        )
    return v


def dft_block(v: np.ndarray) -> np.ndarray:
    """Unitary DFT across the block axis of a ``(num_blocks, block_size)`` array."""
    return np.fft.fft(_as_blocks(v), axis=0, norm="ortho")


def idft_block(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft_block` (conjugate-transpose transform)."""
    return np.fft.ifft(_as_blocks(v), axis=0, norm="ortho")


def channel_frequency_response(taps: np.ndarray, num_bins: int) -> np.ndarray:
    """Per-bin frequency response of a multipath MIMO channel.

    Parameters
    ----------
    taps : (L, n_rx, n_tx) array
        Time-domain tap matrices.
    num_bins : int
        Block length ``T``.  Must satisfy ``L <= T`` so the circular model
        (cyclic prefix at least as long as the channel memory) holds.

    Returns
    -------
    (T, n_rx, n_tx) array where bin ``i`` equals
    ``sum_l taps[l] * exp(-2j*pi*i*l / T)``.
    """
    taps = np.asarray(taps, dtype=complex)
    if taps.ndim != 3:
        raise ValueError(f"expected (L, n_rx, n_tx) taps, got shape {taps.shape}")
    if taps.shape[0] > num_bins:
        raise ValueError(
            f"channel memory {taps.shape[0]} exceeds block length {num_bins}; "
            "the circular (cyclic-prefix) model does not apply"
        )
    return np.fft.fft(taps, n=num_bins, axis=0)


def hermitian_inverse(a: np.ndarray, pivot_rtol: float = 1e-14) -> np.ndarray:
    """Invert a Hermitian positive-definite matrix via Cholesky factorization.

    The pivot at each elimination step must exceed ``pivot_rtol * trace(a)``;
    otherwise the matrix is declared singular.  All matrices inverted by the
    combiner are covariance-plus-noise, hence positive definite whenever the
    noise floor is nonzero.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    floor = pivot_rtol * np.trace(a).real
    chol = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j].real - np.sum(np.abs(chol[j, :j]) ** 2)
        if pivot <= floor:
            raise SingularMatrixError(
                f"pivot {pivot:.3e} at step {j} below threshold {floor:.3e}"
            )
        chol[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            chol[j + 1 :, j] = (
                a[j + 1 :, j] - chol[j + 1 :, :j] @ chol[j, :j].conj()
            ) / chol[j, j]
    eye = np.eye(n, dtype=complex)
    lower = np.linalg.solve(chol, eye)
    return np.linalg.solve(chol.conj().T, lower)


def numerical_rank(a: np.ndarray, rel_threshold: float = 1e-10) -> int:
    """Numerical rank of a Hermitian PSD matrix.

    Eigenvalues above ``rel_threshold`` times the largest eigenvalue count
    toward the rank; an all-zero matrix has rank 0.
    """
    a = np.asarray(a, dtype=complex)
    vals = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    top = vals[-1] if vals.size else 0.0
    if top <= 0.0:
        return 0
    return int(np.count_nonzero(vals > rel_threshold * top))
