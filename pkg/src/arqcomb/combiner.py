"""Frequency-domain soft-MMSE packet combining across retransmission rounds.

The receiver stacks every round's observation into virtual receive antennas
and equalizes them jointly, but never materializes the stacked system.  Two
running quantities, updated once per round, carry everything the filter needs:

* ``gram[i]``: the accumulated noise-whitened channel Gram matrix per bin,
  ``sum_u cfr_u[i]^H inv(noise_cov_u) cfr_u[i]`` (n_tx x n_tx),
* ``mf_obs_f[i]``: the accumulated whitened matched-filter output per bin,
  ``sum_u cfr_u[i]^H inv(noise_cov_u) y_f_u[i]`` (n_tx,).

With ``avg_var`` the time-averaged soft-symbol variances (diagonal ``S``),
the per-bin filter output is

    m[i]    = S (I + gram[i] S)^-1
    resp[i] = gram[i] - gram[i] m[i] gram[i]
    z_f[i]  = (I - gram[i] m[i]) mf_obs_f[i]
              - (resp[i] - diag(mean_i diag(resp))) s_bar_f[i]

which matches the direct joint-MMSE solution with explicit stacked-covariance
inversion (the test suite checks this to 1e-8).  ``m[i]`` deliberately uses
the inversion-free form ``S (I + gram S)^-1`` rather than ``(inv(S) + gram)^-1``
so it stays valid when some prior variances hit exactly zero under saturated
feedback.

The covariance of interference-plus-noise is unknown and is re-estimated in
the frequency domain at every turbo iteration from the residual
``y_f - cfr s_bar_f``; only the estimate from a round's final iteration is
frozen into the running state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import SingularMatrixError, dft_block, hermitian_inverse, idft_block
from .tx import QPSK_SCALE, SymbolFrame

__all__ = [
    "LLR_CLAMP",
    "DegenerateEstimateError",
    "SoftStats",
    "CombinerState",
    "CombineResult",
    "clamp_llrs",
    "soft_symbol_stats",
    "genie_soft_stats",
    "estimate_cci_noise_cov",
    "regularize_covariance",
    "prepare_covariance",
    "update_state",
    "mmse_combine",
    "demap_extrinsic",
    "llr_level_equalize",
]

LLR_CLAMP = 50.0
_COV_EPSILON = 1e-9
_VAR_FLOOR = 1e-12


class DegenerateEstimateError(RuntimeError):
    """The interference-plus-noise covariance estimate is unusable even after
    regularization (zero residual energy)."""


def clamp_llrs(llrs: np.ndarray) -> np.ndarray:
    return np.clip(llrs, -LLR_CLAMP, LLR_CLAMP)


@dataclass(frozen=True)
class SoftStats:
    """Prior symbol statistics: means, their DFT, per-symbol variances, and
    the time-averaged variance per antenna.  Shapes are (T, n_tx) except
    ``avg_var`` which is (n_tx,)."""

    mean: np.ndarray
    mean_f: np.ndarray
    var: np.ndarray
    avg_var: np.ndarray


def soft_symbol_stats(apriori_llrs: np.ndarray, n_tx: int, num_uses: int) -> SoftStats:
    """Soft QPSK statistics from a priori LLRs in transmit layout order.

    Zero LLRs give zero mean and unit variance; saturated LLRs give the exact
    constellation point and zero variance.
    """
    llrs = np.asarray(apriori_llrs, dtype=float)
    if llrs.size != 2 * n_tx * num_uses:
        raise ValueError(
            f"expected {2 * n_tx * num_uses} LLRs for {n_tx}x{num_uses}, got {llrs.size}"
        )
    pairs = llrs.reshape(num_uses, n_tx, 2)
    mean = (np.tanh(pairs[..., 0] / 2.0) + 1j * np.tanh(pairs[..., 1] / 2.0)) * QPSK_SCALE
    var = 1.0 - np.abs(mean) ** 2
    return SoftStats(
        mean=mean,
        mean_f=dft_block(mean),
        var=var,
        avg_var=var.mean(axis=0),
    )


def genie_soft_stats(frame: SymbolFrame) -> SoftStats:
    """Perfect-feedback statistics: means equal the true symbols, variances zero."""
    mean = frame.blocks().astype(complex)
    return SoftStats(
        mean=mean,
        mean_f=dft_block(mean),
        var=np.zeros(mean.shape, dtype=float),
        avg_var=np.zeros(mean.shape[1], dtype=float),
    )


@dataclass(frozen=True)
class CombinerState:
    """Cross-round receiver memory; see the module docstring.

    ``noise_covs`` keeps the per-round (regularized) covariance estimates as
    a diagnostics side table; the filter itself only reads ``gram`` and
    ``mf_obs_f``.
    """

    num_rounds: int
    gram: np.ndarray       # (T, n_tx, n_tx)
    mf_obs_f: np.ndarray   # (T, n_tx)
    noise_covs: tuple[np.ndarray, ...] = ()

    @classmethod
    def initial(cls, num_uses: int, n_tx: int) -> "CombinerState":
        return cls(
            num_rounds=0,
            gram=np.zeros((num_uses, n_tx, n_tx), dtype=complex),
            mf_obs_f=np.zeros((num_uses, n_tx), dtype=complex),
        )


def estimate_cci_noise_cov(
    y_f: np.ndarray, cfr: np.ndarray, mean_f: np.ndarray
) -> np.ndarray:
    """Average outer product of the per-bin residual ``y_f - cfr @ mean_f``.

    Returns the raw (n_rx, n_rx) Hermitian PSD estimate; callers regularize
    it before inversion.  Requires at least ``n_rx`` bins, otherwise the
    estimate cannot be full rank.
    """
    y_f = np.asarray(y_f)
    num_uses, n_rx = y_f.shape
    if num_uses < n_rx:
        raise ValueError(f"need at least {n_rx} bins to estimate, got {num_uses}")
    resid = y_f - np.einsum("tab,tb->ta", cfr, mean_f)
    return np.einsum("ta,tb->ab", resid, resid.conj()) / num_uses


def regularize_covariance(cov: np.ndarray, eps: float = _COV_EPSILON) -> np.ndarray:
    """Add ``eps * trace/n`` to the diagonal; the estimate can be rank
    deficient at high SNR with near-perfect feedback."""
    cov = np.asarray(cov, dtype=complex)
    n = cov.shape[0]
    return cov + (eps * np.trace(cov).real / n) * np.eye(n)


def prepare_covariance(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Regularize and invert an estimated covariance.

    Raises :class:`DegenerateEstimateError` when the regularized matrix is
    still numerically singular.
    """
    reg = regularize_covariance(cov)
    try:
        inv = hermitian_inverse(reg)
    except SingularMatrixError as err:
        raise DegenerateEstimateError(
            f"covariance estimate unusable after regularization: {err}"
        ) from err
    return reg, inv


def update_state(
    state: CombinerState,
    cfr: np.ndarray,
    noise_cov: np.ndarray,
    y_f: np.ndarray,
) -> CombinerState:
    """Fold one round's whitened products into the running state.

    Pure: returns a new state, leaving ``state`` untouched.  Re-running a
    round with a refreshed covariance estimate is therefore a matter of
    updating from the same frozen predecessor again.  ``noise_cov`` is the
    raw estimate; it is regularized and inverted here, and the regularized
    matrix is what lands in the side table.
    """
    reg, inv = prepare_covariance(noise_cov)
    gram_term = np.einsum("tra,rs,tsb->tab", cfr.conj(), inv, cfr)
    obs_term = np.einsum("tra,rs,ts->ta", cfr.conj(), inv, y_f)
    return CombinerState(
        num_rounds=state.num_rounds + 1,
        gram=state.gram + gram_term,
        mf_obs_f=state.mf_obs_f + obs_term,
        noise_covs=state.noise_covs + (reg,),
    )


@dataclass(frozen=True)
class CombineResult:
    """Time-domain decision statistics with the equivalent-AWGN demap model:
    ``z[t] ~ gain[t] * symbol + CN(0, res_var[t])`` per antenna."""

    z: np.ndarray          # (T, n_tx)
    z_f: np.ndarray        # (T, n_tx)
    gain: np.ndarray       # (n_tx,)
    res_var: np.ndarray    # (n_tx,)


def mmse_combine(state: CombinerState, soft: SoftStats) -> CombineResult:
    """Run the per-bin combining filter for the current turbo iteration."""
    n_tx = state.gram.shape[-1]
    avg_var = soft.avg_var
    eye = np.eye(n_tx, dtype=complex)
    try:
        m = avg_var[:, None] * np.linalg.inv(eye + state.gram * avg_var[None, None, :])
    except np.linalg.LinAlgError as err:  # PSD + identity: cannot happen
        raise RuntimeError(f"combiner factorization failed unexpectedly: {err}") from err
    gram_m = np.einsum("tab,tbc->tac", state.gram, m)
    resp = state.gram - np.einsum("tab,tbc->tac", gram_m, state.gram)
    resp_avg = resp.mean(axis=0)
    gain = np.diag(resp_avg).real.copy()

    forward = state.mf_obs_f - np.einsum("tab,tb->ta", gram_m, state.mf_obs_f)
    resp_centered = resp.copy()
    idx = np.arange(n_tx)
    resp_centered[:, idx, idx] -= gain
    backward = np.einsum("tab,tb->ta", resp_centered, soft.mean_f)

    z_f = forward - backward
    res_var = gain * (1.0 - avg_var * gain)
    return CombineResult(z=idft_block(z_f), z_f=z_f, gain=gain, res_var=res_var)


def demap_extrinsic(z: np.ndarray, gain: np.ndarray, res_var: np.ndarray) -> np.ndarray:
    """Gray-QPSK extrinsic LLRs under the equivalent-AWGN model.

    Output ordering matches the transmit layout (antennas fastest, I before
    Q) and is clamped to ``+-LLR_CLAMP``.
    """
    res_var = np.asarray(res_var, dtype=float)
    if np.any(res_var <= 0.0):
        warnings.warn("non-positive residual variance clamped to floor", RuntimeWarning)
    res_var = np.maximum(res_var, _VAR_FLOOR)
    scale = 2.0 * np.sqrt(2.0) * gain / res_var
    llrs = np.empty(z.shape + (2,), dtype=float)
    llrs[..., 0] = scale[None, :] * z.real
    llrs[..., 1] = scale[None, :] * z.imag
    return clamp_llrs(llrs.reshape(-1))


def llr_level_equalize(
    y_f: np.ndarray, cfr: np.ndarray, noise_cov: np.ndarray, soft: SoftStats
) -> np.ndarray:
    """Single-round MMSE equalization for the LLR-level combining baseline.

    Identical to running the combiner on a state holding only this round;
    cross-round combining then happens by adding these extrinsic LLRs to the
    accumulated ones from earlier rounds.
    """
    num_uses, n_tx = soft.mean.shape
    state = update_state(CombinerState.initial(num_uses, n_tx), cfr, noise_cov, y_f)
    result = mmse_combine(state, soft)
    return demap_extrinsic(result.z, result.gain, result.res_var)
