"""Verification instruments: covariance structure, rank predicates, SINR.

These functions exist to check the receiver's statistical claims rather than
to run it: the interferer covariance rank and the sum-rank suppression
predicate, the matched-filter SNR reference, empirical post-combining SINR
under perfect feedback, structure statistics for Monte Carlo covariance
estimates, and the closed-form complexity/memory accounting that the runtime
counters must reproduce exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arq import RoundCarry
from .channel import ChannelRealization, ReceivedBlock
from .combiner import CombinerState, genie_soft_stats, mmse_combine, update_state
from .numerics import channel_frequency_response, dft_block, numerical_rank
from .tx import SymbolFrame

__all__ = [
    "SinrReport",
    "ComplexityCounts",
    "cci_covariance",
    "cci_cov_rank",
    "rank_condition",
    "mf_snr",
    "measure_sinr",
    "perfect_feedback_combine",
    "complexity_model",
    "relative_cost",
    "combining_memory_footprint",
    "empirical_covariance",
    "off_block_mass",
    "per_bin_covariances",
]

SINR_CAP = 1e12


@dataclass(frozen=True)
class SinrReport:
    gains: np.ndarray       # per-antenna complex gain estimates
    res_vars: np.ndarray    # per-antenna residual variances
    sinr: float             # aggregate, linear
    noise_var: float


def cci_covariance(cci_chan: ChannelRealization) -> np.ndarray:
    """Spatial covariance contributed by the interferer: sum over taps of
    ``H @ H^H`` (unit-energy, independent interferer symbols)."""
    taps = np.asarray(cci_chan.taps, dtype=complex)
    return np.einsum("lrt,lst->rs", taps, taps.conj())


def cci_cov_rank(cci_chan: ChannelRealization, rel_threshold: float = 1e-10) -> int:
    """Numerical rank of the interferer covariance."""
    return numerical_rank(cci_covariance(cci_chan), rel_threshold)


def rank_condition(rhos: Sequence[int], n_rx: int, n_tx: int) -> bool:
    """Strict sum-rank predicate for asymptotic interference suppression
    after ``k = len(rhos)`` rounds: ``sum(rhos) < k * n_rx - n_tx``."""
    rhos = list(rhos)
    return sum(rhos) < len(rhos) * n_rx - n_tx


def mf_snr(channels: Sequence[ChannelRealization], noise_var: float) -> float:
    """Instantaneous matched-filter SNR over the given rounds:
    ``sum_u sum_l trace(H^H H) / noise_var``, the interference-free ceiling."""
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    total = 0.0
    for chan in channels:
        total += float(np.sum(np.abs(chan.taps) ** 2))
    return total / noise_var


def measure_sinr(
    z: np.ndarray, symbols: np.ndarray, noise_var: float = float("nan")
) -> SinrReport:
    """Empirical per-antenna gain/residual decomposition of decision statistics.

    Intended for perfect-feedback runs where ``z = gain * symbol + residual``.
    ``z`` and ``symbols`` are (T, n_tx).  The aggregate SINR is capped at
    ``SINR_CAP`` when the residual vanishes.
    """
    z = np.asarray(z)
    symbols = np.asarray(symbols)
    if z.shape != symbols.shape:
        raise ValueError("statistics and symbols must share a shape")
    if z.size < 100:
        raise ValueError(f"need at least 100 samples for a stable estimate, got {z.size}")
    gains = (z * symbols.conj()).mean(axis=0)
    residual = z - gains[None, :] * symbols
    res_vars = (np.abs(residual) ** 2).mean(axis=0)
    signal = float(np.sum(np.abs(gains) ** 2))
    noise = float(np.sum(res_vars))
    sinr = SINR_CAP if noise <= signal / SINR_CAP else min(signal / noise, SINR_CAP)
    return SinrReport(gains=gains, res_vars=res_vars, sinr=sinr, noise_var=noise_var)


def perfect_feedback_combine(
    frame: SymbolFrame,
    rounds: Sequence[tuple[ChannelRealization, ReceivedBlock, np.ndarray]],
    noise_var: float,
) -> SinrReport:
    """Combine the given rounds with genie feedback and exact covariances.

    Each round supplies its channel, its received block, and the true
    interference-plus-noise covariance to use in place of the estimator.
    """
    num_uses = frame.num_uses
    state = CombinerState.initial(num_uses, frame.n_tx)
    for chan, rx, cov in rounds:
        cfr = channel_frequency_response(chan.taps, num_uses)
        state = update_state(state, cfr, cov, dft_block(rx.samples))
    result = mmse_combine(state, genie_soft_stats(frame))
    return measure_sinr(result.z, frame.blocks(), noise_var)


@dataclass(frozen=True)
class ComplexityCounts:
    adds_proposed: int
    adds_llr: int
    mem_proposed: int
    mem_llr: int


def complexity_model(
    num_uses: int,
    n_tx: int,
    turbo_iters: int,
    max_rounds: int,
    bits_per_symbol: int = 2,
) -> ComplexityCounts:
    """Closed-form cross-round combining cost for a packet that exhausts all
    rounds: real additions spent folding rounds together, and real values
    persisted between rounds.  The runtime counters in :mod:`arqcomb.arq`
    must match these numbers exactly; the covariance side table (two reals
    per matrix entry per stored round) is accounted separately by
    :func:`combining_memory_footprint`.
    """
    if min(num_uses, n_tx, turbo_iters, max_rounds, bits_per_symbol) < 1:
        raise ValueError("all counts must be positive")
    adds_proposed = 2 * num_uses * n_tx * turbo_iters * (max_rounds - 1) * (n_tx + 1)
    adds_llr = num_uses * n_tx * turbo_iters * (max_rounds - 1) * bits_per_symbol
    mem_proposed = 2 * num_uses * n_tx * (n_tx + 1)
    mem_llr = num_uses * n_tx * bits_per_symbol
    return ComplexityCounts(adds_proposed, adds_llr, mem_proposed, mem_llr)


def relative_cost(n_tx: int, bits_per_symbol: int = 2) -> float:
    """Ratio of the two schemes' combining additions (and memory):
    ``2 * (n_tx + 1) / bits_per_symbol``."""
    return 2.0 * (n_tx + 1) / bits_per_symbol


def combining_memory_footprint(carry: RoundCarry) -> tuple[int, int]:
    """Real values persisted across rounds: (combining state, covariance side
    table).  For the LLR-level baseline the first entry is the accumulated
    LLR store and the side table is empty."""
    if carry.acc_extrinsic is not None:
        return int(carry.acc_extrinsic.size), 0
    state = carry.combiner
    core = 2 * state.gram.size + 2 * state.mf_obs_f.size
    side = sum(2 * cov.size for cov in state.noise_covs)
    return int(core), int(side)


def empirical_covariance(samples: np.ndarray) -> np.ndarray:
    """Zero-mean empirical covariance of (num_draws, dim) complex samples."""
    samples = np.asarray(samples)
    return samples.T @ samples.conj() / samples.shape[0]


def off_block_mass(cov: np.ndarray, block_size: int) -> float:
    """Share of the squared Frobenius norm lying outside the diagonal blocks.

    For a covariance that is truly block diagonal this is pure estimation
    noise and decays with the number of draws.
    """
    cov = np.asarray(cov)
    dim = cov.shape[0]
    if dim % block_size != 0:
        raise ValueError(f"dimension {dim} not a multiple of block size {block_size}")
    total = float(np.sum(np.abs(cov) ** 2))
    if total == 0.0:
        return 0.0
    on = 0.0
    for i in range(0, dim, block_size):
        on += float(np.sum(np.abs(cov[i : i + block_size, i : i + block_size]) ** 2))
    return (total - on) / total


def per_bin_covariances(samples_f: np.ndarray) -> np.ndarray:
    """Per-bin empirical covariances of (num_draws, T, N) frequency-domain
    draws, returned as (T, N, N)."""
    samples_f = np.asarray(samples_f)
    n = samples_f.shape[0]
    return np.einsum("dta,dtb->tab", samples_f, samples_f.conj()) / n
