"""Chase-type ARQ engine with per-round turbo combining and decoding.

One packet is retransmitted identically for up to ``max_rounds`` rounds.  At
each round the engine runs a fixed number of turbo iterations; every
iteration refreshes the soft symbol statistics, re-estimates the
interference-plus-noise covariance for the current round, rebuilds the
current round's contribution on top of the frozen previous-round state,
filters, demaps, and decodes.  Feedback into the first iteration of a round
is the decoder extrinsic obtained at the final iteration of the previous
round.  On failure, the state computed at the round's final iteration is
frozen and carried forward; the raw received samples and channel responses
of past rounds are never retained.

Two schemes share this loop:

* ``proposed``: signal-level combining through the running
  :class:`~arqcomb.combiner.CombinerState`.
* ``llr_level``: each round is equalized on its own; the equalizer extrinsic
  LLRs of past rounds (final iteration each) are accumulated and added to the
  current round's before decoding.

``Counters`` tracks exactly the cross-round combining arithmetic: the real
additions spent folding a new round into the running state (proposed) or
adding stored LLRs (baseline).  First-round work initializes rather than
combines and is not counted, matching the closed-form accounting in
:func:`arqcomb.analysis.complexity_model`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import ChannelRealization, ReceivedBlock
from .combiner import (
    CombinerState,
    clamp_llrs,
    estimate_cci_noise_cov,
    demap_extrinsic,
    llr_level_equalize,
    mmse_combine,
    soft_symbol_stats,
    update_state,
)
from .decoder import siso_decode
from .numerics import channel_frequency_response, dft_block
from .tx import CodeConfig, Interleaver, SymbolFrame, conv_encode, interleave, deinterleave, map_frame

__all__ = [
    "ArqConfig",
    "Counters",
    "RoundCarry",
    "PacketResult",
    "TxFrame",
    "build_tx_frame",
    "genie_error_check",
    "run_packet",
]

RoundSource = Callable[[], tuple[ChannelRealization, ReceivedBlock]]

SCHEMES = ("proposed", "llr_level")


@dataclass(frozen=True)
class ArqConfig:
    max_rounds: int = 3
    turbo_iters: int = 5
    scheme: str = "proposed"
    # Early exit on in-round success never changes which packets fail (success
    # is absorbing) but is off by default: the decision is taken after the
    # full preset number of iterations.
    early_ack_exit: bool = False

    def __post_init__(self) -> None:
        if self.max_rounds < 1 or self.turbo_iters < 1:
            raise ValueError("max_rounds and turbo_iters must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")


@dataclass
class Counters:
    """Real-valued additions spent on cross-round combining."""

    combining_additions: int = 0


@dataclass
class RoundCarry:
    """Everything persisted between rounds.

    ``prior_llrs`` (the decoder extrinsic handed to the next round's first
    iteration) is turbo plumbing common to both schemes; the scheme-specific
    combining memory is ``combiner`` (proposed) or ``acc_extrinsic``
    (LLR-level baseline).
    """

    combiner: CombinerState
    prior_llrs: np.ndarray
    acc_extrinsic: np.ndarray | None = None


@dataclass
class PacketResult:
    rounds_used: int
    per_round_success: list[bool]
    per_round_info_bits: list[np.ndarray]
    counters: Counters
    carry: RoundCarry


@dataclass(frozen=True)
class TxFrame:
    """One packet's transmit-side data, reused identically at every round."""

    info_bits: np.ndarray
    code_bits: np.ndarray
    interleaved_bits: np.ndarray
    frame: SymbolFrame
    interleaver: Interleaver
    code: CodeConfig


def build_tx_frame(
    info_bits: np.ndarray,
    il: Interleaver,
    n_tx: int,
    code: CodeConfig = CodeConfig(),
) -> TxFrame:
    code_bits = conv_encode(info_bits, code)
    interleaved = interleave(code_bits, il)
    return TxFrame(
        info_bits=np.asarray(info_bits, dtype=np.uint8),
        code_bits=code_bits,
        interleaved_bits=interleaved,
        frame=map_frame(interleaved, n_tx),
        interleaver=il,
        code=code,
    )


def genie_error_check(decoded_bits: np.ndarray, true_bits: np.ndarray) -> bool:
    """Perfect error detection: ACK (True) iff the frames match bit-exactly."""
    decoded_bits = np.asarray(decoded_bits)
    true_bits = np.asarray(true_bits)
    if decoded_bits.shape != true_bits.shape:
        raise ValueError("frames must have equal length")
    return bool(np.array_equal(decoded_bits, true_bits))


def run_packet(
    tx: TxFrame,
    round_sources: Sequence[RoundSource],
    cfg: ArqConfig,
    counters: Counters | None = None,
) -> PacketResult:
    """Decode one packet across up to ``cfg.max_rounds`` rounds.

    ``round_sources`` supplies each round's channel realization and received
    block lazily, so rounds after an ACK are never generated.  Deterministic
    given its inputs.
    """
    if len(round_sources) < cfg.max_rounds:
        raise ValueError(
            f"need {cfg.max_rounds} round sources, got {len(round_sources)}"
        )
    n_tx = tx.frame.n_tx
    num_uses = tx.frame.num_uses
    counters = counters if counters is not None else Counters()
    carry = RoundCarry(
        combiner=CombinerState.initial(num_uses, n_tx),
        prior_llrs=np.zeros(2 * n_tx * num_uses),
        acc_extrinsic=np.zeros(2 * n_tx * num_uses) if cfg.scheme == "llr_level" else None,
    )

    per_round_success: list[bool] = []
    per_round_bits: list[np.ndarray] = []
    rounds_used = 0
    for k in range(1, cfg.max_rounds + 1):
        chan, rx = round_sources[k - 1]()
        cfr = channel_frequency_response(chan.taps, num_uses)
        y_f = dft_block(rx.samples)

        prior = carry.prior_llrs
        state_k = None
        equalizer_ext = None
        success = False
        for _ in range(cfg.turbo_iters):
            soft = soft_symbol_stats(prior, n_tx, num_uses)
            noise_cov = estimate_cci_noise_cov(y_f, cfr, soft.mean_f)
            if cfg.scheme == "proposed":
                state_k = update_state(carry.combiner, cfr, noise_cov, y_f)
                if carry.combiner.num_rounds > 0:
                    counters.combining_additions += 2 * num_uses * n_tx * (n_tx + 1)
                result = mmse_combine(state_k, soft)
                extrinsic = demap_extrinsic(result.z, result.gain, result.res_var)
            else:
                equalizer_ext = llr_level_equalize(y_f, cfr, noise_cov, soft)
                if k > 1:
                    extrinsic = equalizer_ext + carry.acc_extrinsic
                    counters.combining_additions += carry.acc_extrinsic.size
                else:
                    extrinsic = equalizer_ext
            decoded = siso_decode(deinterleave(extrinsic, tx.interleaver), tx.code)
            prior = clamp_llrs(interleave(decoded.extrinsic, tx.interleaver))
            success = genie_error_check(decoded.info_bits, tx.info_bits)
            if success and cfg.early_ack_exit:
                break

        rounds_used = k
        per_round_success.append(success)
        per_round_bits.append(decoded.info_bits)
        if success:
            break
        # NACK: freeze this round's final-iteration state, drop its signals.
        carry.prior_llrs = prior
        if cfg.scheme == "proposed":
            carry.combiner = state_k
        else:
            carry.acc_extrinsic = carry.acc_extrinsic + equalizer_ext

    return PacketResult(
        rounds_used=rounds_used,
        per_round_success=per_round_success,
        per_round_info_bits=per_round_bits,
        counters=counters,
        carry=carry,
    )
