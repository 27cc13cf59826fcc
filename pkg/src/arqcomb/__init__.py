"""Link-level simulator for single-carrier MIMO hybrid-ARQ transmission with
frequency-domain turbo packet combining under unknown co-channel interference.

The package splits along the receiver's natural seams: :mod:`~arqcomb.tx`
(encode/interleave/map), :mod:`~arqcomb.channel` (fading, interferer, noise),
:mod:`~arqcomb.combiner` (the cross-round soft-MMSE filter and its baseline),
:mod:`~arqcomb.decoder` (max-log SISO), :mod:`~arqcomb.arq` (the per-packet
round/iteration engine), :mod:`~arqcomb.analysis` (verification instruments),
and :mod:`~arqcomb.harness` (Monte Carlo sweeps and CSV output) behind the
``sim`` command-line tool.
"""

from .analysis import (
    cci_cov_rank,
    complexity_model,
    measure_sinr,
    mf_snr,
    rank_condition,
)
from .arq import ArqConfig, Counters, PacketResult, build_tx_frame, run_packet
from .channel import (
    CciProfile,
    ChannelProfile,
    ChannelRealization,
    ReceivedBlock,
    draw_cci_channel,
    draw_channel,
    ebn0_to_noise_var,
    equal_power_profile,
    sir_to_cci_scale,
    transmit_round,
)
from .combiner import (
    CombinerState,
    SoftStats,
    demap_extrinsic,
    estimate_cci_noise_cov,
    llr_level_equalize,
    mmse_combine,
    soft_symbol_stats,
    update_state,
)
from .decoder import siso_decode
from .harness import BlerRecord, Scenario, emit_records, parse_config, run_sweep
from .numerics import (
    channel_frequency_response,
    dft_block,
    hermitian_inverse,
    idft_block,
    numerical_rank,
)
from .tx import CodeConfig, Interleaver, SymbolFrame, conv_encode, interleave, deinterleave, make_interleaver, map_frame

__version__ = "0.1.0"
