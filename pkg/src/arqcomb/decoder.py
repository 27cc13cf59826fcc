"""Max-log SISO decoding of the terminated rate-1/2 convolutional code.

The decoder runs forward/backward max-log recursions over the 16-state
trellis, with the path constrained to start and end in the zero state (the
encoder appends zero tail bits).  A priori LLRs arrive on code bits, positive
meaning "bit 0 more likely"; branch metrics are ``sum_j (1 - 2*c_j) * L_j / 2``
so that adding independent bit log-likelihoods is exact.  Outputs are the
per-code-bit extrinsic LLRs (a posteriori minus a priori, exact in max-log
arithmetic and deliberately left unclamped), the info-bit a posteriori LLRs,
and hard info decisions.  All operations are max/plus, so scaling every input
by a positive constant scales every output by the same constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .tx import CodeConfig

__all__ = ["Trellis", "DecodeResult", "siso_decode"]

_NEG = -1e30  # -inf surrogate; keeps max-log arithmetic NaN-free


@dataclass(frozen=True)
class Trellis:
    """Transition tables derived from a :class:`CodeConfig`.

    ``next_state[s, d]`` is the successor of state ``s`` under input ``d``;
    ``out_sign[s, d, j]`` is ``1 - 2*c_j`` for the two output bits of that
    branch; ``inc_state[s', p]`` / ``inc_input[s', p]`` enumerate the two
    branches entering state ``s'``.
    """

    num_states: int
    next_state: np.ndarray
    out_sign: np.ndarray
    inc_state: np.ndarray
    inc_input: np.ndarray


@lru_cache(maxsize=4)
def _build_trellis(cfg: CodeConfig) -> Trellis:
    m = cfg.memory
    n_states = 1 << m
    g0, g1 = cfg.generators
    next_state = np.empty((n_states, 2), dtype=np.int64)
    out_sign = np.empty((n_states, 2, 2), dtype=np.float64)
    for s in range(n_states):
        for d in (0, 1):
            reg = (d << m) | s
            c0 = bin(reg & g0).count("1") & 1
            c1 = bin(reg & g1).count("1") & 1
            next_state[s, d] = (d << (m - 1)) | (s >> 1)
            out_sign[s, d] = (1.0 - 2.0 * c0, 1.0 - 2.0 * c1)
    inc_state = np.empty((n_states, 2), dtype=np.int64)
    inc_input = np.empty((n_states, 2), dtype=np.int64)
    fill = np.zeros(n_states, dtype=np.int64)
    for s in range(n_states):
        for d in (0, 1):
            ns = next_state[s, d]
            inc_state[ns, fill[ns]] = s
            inc_input[ns, fill[ns]] = d
            fill[ns] += 1
    if not np.all(fill == 2):
        raise AssertionError("trellis is not two-in/two-out")
    return Trellis(n_states, next_state, out_sign, inc_state, inc_input)


@dataclass
class DecodeResult:
    extrinsic: np.ndarray
    code_app: np.ndarray
    info_app: np.ndarray
    info_bits: np.ndarray


def siso_decode(
    apriori_code_llrs: np.ndarray, cfg: CodeConfig = CodeConfig()
) -> DecodeResult:
    """Max-log-MAP decode of one terminated frame.

    ``apriori_code_llrs`` must hold ``2 * (n_info + memory)`` values; the
    tail stages are decoded like any other but excluded from ``info_bits``.
    """
    llrs = np.asarray(apriori_code_llrs, dtype=np.float64)
    if llrs.ndim != 1 or llrs.size % 2 != 0:
        raise ValueError(f"expected a flat, even-length LLR array, got {llrs.shape}")
    trellis = _build_trellis(cfg)
    n_stages = llrs.size // 2
    n_info = n_stages - cfg.memory
    if n_info <= 0:
        raise ValueError(f"{llrs.size} LLRs cannot hold a terminated frame")
    pairs = llrs.reshape(n_stages, 2)

    # gamma[n, s, d]: branch metric; gamma_in re-indexes it by destination.
    gamma = 0.5 * np.einsum("sdj,nj->nsd", trellis.out_sign, pairs)
    gamma_in = gamma[:, trellis.inc_state, trellis.inc_input]

    alpha = np.full((n_stages + 1, trellis.num_states), _NEG)
    alpha[0, 0] = 0.0
    for n in range(n_stages):
        alpha[n + 1] = (alpha[n][trellis.inc_state] + gamma_in[n]).max(axis=1)

    beta = np.full((n_stages + 1, trellis.num_states), _NEG)
    beta[n_stages, 0] = 0.0
    for n in range(n_stages - 1, -1, -1):
        beta[n] = (gamma[n] + beta[n + 1][trellis.next_state]).max(axis=1)

    # metric[n, s, d]: best full-path score through branch (s, d) at stage n.
    metric = alpha[:-1, :, None] + gamma + beta[1:][:, trellis.next_state]

    info_app = metric[:, :, 0].max(axis=1) - metric[:, :, 1].max(axis=1)
    info_bits = (info_app[:n_info] <= 0.0).astype(np.uint8)

    code_app = np.empty_like(pairs)
    for j in range(2):
        zero_branch = trellis.out_sign[:, :, j] > 0.0
        m0 = np.where(zero_branch, metric, _NEG).max(axis=(1, 2))
        m1 = np.where(zero_branch, _NEG, metric).max(axis=(1, 2))
        code_app[:, j] = m0 - m1
    code_app = code_app.reshape(-1)

    return DecodeResult(
        extrinsic=code_app - llrs,
        code_app=code_app,
        info_app=info_app[:n_info],
        info_bits=info_bits,
    )
