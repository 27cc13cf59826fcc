"""Transmitter chain: convolutional encoding, semi-random interleaving, QPSK.

Bit/symbol layout convention, shared with the demapper in
:mod:`arqcomb.combiner`: the interleaved code-bit stream is split into pairs,
antennas fastest and channel uses slowest, i.e. bits ``2*(i*n_tx + t)`` and
``2*(i*n_tx + t) + 1`` become the in-phase / quadrature bits of the symbol
sent from antenna ``t`` at channel use ``i``.  Gray QPSK maps bit pair
``(b_i, b_q)`` to ``((1-2*b_i) + 1j*(1-2*b_q)) / sqrt(2)``, so every symbol
has unit energy and a positive LLR means "bit 0 more likely".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CodeConfig",
    "SymbolFrame",
    "Interleaver",
    "conv_encode",
    "make_interleaver",
    "interleave",
    "deinterleave",
    "map_frame",
    "QPSK_SCALE",
]

QPSK_SCALE = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class CodeConfig:
    """Rate-1/2 feedforward convolutional code.

    ``generators`` hold the two tap masks with the newest input bit in the
    most significant position; the defaults are the octal pair (35, 23) with
    constraint length 5.
    """

    generators: tuple[int, int] = (0o35, 0o23)
    constraint_length: int = 5

    def __post_init__(self) -> None:
        for g in self.generators:
            if g.bit_length() != self.constraint_length:
                raise ValueError(
                    f"generator {g:#o} does not span constraint length "
                    f"{self.constraint_length}"
                )

    @property
    def memory(self) -> int:
        return self.constraint_length - 1


@dataclass(frozen=True)
class SymbolFrame:
    """Unit-energy QPSK symbols arranged as an (n_tx, T) matrix."""

    symbols: np.ndarray

    @property
    def n_tx(self) -> int:
        return self.symbols.shape[0]

    @property
    def num_uses(self) -> int:
        return self.symbols.shape[1]

    def blocks(self) -> np.ndarray:
        """View as (T, n_tx) blocks, the layout the channel model consumes."""
        return self.symbols.T


@dataclass(frozen=True)
class Interleaver:
    """Fixed permutation with the semi-random (S-random) spread property.

    ``interleave`` reads ``out[j] = x[permutation[j]]``.  For any two
    positions closer than ``spread`` the permuted indices differ by at least
    ``spread``, which breaks up burst errors fed back by the decoder.
    """

    permutation: np.ndarray
    seed: int
    spread: int

    def __len__(self) -> int:
        return self.permutation.size

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(self.permutation.size)
        return inv


def conv_encode(info_bits: np.ndarray, cfg: CodeConfig = CodeConfig()) -> np.ndarray:
    """Encode and terminate: appends ``memory`` zero tail bits so the encoder
    ends in the zero state.  Output length is ``2 * (len(info) + memory)``."""
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    g0, g1 = cfg.generators
    m = cfg.memory
    out = np.empty(2 * (info_bits.size + m), dtype=np.uint8)
    state = 0
    for n, bit in enumerate(np.concatenate([info_bits, np.zeros(m, np.uint8)])):
        reg = (int(bit) << m) | state
        out[2 * n] = bin(reg & g0).count("1") & 1
        out[2 * n + 1] = bin(reg & g1).count("1") & 1
        state = (int(bit) << (m - 1)) | (state >> 1)
    return out


def _try_s_random(rng: np.random.Generator, length: int, spread: int):
    pool = list(rng.permutation(length))
    out = np.empty(length, dtype=np.int64)
    for i in range(length):
        lo = max(0, i - spread + 1)
        recent = out[lo:i]
        for idx, v in enumerate(pool):
            if recent.size == 0 or np.abs(recent - v).min() >= spread:
                out[i] = v
                del pool[idx]
                break
        else:
            return None
    return out


def make_interleaver(
    length: int, seed: int, spread: int = 16, max_attempts: int = 1000
) -> Interleaver:
    """Build an S-random interleaver deterministically from ``seed``.

    Greedy construction with random candidate order; if ``max_attempts``
    builds fail at the requested spread, the spread is decremented and the
    search restarts, so construction always terminates (spread 0 is a plain
    shuffle).
    """
    if seed < 0:
        raise ValueError("interleaver seed must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence([seed, length, spread]))
    s = spread
    while s > 0:
        for _ in range(max_attempts):
            perm = _try_s_random(rng, length, s)
            if perm is not None:
                return Interleaver(perm, seed, s)
        s -= 1
    return Interleaver(rng.permutation(length), seed, 0)


def interleave(values: np.ndarray, il: Interleaver) -> np.ndarray:
    values = np.asarray(values)
    if values.size != len(il):
        raise ValueError(f"length {values.size} does not match interleaver {len(il)}")
    return values[il.permutation]


def deinterleave(values: np.ndarray, il: Interleaver) -> np.ndarray:
    values = np.asarray(values)
    if values.size != len(il):
        raise ValueError(f"length {values.size} does not match interleaver {len(il)}")
    out = np.empty_like(values)
    out[il.permutation] = values
    return out


def map_frame(code_bits: np.ndarray, n_tx: int) -> SymbolFrame:
    """Serial-to-parallel convert interleaved code bits onto the antenna grid."""
    code_bits = np.asarray(code_bits, dtype=np.uint8)
    if code_bits.size % (2 * n_tx) != 0:
        raise ValueError(
            f"{code_bits.size} code bits cannot fill {n_tx} antennas with QPSK"
        )
    pairs = code_bits.reshape(-1, n_tx, 2).astype(np.float64)
    blocks = ((1.0 - 2.0 * pairs[..., 0]) + 1j * (1.0 - 2.0 * pairs[..., 1])) * QPSK_SCALE
    return SymbolFrame(symbols=np.ascontiguousarray(blocks.T))
