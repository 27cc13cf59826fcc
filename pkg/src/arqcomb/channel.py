"""Fading channel, co-channel interferer, and received-signal synthesis.

Conventions
-----------
* Desired-link taps are i.i.d. circularly-symmetric complex Gaussian with
  per-tap variance ``tap_powers[l]`` summing to one, so the expected desired
  energy per receive antenna equals ``n_tx``.
* The interferer's tap powers do *not* sum to one; their sum encodes the path
  loss, and ``sir_to_cci_scale`` rescales it to hit a requested
  signal-to-interference ratio ``n_tx / (cci_n_tx * sum(tap_powers))``.
* ``noise_var`` is the total variance of one complex received sample, split
  evenly between real and imaginary parts.
* The cyclic prefix is modeled implicitly: propagation is circular
  convolution over the block, which is exactly what CP insertion/removal
  yields under perfect synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .tx import QPSK_SCALE, SymbolFrame

__all__ = [
    "ChannelProfile",
    "CciProfile",
    "ChannelRealization",
    "ReceivedBlock",
    "equal_power_profile",
    "draw_channel",
    "draw_cci_channel",
    "sir_to_cci_scale",
    "scaled_cci_profile",
    "random_qpsk_frame",
    "transmit_round",
    "ebn0_to_noise_var",
    "correlation_matrix",
]


@dataclass(frozen=True)
class ChannelProfile:
    """Power-delay profile of the desired link; powers must sum to one."""

    tap_powers: tuple[float, ...]

    def __post_init__(self) -> None:
        p = np.asarray(self.tap_powers, dtype=float)
        if p.size == 0 or np.any(p < 0):
            raise ValueError("tap powers must be non-negative and non-empty")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"tap powers must sum to 1, got {p.sum()}")

    @property
    def num_taps(self) -> int:
        return len(self.tap_powers)


def equal_power_profile(num_taps: int) -> ChannelProfile:
    return ChannelProfile(tap_powers=(1.0 / num_taps,) * num_taps)


@dataclass(frozen=True)
class CciProfile:
    """Interferer description: tap powers are unnormalized (they carry the
    path loss), antenna correlation uses a single coefficient per array end,
    and ``scatter_rank`` caps the rank of each tap's scattering matrix
    (``None`` means full rank)."""

    n_tx: int
    tap_powers: tuple[float, ...]
    delta_tx: float = 0.0
    delta_rx: float = 0.0
    scatter_rank: int | None = None

    def __post_init__(self) -> None:
        if self.n_tx < 1:
            raise ValueError("interferer needs at least one transmit antenna")
        p = np.asarray(self.tap_powers, dtype=float)
        if p.size == 0 or np.any(p < 0):
            raise ValueError("tap powers must be non-negative and non-empty")
        for d in (self.delta_tx, self.delta_rx):
            if not 0.0 <= d < 1.0:
                raise ValueError("correlation coefficients must lie in [0, 1)")

    @property
    def num_taps(self) -> int:
        return len(self.tap_powers)


@dataclass(frozen=True)
class ChannelRealization:
    """One round's tap matrices, shaped (L, n_rx, n_tx)."""

    taps: np.ndarray
    round_index: int = 0

    @property
    def n_rx(self) -> int:
        return self.taps.shape[1]

    @property
    def n_tx(self) -> int:
        return self.taps.shape[2]


@dataclass(frozen=True)
class ReceivedBlock:
    """Time-domain received samples, shaped (T, n_rx)."""

    samples: np.ndarray
    noise_var: float


def _cgauss(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channel(
    profile: ChannelProfile,
    n_tx: int,
    n_rx: int,
    rng: np.random.Generator,
    round_index: int = 0,
) -> ChannelRealization:
    """Draw one round's desired-link taps, independent across everything."""
    taps = np.empty((profile.num_taps, n_rx, n_tx), dtype=complex)
    for l, power in enumerate(profile.tap_powers):
        taps[l] = _cgauss(rng, (n_rx, n_tx), power) if power > 0 else 0.0
    return ChannelRealization(taps=taps, round_index=round_index)


def correlation_matrix(n: int, delta: float) -> np.ndarray:
    """Single-coefficient antenna correlation: unit diagonal, ``delta`` off it."""
    r = np.full((n, n), delta, dtype=float)
    np.fill_diagonal(r, 1.0)
    return r


def _matrix_sqrt(r: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(r)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def draw_cci_channel(
    cci: CciProfile,
    n_rx: int,
    rng: np.random.Generator,
    round_index: int = 0,
) -> ChannelRealization:
    """Draw the interferer's taps with controlled scattering rank.

    A full-rank request draws i.i.d. Gaussian scattering matrices directly; a
    reduced rank ``r`` builds each tap as a product of (n_rx, r) and
    (r, n_tx) Gaussian factors scaled so the expected squared Frobenius norm
    is ``n_rx * n_tx * tap_power``, then applies the antenna correlation
    square roots on both sides.
    """
    full = min(cci.n_tx, n_rx)
    rank = full if cci.scatter_rank is None else cci.scatter_rank
    if not 1 <= rank <= full:
        raise ValueError(f"scatter rank {rank} out of range 1..{full}")
    sq_rx = _matrix_sqrt(correlation_matrix(n_rx, cci.delta_rx))
    sq_tx = _matrix_sqrt(correlation_matrix(cci.n_tx, cci.delta_tx))
    taps = np.empty((cci.num_taps, n_rx, cci.n_tx), dtype=complex)
    for l, power in enumerate(cci.tap_powers):
        if power == 0:
            taps[l] = 0.0
            continue
        if rank == full:
            scatter = _cgauss(rng, (n_rx, cci.n_tx), power)
        else:
            left = _cgauss(rng, (n_rx, rank))
            right = _cgauss(rng, (rank, cci.n_tx))
            scatter = np.sqrt(power / rank) * (left @ right)
        taps[l] = sq_rx @ scatter @ sq_tx
    return ChannelRealization(taps=taps, round_index=round_index)


def sir_to_cci_scale(
    sir_db: float, n_tx: int, n_tx_cci: int, tap_powers
) -> float:
    """Scale factor on interferer tap powers achieving the requested SIR."""
    total = float(np.sum(tap_powers))
    if total <= 0:
        raise ValueError("interferer tap powers must not all be zero")
    target_sum = n_tx / (n_tx_cci * 10.0 ** (sir_db / 10.0))
    return target_sum / total


def scaled_cci_profile(cci: CciProfile, sir_db: float, n_tx: int) -> CciProfile:
    scale = sir_to_cci_scale(sir_db, n_tx, cci.n_tx, cci.tap_powers)
    return replace(cci, tap_powers=tuple(scale * p for p in cci.tap_powers))


def random_qpsk_frame(n_tx: int, num_uses: int, rng: np.random.Generator) -> SymbolFrame:
    """I.i.d. uniform QPSK symbols, used for the interferer's transmissions."""
    points = (1.0 - 2.0 * rng.integers(0, 2, size=(n_tx, num_uses, 2))).astype(float)
    return SymbolFrame(symbols=(points[..., 0] + 1j * points[..., 1]) * QPSK_SCALE)


def _circular_mix(blocks: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Circular convolution of (T, n_tx) symbol blocks with (L, n_rx, n_tx) taps."""
    out = np.zeros((blocks.shape[0], taps.shape[1]), dtype=complex)
    for l in range(taps.shape[0]):
        out += np.roll(blocks, l, axis=0) @ taps[l].T
    return out


def transmit_round(
    frame: SymbolFrame,
    chan: ChannelRealization,
    cci_chan: ChannelRealization | None,
    cci_frame: SymbolFrame | None,
    noise_var: float,
    rng: np.random.Generator,
) -> ReceivedBlock:
    """Propagate one round: desired signal plus (optional) interference plus
    thermal noise, all as circular convolutions over the block."""
    samples = _circular_mix(frame.blocks(), chan.taps)
    if cci_chan is not None:
        if cci_frame is None:
            raise ValueError("interferer channel given without interferer symbols")
        samples = samples + _circular_mix(cci_frame.blocks(), cci_chan.taps)
    if noise_var > 0:
        samples = samples + _cgauss(rng, samples.shape, noise_var)
    return ReceivedBlock(samples=samples, noise_var=noise_var)


def ebn0_to_noise_var(
    ebn0_db: float, n_info_bits: int = 512, n_code_bits: int = 1032
) -> float:
    """Noise variance for an Eb/N0 stated per useful bit per receive antenna.

    The desired signal contributes ``n_tx`` power units per receive antenna
    and each channel use carries ``2 * n_tx * n_info / n_code`` useful bits,
    so the ratio is independent of the antenna count:
    ``noise_var = n_code / (2 * n_info * 10**(ebn0_db/10))``.
    """
    return n_code_bits / (2.0 * n_info_bits * 10.0 ** (ebn0_db / 10.0))
