"""Monte Carlo BLER sweeps: scenario configs, seeded parallel runs, CSV out.

Config files are line-oriented ``key = value`` text; blank lines and ``#``
comments are ignored and unknown keys are rejected.  Recognized keys (see
:class:`Scenario` for semantics):

    n_tx, n_rx                 required antenna counts
    ebn0_db                    required comma-separated list of Eb/N0 points
    n_frames                   required packets per (scheme, Eb/N0) cell
    L, tap_powers              desired-link profile (default: 2 equal taps)
    sir_db                     interferer power ("none" disables the interferer)
    cci_n_tx, cci_L, cci_tap_powers, cci_delta_tx, cci_delta_rx,
    cci_scatter_rank           interferer description (defaults mirror the link)
    K, turbo_iters             ARQ depth and iterations (defaults 3, 5)
    scheme                     proposed | llr_level | both (default both)
    seed                       base seed (default 0)
    out                        output CSV path (default bler.csv)

Every random draw derives from a stream keyed by (seed, frame, round,
purpose), so results are independent of worker count and schemes/Eb-N0
points share channel noise realizations (paired comparisons).  A frame
counts as an error at round k iff decoding failed at every round <= k, so
per-round BLER is non-increasing by construction.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arq import ArqConfig, build_tx_frame, run_packet
from .channel import (
    CciProfile,
    ChannelProfile,
    draw_cci_channel,
    draw_channel,
    ebn0_to_noise_var,
    equal_power_profile,
    random_qpsk_frame,
    scaled_cci_profile,
    transmit_round,
)
from .tx import CodeConfig, make_interleaver

__all__ = [
    "ConfigError",
    "Scenario",
    "BlerRecord",
    "SweepInterrupted",
    "parse_config",
    "load_config",
    "run_sweep",
    "wilson_interval",
    "emit_records",
    "format_records",
    "parse_records",
]

N_INFO_BITS = 512
N_CODE_BITS = 1032
CSV_HEADER = "scheme,ebn0_db,round,trials,frame_errors,bler,ci_lo,ci_hi"

_PURPOSE = {"payload": 1, "channel": 2, "cci_channel": 3, "cci_symbols": 4, "noise": 5}


class ConfigError(ValueError):
    """Malformed scenario configuration."""


class SweepInterrupted(KeyboardInterrupt):
    """Carries the records completed before an interrupt."""

    def __init__(self, records):
        super().__init__("sweep interrupted")
        self.records = records


@dataclass(frozen=True)
class Scenario:
    n_tx: int
    n_rx: int
    ebn0_db: tuple[float, ...]
    n_frames: int
    tap_powers: tuple[float, ...] = (0.5, 0.5)
    sir_db: float | None = None
    cci: CciProfile | None = None
    max_rounds: int = 3
    turbo_iters: int = 5
    schemes: tuple[str, ...] = ("proposed", "llr_level")
    seed: int = 0
    out: str = "bler.csv"

    def profile(self) -> ChannelProfile:
        return ChannelProfile(tap_powers=self.tap_powers)

    def scaled_cci(self) -> CciProfile | None:
        if self.sir_db is None:
            return None
        cci = self.cci if self.cci is not None else CciProfile(
            n_tx=self.n_tx, tap_powers=self.tap_powers
        )
        return scaled_cci_profile(cci, self.sir_db, self.n_tx)

    @property
    def num_uses(self) -> int:
        return N_CODE_BITS // (2 * self.n_tx)


@dataclass(frozen=True)
class BlerRecord:
    scheme: str
    ebn0_db: float
    round_index: int
    trials: int
    frame_errors: int

    @property
    def bler(self) -> float:
        return self.frame_errors / self.trials if self.trials else 0.0


# --------------------------------------------------------------------------
# configuration parsing


def _parse_scalar(key: str, raw: str, line_no: int, cast):
    try:
        return cast(raw)
    except ValueError as err:
        raise ConfigError(f"line {line_no}: bad value for {key!r}: {raw!r}") from err


def _parse_list(key: str, raw: str, line_no: int):
    try:
        return tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError as err:
        raise ConfigError(f"line {line_no}: bad list for {key!r}: {raw!r}") from err


_KNOWN_KEYS = {
    "n_tx", "n_rx", "ebn0_db", "n_frames", "L", "tap_powers", "sir_db",
    "cci_n_tx", "cci_L", "cci_tap_powers", "cci_delta_tx", "cci_delta_rx",
    "cci_scatter_rank", "K", "turbo_iters", "scheme", "seed", "out",
}


def parse_config(text: str) -> Scenario:
    """Parse ``key = value`` scenario text into a validated :class:`Scenario`."""
    values: dict[str, tuple[str, int]] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        values[key] = (raw, line_no)

    for required in ("n_tx", "n_rx", "ebn0_db", "n_frames"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")

    def scalar(key, cast, default=None):
        if key not in values:
            return default
        raw, line_no = values[key]
        return _parse_scalar(key, raw, line_no, cast)

    n_tx = scalar("n_tx", int)
    n_rx = scalar("n_rx", int)
    n_frames = scalar("n_frames", int)
    ebn0_raw, ebn0_line = values["ebn0_db"]
    ebn0 = _parse_list("ebn0_db", ebn0_raw, ebn0_line)

    num_taps = scalar("L", int, 2)
    if "tap_powers" in values:
        tap_powers = _parse_list("tap_powers", *values["tap_powers"])
    else:
        tap_powers = equal_power_profile(num_taps).tap_powers
    if len(tap_powers) != num_taps:
        raise ConfigError(f"tap_powers has {len(tap_powers)} entries, L = {num_taps}")

    sir_db: float | None
    if "sir_db" in values:
        raw, line_no = values["sir_db"]
        sir_db = None if raw.lower() == "none" else _parse_scalar("sir_db", raw, line_no, float)
    else:
        sir_db = None

    cci = None
    if sir_db is not None:
        cci_n_tx = scalar("cci_n_tx", int, n_tx)
        cci_taps = scalar("cci_L", int, num_taps)
        if "cci_tap_powers" in values:
            cci_powers = _parse_list("cci_tap_powers", *values["cci_tap_powers"])
        else:
            cci_powers = (1.0 / cci_taps,) * cci_taps
        if len(cci_powers) != cci_taps:
            raise ConfigError(
                f"cci_tap_powers has {len(cci_powers)} entries, cci_L = {cci_taps}"
            )
        rank = scalar("cci_scatter_rank", int)
        try:
            cci = CciProfile(
                n_tx=cci_n_tx,
                tap_powers=cci_powers,
                delta_tx=scalar("cci_delta_tx", float, 0.0),
                delta_rx=scalar("cci_delta_rx", float, 0.0),
                scatter_rank=rank,
            )
        except ValueError as err:
            raise ConfigError(str(err)) from err
    elif any(k.startswith("cci_") for k in values):
        raise ConfigError("cci_* keys require sir_db to be set")

    scheme = scalar("scheme", str, "both")
    if scheme == "both":
        schemes: tuple[str, ...] = ("proposed", "llr_level")
    elif scheme in ("proposed", "llr_level"):
        schemes = (scheme,)
    else:
        raise ConfigError(f"scheme must be proposed, llr_level, or both, got {scheme!r}")

    scenario = Scenario(
        n_tx=n_tx,
        n_rx=n_rx,
        ebn0_db=ebn0,
        n_frames=n_frames,
        tap_powers=tap_powers,
        sir_db=sir_db,
        cci=cci,
        max_rounds=scalar("K", int, 3),
        turbo_iters=scalar("turbo_iters", int, 5),
        schemes=schemes,
        seed=scalar("seed", int, 0),
        out=scalar("out", str, "bler.csv"),
    )
    _validate_scenario(scenario)
    return scenario


def _validate_scenario(s: Scenario) -> None:
    for key, val in (("n_tx", s.n_tx), ("n_rx", s.n_rx), ("n_frames", s.n_frames),
                     ("K", s.max_rounds), ("turbo_iters", s.turbo_iters)):
        if val < 1:
            raise ConfigError(f"{key} must be positive, got {val}")
    if not s.ebn0_db:
        raise ConfigError("ebn0_db must list at least one point")
    if s.seed < 0:
        raise ConfigError("seed must be non-negative")
    if N_CODE_BITS % (2 * s.n_tx) != 0:
        raise ConfigError(f"n_tx = {s.n_tx} does not divide the {N_CODE_BITS}-bit frame")
    try:
        s.profile()
        if s.cci is not None and s.cci.scatter_rank is not None:
            if s.cci.scatter_rank > min(s.cci.n_tx, s.n_rx):
                raise ConfigError("cci_scatter_rank exceeds min(cci_n_tx, n_rx)")
    except ValueError as err:
        raise ConfigError(str(err)) from err


def load_config(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# --------------------------------------------------------------------------
# simulation


def _stream(seed: int, frame: int, round_index: int, purpose: str) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed, frame, round_index, _PURPOSE[purpose]])
    )


@lru_cache(maxsize=8)
def _interleaver_for(seed: int):
    return make_interleaver(N_CODE_BITS, seed)


def _simulate_frames(scenario: Scenario, ebn0_db: float, start: int, stop: int):
    """Error-at-round counts for frames [start, stop) at one Eb/N0 point."""
    profile = scenario.profile()
    cci = scenario.scaled_cci()
    noise_var = ebn0_to_noise_var(ebn0_db, N_INFO_BITS, N_CODE_BITS)
    il = _interleaver_for(scenario.seed)
    code = CodeConfig()
    counts = {s: np.zeros(scenario.max_rounds, dtype=np.int64) for s in scenario.schemes}
    for frame_idx in range(start, stop):
        info = _stream(scenario.seed, frame_idx, 0, "payload").integers(
            0, 2, N_INFO_BITS, dtype=np.uint8
        )
        tx = build_tx_frame(info, il, scenario.n_tx, code)

        def source_for(round_index: int):
            def draw():
                chan = draw_channel(
                    profile, scenario.n_tx, scenario.n_rx,
                    _stream(scenario.seed, frame_idx, round_index, "channel"),
                    round_index,
                )
                if cci is not None:
                    cci_chan = draw_cci_channel(
                        cci, scenario.n_rx,
                        _stream(scenario.seed, frame_idx, round_index, "cci_channel"),
                        round_index,
                    )
                    cci_syms = random_qpsk_frame(
                        cci.n_tx, scenario.num_uses,
                        _stream(scenario.seed, frame_idx, round_index, "cci_symbols"),
                    )
                else:
                    cci_chan = cci_syms = None
                rx = transmit_round(
                    tx.frame, chan, cci_chan, cci_syms, noise_var,
                    _stream(scenario.seed, frame_idx, round_index, "noise"),
                )
                return chan, rx

            return draw

        sources = [source_for(k) for k in range(1, scenario.max_rounds + 1)]
        for scheme in scenario.schemes:
            cfg = ArqConfig(
                max_rounds=scenario.max_rounds,
                turbo_iters=scenario.turbo_iters,
                scheme=scheme,
            )
            result = run_packet(tx, sources, cfg)
            failed_so_far = True
            for k in range(scenario.max_rounds):
                ok = k < len(result.per_round_success) and result.per_round_success[k]
                failed_so_far = failed_so_far and not ok
                counts[scheme][k] += int(failed_so_far)
    return counts


def _chunk_task(args):
    scenario, ebn0_db, start, stop = args
    return ebn0_db, start, stop, _simulate_frames(scenario, ebn0_db, start, stop)


def run_sweep(scenario: Scenario, workers: int = 1, progress: bool = False):
    """Run the full sweep and return records sorted by (scheme, ebn0, round).

    Deterministic for a fixed seed regardless of ``workers``.  On
    KeyboardInterrupt, raises :class:`SweepInterrupted` carrying the records
    for the cells completed so far.
    """
    chunk = max(1, math.ceil(scenario.n_frames / (max(workers, 1) * 8)))
    tasks = [
        (scenario, ebn0, start, min(start + chunk, scenario.n_frames))
        for ebn0 in scenario.ebn0_db
        for start in range(0, scenario.n_frames, chunk)
    ]
    totals = {
        (scheme, ebn0): np.zeros(scenario.max_rounds, dtype=np.int64)
        for scheme in scenario.schemes
        for ebn0 in scenario.ebn0_db
    }
    frames_done = {ebn0: 0 for ebn0 in scenario.ebn0_db}

    def absorb(result) -> None:
        ebn0, start, stop, counts = result
        for scheme, arr in counts.items():
            totals[(scheme, ebn0)] += arr
        frames_done[ebn0] += stop - start
        if progress:
            print(
                f"ebn0={ebn0:g} dB: {frames_done[ebn0]}/{scenario.n_frames} frames",
                file=sys.stderr,
            )

    try:
        if workers <= 1:
            for task in tasks:
                absorb(_chunk_task(task))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for result in pool.map(_chunk_task, tasks):
                    absorb(result)
    except KeyboardInterrupt:
        raise SweepInterrupted(_records_from(totals, frames_done, scenario)) from None
    return _records_from(totals, frames_done, scenario)


def _records_from(totals, frames_done, scenario: Scenario):
    """Build sorted records; ``trials`` reflects frames actually simulated,
    so a partial (interrupted) flush reports honest denominators."""
    records = []
    for scheme in sorted(scenario.schemes):
        for ebn0 in sorted(scenario.ebn0_db):
            if frames_done[ebn0] == 0:
                continue
            errors = totals[(scheme, ebn0)]
            for k in range(scenario.max_rounds):
                records.append(
                    BlerRecord(
                        scheme=scheme,
                        ebn0_db=float(ebn0),
                        round_index=k + 1,
                        trials=frames_done[ebn0],
                        frame_errors=int(errors[k]),
                    )
                )
    return records


# --------------------------------------------------------------------------
# output


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi


def format_records(records) -> str:
    lines = [CSV_HEADER]
    for rec in records:
        lo, hi = wilson_interval(rec.frame_errors, rec.trials)
        lines.append(
            f"{rec.scheme},{rec.ebn0_db:.6g},{rec.round_index},"
            f"{rec.trials},{rec.frame_errors},{rec.bler:.6g},{lo:.6g},{hi:.6g}"
        )
    return "\n".join(lines) + "\n"


def emit_records(records, path: str) -> None:
    """Write records as CSV with LF endings and 6-significant-digit rates."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_records(records))


def parse_records(text: str):
    """Parse CSV produced by :func:`format_records` back into records."""
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized record header")
    records = []
    for ln in lines[1:]:
        scheme, ebn0, rnd, trials, errors, _bler, _lo, _hi = ln.split(",")
        records.append(
            BlerRecord(
                scheme=scheme,
                ebn0_db=float(ebn0),
                round_index=int(rnd),
                trials=int(trials),
                frame_errors=int(errors),
            )
        )
    return records
