"""Fast self-checks behind ``sim verify``: statistical structure, asymptotic
suppression slopes, recursion-vs-direct equivalence, and cost accounting.

Each check returns (name, passed, detail); :func:`run_all` prints one line
per check and reports overall success.  These are reduced-size versions of
the test suite's properties, sized to finish in well under a minute.
"""

from __future__ import annotations

import numpy as np

from .analysis import (
    cci_covariance,
    combining_memory_footprint,
    complexity_model,
    empirical_covariance,
    off_block_mass,
    perfect_feedback_combine,
    rank_condition,
)
from .arq import ArqConfig, Counters, build_tx_frame, run_packet
from .channel import (
    CciProfile,
    draw_cci_channel,
    draw_channel,
    equal_power_profile,
    random_qpsk_frame,
    transmit_round,
)
from .combiner import CombinerState, SoftStats, mmse_combine, update_state
from .numerics import channel_frequency_response, dft_block, idft_block
from .tx import make_interleaver

__all__ = ["run_all"]


def _random_soft(rng, num_uses, n_tx) -> SoftStats:
    llrs = rng.normal(0.0, 2.0, size=2 * n_tx * num_uses)
    from .combiner import soft_symbol_stats

    return soft_symbol_stats(llrs, n_tx, num_uses)


def _random_psd(rng, n, noise=0.1) -> np.ndarray:
    w = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return w @ w.conj().T / n + noise * np.eye(n)


def _direct_combine(cfrs, covs, y_fs, soft):
    """Joint-MMSE reference with explicit stacked-covariance inversion."""
    num_uses, n_tx = soft.mean.shape
    k = len(cfrs)
    n_rx = cfrs[0].shape[1]
    xi = np.zeros((k * n_rx, k * n_rx), dtype=complex)
    for u, cov in enumerate(covs):
        xi[u * n_rx : (u + 1) * n_rx, u * n_rx : (u + 1) * n_rx] = cov
    sig = np.diag(soft.avg_var).astype(complex)
    resp = np.empty((num_uses, n_tx, n_tx), dtype=complex)
    fwd = np.empty((num_uses, n_tx), dtype=complex)
    for i in range(num_uses):
        lam = np.concatenate([cfr[i] for cfr in cfrs], axis=0)
        y = np.concatenate([y_f[i] for y_f in y_fs], axis=0)
        b = lam @ sig @ lam.conj().T + xi
        filt = lam.conj().T @ np.linalg.inv(b)
        resp[i] = filt @ lam
        fwd[i] = filt @ y
    gains = np.diag(resp.mean(axis=0)).real
    z_f = np.empty((num_uses, n_tx), dtype=complex)
    for i in range(num_uses):
        centered = resp[i] - np.diag(gains)
        z_f[i] = fwd[i] - centered @ soft.mean_f[i]
    return idft_block(z_f)


def check_recursion_equivalence(instances: int = 30) -> tuple[str, bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(instances):
        k = int(rng.integers(1, 4))
        n_tx = int(rng.choice([1, 2, 4]))
        n_rx = int(rng.choice([1, 2, 4]))
        num_uses = int(rng.choice([4, 8]))
        num_taps = int(rng.integers(1, 3))
        soft = _random_soft(rng, num_uses, n_tx)
        state = CombinerState.initial(num_uses, n_tx)
        cfrs, covs, y_fs = [], [], []
        for _u in range(k):
            taps = (rng.standard_normal((num_taps, n_rx, n_tx))
                    + 1j * rng.standard_normal((num_taps, n_rx, n_tx))) / np.sqrt(2)
            cfr = channel_frequency_response(taps, num_uses)
            cov = _random_psd(rng, n_rx)
            y_f = (rng.standard_normal((num_uses, n_rx))
                   + 1j * rng.standard_normal((num_uses, n_rx)))
            state = update_state(state, cfr, cov, y_f)
            cfrs.append(cfr)
            covs.append(cov)
            y_fs.append(y_f)
        z_rec = mmse_combine(state, soft).z
        z_dir = _direct_combine(cfrs, state.noise_covs, y_fs, soft)
        err = np.linalg.norm(z_rec - z_dir) / max(np.linalg.norm(z_dir), 1e-30)
        worst = max(worst, err)
    ok = worst < 1e-8
    return "recursive combiner matches direct inversion", ok, f"max rel err {worst:.2e}"


def check_covariance_structure(draws: int = 3000) -> tuple[str, bool, str]:
    rng = np.random.default_rng(11)
    num_uses, n_rx, k = 8, 2, 2
    cci = CciProfile(n_tx=2, tap_powers=(0.25, 0.25))
    noise_var = 0.5
    samples = np.empty((draws, num_uses * k * n_rx), dtype=complex)
    for d in range(draws):
        per_round = []
        for _u in range(k):
            chan = draw_cci_channel(cci, n_rx, rng)
            syms = random_qpsk_frame(cci.n_tx, num_uses, rng)
            w = np.zeros((num_uses, n_rx), dtype=complex)
            for l in range(chan.taps.shape[0]):
                w += np.roll(syms.blocks(), l, axis=0) @ chan.taps[l].T
            w += np.sqrt(noise_var / 2) * (
                rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape)
            )
            per_round.append(dft_block(w))
        stacked = np.concatenate(per_round, axis=1)  # (T, k*n_rx), bin-major
        samples[d] = stacked.reshape(-1)
    cov = empirical_covariance(samples)
    mass = off_block_mass(cov, block_size=k * n_rx)
    bound = 5.0 / np.sqrt(draws)
    return (
        "interference covariance is block diagonal across bins/rounds",
        mass < bound,
        f"off-block mass {mass:.4f} < {bound:.4f}",
    )


def _suppression_slopes():
    rng = np.random.default_rng(23)
    profile = equal_power_profile(2)
    noise_vars = np.array([1e-2, 1e-3, 1e-4, 1e-5])

    def sweep(n_tx, n_rx, cci_profile, k):
        frame = random_qpsk_frame(n_tx, 128, rng)
        chans = [draw_channel(profile, n_tx, n_rx, np.random.default_rng(100 + u))
                 for u in range(k)]
        ccis = [draw_cci_channel(cci_profile, n_rx, np.random.default_rng(200 + u))
                for u in range(k)]
        sinrs = []
        for nv in noise_vars:
            rounds = []
            for u in range(k):
                syms = random_qpsk_frame(cci_profile.n_tx, 128,
                                         np.random.default_rng(300 + u))
                rx = transmit_round(frame, chans[u], ccis[u], syms, nv,
                                    np.random.default_rng(400 + u))
                cov = cci_covariance(ccis[u]) + nv * np.eye(n_rx)
                rounds.append((chans[u], rx, cov))
            sinrs.append(perfect_feedback_combine(frame, rounds, nv).sinr)
        return np.array(sinrs)

    cci_rank1 = CciProfile(n_tx=1, tap_powers=(0.5,))
    sinr_ok = sweep(2, 4, cci_rank1, k=2)
    cci_full = CciProfile(n_tx=4, tap_powers=(0.5,))
    sinr_bad = sweep(2, 4, cci_full, k=1)
    x = np.log10(1.0 / noise_vars)
    slope_ok = np.polyfit(x, np.log10(sinr_ok), 1)[0]
    slope_bad = np.log10(sinr_bad[-1] / sinr_bad[-2])
    return slope_ok, slope_bad


def check_asymptotic_suppression() -> tuple[str, bool, str]:
    assert rank_condition([1, 1], n_rx=4, n_tx=2)
    assert not rank_condition([4], n_rx=4, n_tx=2)
    slope_ok, slope_bad = _suppression_slopes()
    ok = slope_ok >= 0.95 and slope_bad <= 0.2
    return (
        "asymptotic interference suppression under the sum-rank condition",
        ok,
        f"slope {slope_ok:.3f} when it holds, last-decade slope {slope_bad:.3f} when not",
    )


def check_counters() -> tuple[str, bool, str]:
    il = make_interleaver(1032, 0)
    rng = np.random.default_rng(3)
    info = rng.integers(0, 2, 512, dtype=np.uint8)
    tx = build_tx_frame(info, il, n_tx=2)
    profile = equal_power_profile(2)
    num_uses = tx.frame.num_uses

    def source(k):
        def draw():
            chan = draw_channel(profile, 2, 2, np.random.default_rng(50 + k))
            rx = transmit_round(tx.frame, chan, None, None, 1e4,
                                np.random.default_rng(60 + k))
            return chan, rx
        return draw

    sources = [source(k) for k in range(3)]
    expected = complexity_model(num_uses, 2, 5, 3, 2)
    details = []
    ok = True
    for scheme, exp_adds, exp_mem in (
        ("proposed", expected.adds_proposed, expected.mem_proposed),
        ("llr_level", expected.adds_llr, expected.mem_llr),
    ):
        counters = Counters()
        result = run_packet(tx, sources, ArqConfig(scheme=scheme), counters)
        mem, _side = combining_memory_footprint(result.carry)
        ok = ok and counters.combining_additions == exp_adds and mem == exp_mem
        details.append(f"{scheme}: adds {counters.combining_additions}/{exp_adds}, "
                       f"mem {mem}/{exp_mem}")
    return "runtime counters match the closed-form accounting", ok, "; ".join(details)


def run_all(print_fn=print) -> bool:
    checks = (
        check_recursion_equivalence,
        check_covariance_structure,
        check_asymptotic_suppression,
        check_counters,
    )
    all_ok = True
    for check in checks:
        name, ok, detail = check()
        all_ok = all_ok and ok
        print_fn(f"[{'PASS' if ok else 'FAIL'}] {name} ({detail})")
    return all_ok
