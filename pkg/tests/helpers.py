"""Independent reference implementations used as test oracles.

Everything here recomputes results from first principles (explicit stacked
matrices, exhaustive enumeration, hand shift registers) so the library's
optimized paths are checked against genuinely separate code.
"""

import numpy as np

from arqcomb.tx import CodeConfig


def unitary_dft(n: int) -> np.ndarray:
    m = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)


def build_block_circulant(taps: np.ndarray, num_uses: int) -> np.ndarray:
    """Explicit (T*n_rx, T*n_tx) block-circulant channel matrix: block row i
    applies tap l to the symbol block at position (i - l) mod T."""
    num_taps, n_rx, n_tx = taps.shape
    mat = np.zeros((num_uses * n_rx, num_uses * n_tx), dtype=complex)
    for i in range(num_uses):
        for l in range(num_taps):
            j = (i - l) % num_uses
            mat[i * n_rx : (i + 1) * n_rx, j * n_tx : (j + 1) * n_tx] = taps[l]
    return mat


def direct_combine(cfrs, covs, y_fs, soft):
    """Joint MMSE over stacked rounds with explicit per-bin inversion of the
    full (k*n_rx, k*n_rx) covariance-plus-signal matrix."""
    num_uses, n_tx = soft.mean.shape
    n_rx = cfrs[0].shape[1]
    k = len(cfrs)
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
        z_f[i] = fwd[i] - (resp[i] - np.diag(gains)) @ soft.mean_f[i]
    u = unitary_dft(num_uses)
    return (u.conj().T @ z_f).astype(complex)


def reference_encode(info_bits, cfg: CodeConfig = CodeConfig()):
    """Bit-list shift-register encoder, taps spelled out from the generator
    masks independently of the library's integer arithmetic."""
    g_taps = []
    for g in cfg.generators:
        bits = [(g >> (cfg.constraint_length - 1 - i)) & 1 for i in range(cfg.constraint_length)]
        g_taps.append(bits)
    register = [0] * cfg.constraint_length
    out = []
    for bit in list(info_bits) + [0] * (cfg.constraint_length - 1):
        register = [int(bit)] + register[:-1]
        for taps in g_taps:
            out.append(sum(t * r for t, r in zip(taps, register)) % 2)
    return np.array(out, dtype=np.uint8)


def all_codewords(n_info: int, cfg: CodeConfig = CodeConfig()):
    """(2**n_info, 2*(n_info+memory)) matrix of every terminated codeword."""
    words = np.arange(2 ** n_info)
    info = (words[:, None] >> np.arange(n_info - 1, -1, -1)) & 1
    table = np.empty((words.size, 2 * (n_info + cfg.memory)), dtype=np.uint8)
    for w in range(words.size):
        table[w] = reference_encode(info[w], cfg)
    return info.astype(np.uint8), table


def ml_decode(llrs, info_words, codewords):
    """Exhaustive maximum-likelihood decision: maximize sum (1-2c) * L / 2."""
    metrics = (1.0 - 2.0 * codewords) @ np.asarray(llrs) * 0.5
    return info_words[np.argmax(metrics)]


def random_taps(rng, num_taps, n_rx, n_tx, power=1.0):
    scale = np.sqrt(power / (2.0 * num_taps))
    return scale * (
        rng.standard_normal((num_taps, n_rx, n_tx))
        + 1j * rng.standard_normal((num_taps, n_rx, n_tx))
    )


def random_psd(rng, n, noise_floor=0.1):
    w = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return w @ w.conj().T / n + noise_floor * np.eye(n)


def random_soft_stats(rng, num_uses, n_tx):
    from arqcomb.combiner import soft_symbol_stats

    llrs = rng.normal(0.0, 2.0, size=2 * n_tx * num_uses)
    return soft_symbol_stats(llrs, n_tx, num_uses)
