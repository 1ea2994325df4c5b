"""Rate-1/2 convolutional coding, BCJR SISO decoding and LLR plumbing.

LLR sign convention throughout the package: L = ln P(bit=0) / P(bit=1),
so positive means bit 0 is more likely.  Frames exchanged between the
detector and the decoder are clamped to +/-LLR_CLAMP to keep every exp()
finite; the same clamp is applied when the decoder table for the state-
evolution predictor is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .modem import Constellation

LLR_CLAMP = 30.0
NEG_INF = -np.inf


# ---------------------------------------------------------------------------
# Convolutional code, octal generators (5, 7), memory 2
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvCode:
    """Feed-forward rate-1/2 code; the default is the (5, 7) octal pair.

    The state keeps the last ``memory`` input bits; zero tail bits are
    appended when ``terminated`` so the trellis ends in state 0.
    """

    generators: tuple[int, int] = (0o5, 0o7)
    memory: int = 2
    terminated: bool = True
    # trellis tables, derived in __post_init__
    next_state: np.ndarray = field(init=False, repr=False)
    out_bits: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n_states = 1 << self.memory
        nxt = np.zeros((n_states, 2), dtype=int)
        out = np.zeros((n_states, 2, 2), dtype=int)
        for s in range(n_states):
            for b in range(2):
                register = (b << self.memory) | s
                for gi, g in enumerate(self.generators):
                    out[s, b, gi] = bin(register & g).count("1") & 1
                nxt[s, b] = (b << (self.memory - 1)) | (s >> 1)
        object.__setattr__(self, "next_state", nxt)
        object.__setattr__(self, "out_bits", out)

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    def n_info_bits(self, n_coded_bits: int) -> int:
        """Info bits fitting a codeword of the given length."""
        if n_coded_bits % 2:
            raise ValueError("codeword length must be even for a rate-1/2 code")
        tail = self.memory if self.terminated else 0
        n = n_coded_bits // 2 - tail
        if n < 1:
            raise ValueError(f"codeword of {n_coded_bits} bits leaves no room for data")
        return n


def conv_encode(info_bits: np.ndarray, code: ConvCode = ConvCode()) -> np.ndarray:
    """Encode; output interleaves the two generator streams per input bit."""
    u = np.asarray(info_bits, dtype=int)
    if code.terminated:
        u = np.concatenate([u, np.zeros(code.memory, dtype=int)])
    taps = [np.array([(g >> i) & 1 for i in range(code.memory, -1, -1)])
            for g in code.generators]
    streams = [np.convolve(u, t)[: u.size] % 2 for t in taps]
    return np.stack(streams, axis=1).reshape(-1)


@dataclass(frozen=True)
class BcjrResult:
    extrinsic: np.ndarray   # per coded bit, app minus both inputs
    app: np.ndarray         # a-posteriori LLR per coded bit
    info_llrs: np.ndarray   # a-posteriori LLR per info bit (tail excluded)


def bcjr_decode(
    channel_llrs: np.ndarray,
    apriori_llrs: np.ndarray | None = None,
    code: ConvCode = ConvCode(),
) -> BcjrResult:
    """Exact log-domain forward-backward decoding over the code trellis.

    Both inputs are LLRs on coded bits; their sum is the branch metric
    weight.  No max-log approximation is made anywhere.
    """
    channel_llrs = np.asarray(channel_llrs, dtype=float)
    if apriori_llrs is None:
        apriori_llrs = np.zeros_like(channel_llrs)
    apriori_llrs = np.asarray(apriori_llrs, dtype=float)
    if channel_llrs.shape != apriori_llrs.shape:
        raise ValueError("channel and a-priori LLR frames differ in length")
    if channel_llrs.size % 2:
        raise ValueError("coded bit count must be even")
    T = channel_llrs.size // 2
    n_info = code.n_info_bits(channel_llrs.size)

    l_tot = (channel_llrs + apriori_llrs).reshape(T, 2)
    sign = 1.0 - 2.0 * code.out_bits                       # (S, 2, 2)
    gamma = 0.5 * np.einsum("tq,sbq->tsb", l_tot, sign)    # (T, S, 2)

    S = code.n_states
    ns = code.next_state
    # incoming (previous state, branch bit) pairs per target state
    prev_s = np.zeros((S, 2), dtype=int)
    prev_b = np.zeros((S, 2), dtype=int)
    for sp in range(S):
        pairs = [(s, b) for s in range(S) for b in range(2) if ns[s, b] == sp]
        prev_s[sp], prev_b[sp] = zip(*pairs)

    # forward/backward recursions; renormalize periodically so the running
    # metrics stay small without paying a max() every step
    gamma_in = gamma[:, prev_s, prev_b]       # (T, S, 2) metrics per incoming branch
    alpha = np.empty((T + 1, S))
    a = np.array([0.0] + [NEG_INF] * (S - 1))
    alpha[0] = a
    for t in range(T):
        cand = a[prev_s] + gamma_in[t]
        a = np.logaddexp(cand[:, 0], cand[:, 1])
        if t % 64 == 0:
            a = a - a.max()
        alpha[t + 1] = a

    beta = np.empty((T + 1, S))
    b = np.zeros(S) if not code.terminated else np.array([0.0] + [NEG_INF] * (S - 1))
    beta[T] = b
    for t in range(T - 1, -1, -1):
        cand = gamma[t] + b[ns]
        b = np.logaddexp(cand[:, 0], cand[:, 1])
        if t % 64 == 0:
            b = b - b.max()
        beta[t] = b

    # joint branch metric for every (t, state, input)
    metric = alpha[:-1, :, None] + gamma + beta[1:][:, ns]
    info_llrs = (logsumexp(metric[:, :, 0], axis=1)
                 - logsumexp(metric[:, :, 1], axis=1))[:n_info]

    app = np.empty((T, 2))
    flat = metric.reshape(T, -1)
    for q in range(2):
        mask0 = (code.out_bits[:, :, q] == 0).reshape(-1)
        app[:, q] = (logsumexp(flat[:, mask0], axis=1)
                     - logsumexp(flat[:, ~mask0], axis=1))
    app = app.reshape(-1)
    extrinsic = app - channel_llrs - apriori_llrs
    return BcjrResult(extrinsic, app, info_llrs)


# ---------------------------------------------------------------------------
# Interleaving
# ---------------------------------------------------------------------------


def _permutation(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def interleave(values: np.ndarray, seed: int) -> np.ndarray:
    values = np.asarray(values)
    return values[_permutation(values.size, seed)]


def deinterleave(values: np.ndarray, seed: int) -> np.ndarray:
    values = np.asarray(values)
    out = np.empty_like(values)
    out[_permutation(values.size, seed)] = values
    return out


# ---------------------------------------------------------------------------
# Symbol-level extrinsic statistics and LLR conversion
# ---------------------------------------------------------------------------


def extrinsic_stats(q: np.ndarray, nu_q: float | np.ndarray):
    """Extrinsic mean/variance of the detector's pseudo observations.

    The (U)AMP pseudo observations already exclude the symbol's own
    prior, so this is a pass-through: one variance per symbol for AMP,
    a single shared variance for UAMP.
    """
    return np.asarray(q), nu_q


def extrinsic_from_posterior(m_post, v_post, m_prior, v_prior):
    """Extrinsic (mean, variance) from posterior and prior Gaussians.

    The variance is infinite (no extrinsic information) where the
    posterior variance equals the prior variance.
    """
    m_post = np.asarray(m_post, dtype=complex)
    v_post = np.asarray(v_post, dtype=float)
    m_prior = np.asarray(m_prior, dtype=complex)
    v_prior = np.asarray(v_prior, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / v_post - 1.0 / v_prior
        v_e = np.where(inv > 0, 1.0 / np.where(inv > 0, inv, 1.0), np.inf)
        m_e = np.where(np.isinf(v_e),
                       m_post,
                       (m_post / v_post - m_prior / v_prior) / np.where(inv > 0, inv, 1.0))
    return m_e, v_e


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    """log(1 / (1 + exp(-x))), stable for large |x|."""
    return -np.logaddexp(0.0, -x)


def _per_bit_log_probs(apriori_llrs: np.ndarray, c: Constellation) -> np.ndarray:
    """(n_symbols, |A|, bits) table of log P(c^q = label bit of point a)."""
    L = apriori_llrs.reshape(-1, c.bits_per_symbol)
    labels = c.labels()                                     # (|A|, bps)
    lp0 = _log_sigmoid(L)[:, None, :]                       # P(bit = 0)
    lp1 = _log_sigmoid(-L)[:, None, :]
    return np.where(labels[None, :, :] == 0, lp0, lp1)


def demap_llr(
    m_e: np.ndarray,
    v_e: float | np.ndarray,
    apriori_llrs: np.ndarray | None,
    c: Constellation,
) -> np.ndarray:
    """Extrinsic LLR per coded bit from Gaussian symbol statistics.

    Full-sum demapping (no max-log): each bit's LLR marginalizes the
    Gaussian likelihood over the constellation, weighted by the a-priori
    probabilities of the *other* bits of the same symbol.  Output is
    clamped to +/-LLR_CLAMP.
    """
    m_e = np.asarray(m_e, dtype=complex)
    v = np.asarray(v_e, dtype=float)
    if np.any(v <= 0):
        raise ValueError("extrinsic variance must be positive")
    if apriori_llrs is None:
        apriori_llrs = np.zeros(m_e.size * c.bits_per_symbol)
    apriori_llrs = np.asarray(apriori_llrs, dtype=float)
    if apriori_llrs.size != m_e.size * c.bits_per_symbol:
        raise ValueError("a-priori LLR frame does not match the symbol count")

    v_col = v[:, None] if v.ndim == 1 else v
    loglik = -np.abs(c.points[None, :] - m_e[:, None]) ** 2 / v_col  # (n, |A|)
    bitlogp = _per_bit_log_probs(apriori_llrs, c)                    # (n, |A|, bps)
    total = loglik + bitlogp.sum(axis=2)

    labels = c.labels()
    llrs = np.empty((m_e.size, c.bits_per_symbol))
    for q in range(c.bits_per_symbol):
        without_own = total - bitlogp[:, :, q]
        mask0 = labels[:, q] == 0
        llrs[:, q] = (logsumexp(without_own[:, mask0], axis=1)
                      - logsumexp(without_own[:, ~mask0], axis=1))
    return np.clip(llrs.reshape(-1), -LLR_CLAMP, LLR_CLAMP)


def priors_from_llr(apriori_llrs: np.ndarray | None, c: Constellation,
                    n_symbols: int | None = None) -> np.ndarray:
    """Per-symbol point probabilities as the product of per-bit probabilities."""
    if apriori_llrs is None:
        if n_symbols is None:
            raise ValueError("need n_symbols when no LLRs are given")
        return np.full((n_symbols, c.size), 1.0 / c.size)
    apriori_llrs = np.asarray(apriori_llrs, dtype=float)
    return np.exp(_per_bit_log_probs(apriori_llrs, c).sum(axis=2))
