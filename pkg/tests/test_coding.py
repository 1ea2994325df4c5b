import numpy as np
import pytest
from scipy.special import logsumexp

from otfsim.coding import (
    LLR_CLAMP,
    ConvCode,
    bcjr_decode,
    conv_encode,
    deinterleave,
    demap_llr,
    extrinsic_from_posterior,
    extrinsic_stats,
    interleave,
    priors_from_llr,
)
from otfsim.modem import constellation

from .oracles import demap_llr_highprec

QPSK = constellation("qpsk")
QAM16 = constellation("16qam")


def exhaustive_app(ltot, n_info, code=ConvCode()):
    """Codeword-enumeration APP LLRs for small frames."""
    msgs = (np.arange(2 ** n_info)[:, None] >> np.arange(n_info - 1, -1, -1)[None, :]) & 1
    cws = np.array([conv_encode(m, code) for m in msgs])
    logp = ((1 - 2 * cws) * ltot[None, :] / 2).sum(axis=1)
    app = np.array([
        logsumexp(logp[cws[:, j] == 0]) - logsumexp(logp[cws[:, j] == 1])
        for j in range(cws.shape[1])
    ])
    info = np.array([
        logsumexp(logp[msgs[:, j] == 0]) - logsumexp(logp[msgs[:, j] == 1])
        for j in range(n_info)
    ])
    return app, info


# ---------------------------------------------------------------------------
# encoder
# ---------------------------------------------------------------------------


def test_all_zero_codeword():
    assert conv_encode(np.zeros(10, dtype=int)).sum() == 0


def test_impulse_response():
    # single 1: output pairs (11, 01, 11), zeros afterwards
    out = conv_encode(np.array([1, 0, 0, 0, 0]), ConvCode(terminated=False))
    assert list(out[:6]) == [1, 1, 0, 1, 1, 1]
    assert out[6:].sum() == 0


def test_termination_returns_to_zero_state():
    code = ConvCode()
    rng = np.random.default_rng(0)
    u = rng.integers(0, 2, 20)
    coded = conv_encode(u, code)
    assert coded.size == (20 + code.memory) * 2
    # replaying the trellis must end in state 0
    state = 0
    full = np.concatenate([u, np.zeros(code.memory, dtype=int)])
    for b in full:
        state = code.next_state[state, b]
    assert state == 0


def test_info_length_accounting():
    code = ConvCode()
    assert code.n_info_bits(2048) == 1022
    with pytest.raises(ValueError):
        code.n_info_bits(5)


# ---------------------------------------------------------------------------
# BCJR
# ---------------------------------------------------------------------------


def test_bcjr_zero_input_zero_output():
    res = bcjr_decode(np.zeros(24), np.zeros(24))
    assert np.allclose(res.extrinsic, 0.0)
    assert np.allclose(res.app, 0.0)


def test_bcjr_matches_exhaustive_enumeration_16_info_bits():
    rng = np.random.default_rng(3)
    for trial in range(20):
        ch = rng.normal(0, 2, 36)
        ap = rng.normal(0, 1, 36)
        res = bcjr_decode(ch, ap)
        app_ref, info_ref = exhaustive_app(ch + ap, 16)
        assert np.max(np.abs(res.app - app_ref)) <= 1e-9
        assert np.max(np.abs(res.info_llrs - info_ref)) <= 1e-9


def test_bcjr_decodes_noiseless_codeword():
    rng = np.random.default_rng(5)
    u = rng.integers(0, 2, 64)
    coded = conv_encode(u)
    res = bcjr_decode(25.0 * (1 - 2 * coded.astype(float)))
    assert np.array_equal((res.info_llrs < 0).astype(int), u)


def test_bcjr_extrinsic_excludes_own_apriori():
    # changing one bit's a-priori must leave that bit's extrinsic unchanged
    rng = np.random.default_rng(9)
    ch = rng.normal(0, 1.5, 28)
    ap = rng.normal(0, 1.0, 28)
    res1 = bcjr_decode(ch, ap)
    ap2 = ap.copy()
    ap2[5] += 2.5
    res2 = bcjr_decode(ch, ap2)
    assert res2.extrinsic[5] == pytest.approx(res1.extrinsic[5], abs=1e-9)


def test_bcjr_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        bcjr_decode(np.zeros(10), np.zeros(12))


# ---------------------------------------------------------------------------
# interleaver
# ---------------------------------------------------------------------------


def test_interleaver_round_trip_many_seeds():
    rng = np.random.default_rng(1)
    for seed in range(10):
        v = rng.normal(size=257)
        assert np.array_equal(deinterleave(interleave(v, seed), seed), v)


def test_interleaver_is_a_permutation():
    v = np.arange(100)
    out = interleave(v, 42)
    assert np.array_equal(np.sort(out), v)
    assert not np.array_equal(out, v)


def test_different_seeds_differ():
    v = np.arange(64)
    assert not np.array_equal(interleave(v, 1), interleave(v, 2))


# ---------------------------------------------------------------------------
# symbol extrinsic statistics
# ---------------------------------------------------------------------------


def test_extrinsic_stats_passthrough():
    q = np.array([1 + 1j, 2.0])
    m, v = extrinsic_stats(q, 0.3)
    assert np.array_equal(m, q) and v == 0.3
    m, v = extrinsic_stats(q, np.array([0.3, 0.4]))
    assert np.array_equal(v, [0.3, 0.4])


def test_extrinsic_pole_flags_no_information():
    m, v = extrinsic_from_posterior(np.array([1 + 0j]), np.array([0.5]),
                                    np.array([0.2 + 0j]), np.array([0.5]))
    assert np.isinf(v[0])


def test_extrinsic_gaussian_product_identity():
    # combining the extrinsic with the prior must reproduce the posterior
    rng = np.random.default_rng(2)
    m_post = rng.normal(size=50) + 1j * rng.normal(size=50)
    v_post = rng.uniform(0.1, 0.4, 50)
    m_pri = rng.normal(size=50) + 1j * rng.normal(size=50)
    v_pri = v_post + rng.uniform(0.1, 1.0, 50)
    m_e, v_e = extrinsic_from_posterior(m_post, v_post, m_pri, v_pri)
    v_back = 1.0 / (1.0 / v_e + 1.0 / v_pri)
    m_back = v_back * (m_e / v_e + m_pri / v_pri)
    assert np.allclose(v_back, v_post, atol=1e-10)
    assert np.allclose(m_back, m_post, atol=1e-9)


# ---------------------------------------------------------------------------
# demapping
# ---------------------------------------------------------------------------


def test_demap_qpsk_uniform_priors_closed_form():
    rng = np.random.default_rng(4)
    m = rng.normal(size=30) + 1j * rng.normal(size=30)
    v = 0.6
    llr = demap_llr(m, v, None, QPSK)
    expected = np.clip(np.stack([2 * np.sqrt(2) * m.real / v,
                                 2 * np.sqrt(2) * m.imag / v], axis=1).reshape(-1),
                       -LLR_CLAMP, LLR_CLAMP)
    assert np.allclose(llr, expected, atol=1e-10)


def test_demap_saturates_on_exact_point():
    m = np.array([QPSK.points[0b10]])
    llr = demap_llr(m, 1e-8, None, QPSK)
    assert llr[0] == -LLR_CLAMP  # first bit of label 10 is 1
    assert llr[1] == +LLR_CLAMP


def test_demap_16qam_matches_high_precision_oracle():
    rng = np.random.default_rng(8)
    m = 0.8 * (rng.normal(size=6) + 1j * rng.normal(size=6))
    v = 0.7
    ap = rng.normal(0, 1.5, 24)
    got = demap_llr(m, v, ap, QAM16)
    ref = demap_llr_highprec(m, v, ap, QAM16)
    assert np.max(np.abs(got - ref)) <= 1e-9


def test_demap_rejects_nonpositive_variance():
    with pytest.raises(ValueError):
        demap_llr(np.array([0j]), 0.0, None, QPSK)


# ---------------------------------------------------------------------------
# symbol priors
# ---------------------------------------------------------------------------


def test_priors_zero_llrs_are_uniform():
    pr = priors_from_llr(np.zeros(8), QPSK)
    assert np.allclose(pr, 0.25, atol=1e-12)


def test_priors_large_llrs_select_one_point():
    # strong LLRs matching label 10 (first bit 1, second bit 0)
    L = np.array([-LLR_CLAMP, +LLR_CLAMP])
    pr = priors_from_llr(L, QPSK)
    assert pr[0, 0b10] == pytest.approx(1.0, abs=1e-9)


def test_priors_rows_sum_to_one():
    rng = np.random.default_rng(6)
    for c in (QPSK, QAM16):
        L = rng.normal(0, 4, 20 * c.bits_per_symbol)
        pr = priors_from_llr(L, c)
        assert np.max(np.abs(pr.sum(axis=1) - 1)) <= 1e-12


def test_demap_priors_round_trip_identity():
    # LLR -> prior -> (point-mass likelihood) -> LLR is the identity
    # inside the clamp-free range
    rng = np.random.default_rng(10)
    L = rng.normal(0, 2, 12)
    pr = priors_from_llr(L, QPSK)
    # place the observation far from every point with a huge variance so
    # the likelihood term vanishes and only the priors survive
    m = np.zeros(6, dtype=complex)
    back = demap_llr(m, 1e12, L, QPSK)
    # demap excludes the own-bit prior, so recombine:
    # L_total = L_e(from other bits alone) ... for the factorized QPSK
    # mapping the likelihood&others cancel and L_e must be ~0
    assert np.max(np.abs(back)) <= 1e-6
    # and the prior product evaluated on the labels reproduces the bitwise
    # probabilities
    p0 = 1 / (1 + np.exp(-L.reshape(6, 2)))
    labels = QPSK.labels()
    for j in range(6):
        for a in range(4):
            want = np.prod([p0[j, q] if labels[a, q] == 0 else 1 - p0[j, q]
                            for q in range(2)])
            assert pr[j, a] == pytest.approx(want, abs=1e-12)
