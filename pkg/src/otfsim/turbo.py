"""Joint iterative detection and decoding for coded frames.

The schedule is a single loop: every outer iteration runs one detector
iteration with the decoder's latest extrinsic information injected as
symbol priors, demaps the detector's pseudo observations into coded-bit
LLRs, decodes once with the SISO decoder, and feeds the decoder
extrinsic back to the detector.  Detector state (messages, symbol
estimates, noise-precision estimate) persists across outer iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import RectSvdChannel, SparseChannelMatrix, SpectralChannel
from .coding import (
    LLR_CLAMP,
    ConvCode,
    bcjr_decode,
    deinterleave,
    demap_llr,
    extrinsic_stats,
    interleave,
    priors_from_llr,
)
from .detectors import (
    AmpDetector,
    RectUampDetector,
    UampDetector,
    uniform_priors,
)
from .modem import Constellation


@dataclass(frozen=True)
class TurboConfig:
    outer_iterations: int = 15
    interleaver_seed: int = 0
    detector_iters_per_outer: int = 1   # >1 enables the nested-loop experiment mode
    freeze_uniform_priors: bool = False  # diagnostic: ignore decoder feedback

    def __post_init__(self):
        if self.outer_iterations < 1:
            raise ValueError("outer_iterations must be >= 1")


@dataclass(frozen=True)
class TurboIterationStats:
    iteration: int
    eps_hat: float | None
    ber_info: float | None   # only when the truth was supplied
    ber_coded: float | None


@dataclass(frozen=True)
class TurboResult:
    decoded_bits: np.ndarray
    info_llrs: np.ndarray
    coded_app: np.ndarray
    iterations: list[TurboIterationStats] = field(default_factory=list)


def make_detector(channel_op, observation, c: Constellation,
                  noise_precision: float | None = None):
    """Instantiate the detector matching the channel-operator form."""
    if isinstance(channel_op, SparseChannelMatrix):
        if noise_precision is None:
            raise ValueError("AMP needs the noise precision")
        return AmpDetector(channel_op, observation, noise_precision, c)
    if isinstance(channel_op, SpectralChannel):
        return UampDetector(channel_op, observation, c, noise_precision)
    if isinstance(channel_op, RectSvdChannel):
        return RectUampDetector(channel_op, observation, c, noise_precision)
    raise TypeError(f"unsupported channel operator {type(channel_op).__name__}")


def turbo_receive(
    observation: np.ndarray,
    channel_op,
    c: Constellation,
    cfg: TurboConfig = TurboConfig(),
    code: ConvCode = ConvCode(),
    noise_precision: float | None = None,
    truth_info_bits: np.ndarray | None = None,
    truth_coded_bits: np.ndarray | None = None,
) -> TurboResult:
    """Run the single-loop turbo schedule and decode one frame.

    ``observation`` is y for an AMP operator and the transformed r for
    the UAMP operators.  When the transmitted bits are supplied the
    per-iteration BER hooks are filled in.  Detector divergence
    propagates as :class:`~otfsim.detectors.DetectorDivergence` with the
    failing iteration index.
    """
    detector = make_detector(channel_op, observation, c, noise_precision)
    n_sym = np.asarray(observation).size
    seed = cfg.interleaver_seed

    decoder_ext = np.zeros(n_sym * c.bits_per_symbol)
    stats: list[TurboIterationStats] = []
    result = None
    for _ in range(cfg.outer_iterations):
        if cfg.freeze_uniform_priors or not np.any(decoder_ext):
            apriori = np.zeros_like(decoder_ext)
            priors = uniform_priors(n_sym, c)
        else:
            apriori = interleave(decoder_ext, seed)
            priors = priors_from_llr(apriori, c)

        for _ in range(cfg.detector_iters_per_outer):
            rec = detector.step(priors)
        m_e, v_e = extrinsic_stats(rec.q, rec.nu_q)
        det_ext = demap_llr(m_e, v_e, apriori, c)

        result = bcjr_decode(deinterleave(det_ext, seed), code=code)
        decoder_ext = np.clip(result.extrinsic, -LLR_CLAMP, LLR_CLAMP)

        ber_info = ber_coded = None
        if truth_info_bits is not None:
            decisions = (result.info_llrs < 0).astype(int)
            ber_info = float(np.mean(decisions != truth_info_bits))
        if truth_coded_bits is not None:
            # truth_coded_bits is the codeword in encoder order (pre-interleave)
            coded_dec = (result.app < 0).astype(int)
            ber_coded = float(np.mean(coded_dec != truth_coded_bits))
        stats.append(TurboIterationStats(rec.iteration, rec.eps_hat, ber_info, ber_coded))

    decoded = (result.info_llrs < 0).astype(int)
    return TurboResult(decoded, result.info_llrs, result.app, stats)
