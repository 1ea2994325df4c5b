"""Delay-Doppler (OTFS) link simulation with AMP/UAMP iterative detection.

The package covers the full receive chain: random delay-Doppler channels
and their sparse / spectral / block-SVD matrix forms, bit mapping and
grid transforms, the AMP and UAMP detectors, a convolutional code with
an exact SISO decoder, the turbo receiver tying them together, a
state-evolution BER predictor, and a Monte-Carlo sweep harness with a
CLI front end.
"""

from .channel import (
    ChannelPath,
    DdChannel,
    RectSvdChannel,
    SparseChannelMatrix,
    SpectralChannel,
    apply_bccb,
    bccb_spectrum,
    build_dd_matrix,
    build_dd_matrix_integer,
    build_rect_blocks,
    build_rect_dd_matrix,
    channel_from_json,
    channel_to_json,
    doppler_spread_coeff,
    rect_block_svd,
    sample_channel,
    simulate_rx,
)
from .coding import (
    ConvCode,
    bcjr_decode,
    conv_encode,
    deinterleave,
    demap_llr,
    extrinsic_stats,
    interleave,
    priors_from_llr,
)
from .detectors import (
    AmpDetector,
    DetectorDivergence,
    RectUampDetector,
    UampDetector,
    amp_detect,
    discrete_posterior,
    uamp_detect,
    uamp_rect_detect,
)
from .grid import OtfsGrid, doppler_index_for_speed
from .harness import BerRecord, ExperimentConfig, run_point, run_sweep
from .modem import Constellation, constellation, hard_decision, isfft, map_bits, sfft
from .state_evolution import GTable, build_g_table, load_gtable, save_gtable, se_predict
from .turbo import TurboConfig, TurboResult, turbo_receive

__version__ = "0.1.0"
