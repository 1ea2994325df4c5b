"""Monte-Carlo experiment runner: SNR sweeps, error counting, seeding.

Every trial derives its channel, data, noise and interleaver randomness
from independent named substreams of (master_seed, snr, trial), so a
sweep is bit-reproducible regardless of execution order or parallelism.
A detector that diverges is counted as a frame error (its bits are
scored at chance level) and logged; it never aborts a sweep.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from functools import lru_cache

import numpy as np

from .channel import (
    DdChannel,
    RectSvdChannel,
    SpectralChannel,
    build_dd_matrix,
    build_rect_dd_matrix,
    channel_from_json,
    sample_channel,
    simulate_rx,
)
from .coding import ConvCode, conv_encode, interleave
from .detectors import DetectorDivergence
from .grid import OtfsGrid
from .modem import constellation, hard_decision, hard_frame_bits, map_bits
from .turbo import TurboConfig, make_detector, turbo_receive

log = logging.getLogger(__name__)

RESULTS_HEADER = ("snr_db,detector,waveform,coded,P,trials,bit_errors,frame_errors,"
                  "ber,fer,mean_eps_hat_db,wall_s")

# substream identifiers
_CHANNEL, _DATA, _NOISE, _ILV = 0, 1, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 64
    N: int = 16
    subcarrier_spacing_hz: float = 2e3
    carrier_freq_hz: float = 3e9
    waveform: str = "biorthogonal"        # biorthogonal | rectangular
    constellation: str = "qpsk"           # qpsk | 16qam
    num_paths: int = 10
    pdp_alpha: float = 0.0
    k_max: int = 6
    l_max: int = 14
    fractional: bool = True
    detector: str = "uamp"                # amp | uamp | uamp_rect
    coded: bool = False
    snr_grid_db: tuple[float, ...] = (10.0,)
    trials: int = 100
    min_bit_errors: int = 100             # <= 0 disables early stopping
    master_seed: int = 0
    max_iter: int = 15
    trunc_doppler: int | None = None
    workers: int = 1
    channel_file: str | None = None   # fixed channel JSON instead of fresh draws

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.waveform not in ("biorthogonal", "rectangular"):
            raise ValueError(f"unknown waveform {self.waveform!r}")
        if self.detector not in ("amp", "uamp", "uamp_rect"):
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.detector == "uamp_rect" and self.waveform != "rectangular":
            raise ValueError("detector uamp_rect requires the rectangular waveform")
        if list(self.snr_grid_db) != sorted(self.snr_grid_db):
            raise ValueError("snr_grid_db must be sorted ascending")
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known - {"schema"}
        if unknown:
            raise ValueError(f"unknown config key {sorted(unknown)[0]!r}")
        doc = {k: v for k, v in doc.items() if k != "schema"}
        if "snr_grid_db" in doc and np.isscalar(doc["snr_grid_db"]):
            doc["snr_grid_db"] = [doc["snr_grid_db"]]
        return cls(**doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_grid_db"] = list(self.snr_grid_db)
        return d

    @property
    def grid(self) -> OtfsGrid:
        return OtfsGrid(self.M, self.N, self.subcarrier_spacing_hz, self.carrier_freq_hz)


@dataclass(frozen=True)
class BerRecord:
    snr_db: float
    detector: str
    waveform: str
    coded: bool
    num_paths: int
    trials_run: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    mean_eps_hat: float      # linear precision estimate (the known value for AMP)
    wall_time_s: float

    def csv_row(self) -> str:
        eps_db = 10 * np.log10(self.mean_eps_hat) if self.mean_eps_hat > 0 else float("nan")
        return (f"{float(self.snr_db)!r},{self.detector},{self.waveform},{int(self.coded)},"
                f"{self.num_paths},{self.trials_run},{self.bit_errors},{self.frame_errors},"
                f"{float(self.ber)!r},{float(self.fer)!r},{float(eps_db)!r},"
                f"{self.wall_time_s:.3f}")

    def stat_fields(self) -> tuple:
        """Everything except wall-clock time, for determinism checks."""
        return (self.snr_db, self.detector, self.waveform, self.coded, self.num_paths,
                self.trials_run, self.bit_errors, self.frame_errors, self.ber, self.fer,
                self.mean_eps_hat)


def _rng(cfg: ExperimentConfig, snr_db: float, trial: int, stream: int) -> np.random.Generator:
    snr_key = int(round((snr_db + 1000.0) * 1000.0))
    return np.random.default_rng(
        np.random.SeedSequence([cfg.master_seed, snr_key, trial, stream]))


def _operators(cfg: ExperimentConfig, channel: DdChannel):
    """(transmit operator, detector operator) for one realization."""
    if cfg.waveform == "biorthogonal":
        tx_op = SpectralChannel.from_channel(channel, cfg.trunc_doppler)
        det_op = tx_op if cfg.detector != "amp" else build_dd_matrix(channel, cfg.trunc_doppler)
    else:
        tx_op = RectSvdChannel.from_channel(channel)
        det_op = tx_op if cfg.detector != "amp" else build_rect_dd_matrix(channel)
    return tx_op, det_op


@lru_cache(maxsize=8)
def _load_fixed_channel(path: str) -> DdChannel:
    with open(path) as fh:
        return channel_from_json(json.load(fh))


def _frame_setup(cfg: ExperimentConfig, snr_db: float, trial: int):
    """Channel, operators and transmitted frame for one trial."""
    c = constellation(cfg.constellation)
    if cfg.channel_file is not None:
        channel = _load_fixed_channel(cfg.channel_file)
        if (channel.grid.M, channel.grid.N) != (cfg.M, cfg.N):
            raise ValueError("channel_file grid does not match the configured M, N")
    else:
        channel = sample_channel(cfg.grid, cfg.num_paths, cfg.pdp_alpha, cfg.k_max,
                                 cfg.l_max, cfg.fractional,
                                 rng=_rng(cfg, snr_db, trial, _CHANNEL))
    tx_op, det_op = _operators(cfg, channel)
    data_rng = _rng(cfg, snr_db, trial, _DATA)
    ilv_seed = int(_rng(cfg, snr_db, trial, _ILV).integers(0, 2**31))
    code = ConvCode()
    if cfg.coded:
        n_info = code.n_info_bits(cfg.grid.frame_len * c.bits_per_symbol)
        info = data_rng.integers(0, 2, n_info)
        coded_bits = conv_encode(info, code)
        x = map_bits(interleave(coded_bits, ilv_seed), c)
        bits = info
    else:
        bits = data_rng.integers(0, 2, cfg.grid.frame_len * c.bits_per_symbol)
        coded_bits = None
        x = map_bits(bits, c)
    eps = 10 ** (snr_db / 10)
    y, r = simulate_rx(channel, x, eps, cfg.waveform,
                       rng=_rng(cfg, snr_db, trial, _NOISE),
                       trunc_doppler=cfg.trunc_doppler, operator=tx_op)
    obs = y if cfg.detector == "amp" else r
    return c, code, channel, det_op, obs, bits, coded_bits, ilv_seed, eps


def _run_frame(cfg: ExperimentConfig, snr_db: float, trial: int) -> tuple[int, int, float]:
    """(bit errors, frame error flag, final noise-precision estimate)."""
    c, code, _, det_op, obs, bits, coded_bits, ilv_seed, eps = _frame_setup(cfg, snr_db, trial)
    try:
        if cfg.coded:
            res = turbo_receive(obs, det_op, c,
                                TurboConfig(cfg.max_iter, interleaver_seed=ilv_seed),
                                code,
                                noise_precision=eps if cfg.detector == "amp" else None,
                                truth_info_bits=bits, truth_coded_bits=coded_bits)
            errs = int(np.sum(res.decoded_bits != bits))
            eps_hat = res.iterations[-1].eps_hat
        else:
            detector = make_detector(det_op, obs, c,
                                     eps if cfg.detector == "amp" else None)
            rec = None
            for _ in range(cfg.max_iter):
                rec = detector.step()
            errs = int(np.sum(hard_frame_bits(rec.x_hat, c) != bits))
            eps_hat = rec.eps_hat
    except DetectorDivergence as exc:
        log.warning("snr=%.1f trial=%d: %s", snr_db, trial, exc)
        return bits.size // 2, 1, float("nan")
    return errs, int(errs > 0), eps_hat if eps_hat is not None else eps


def run_point(cfg: ExperimentConfig, snr_db: float) -> BerRecord:
    """Accumulate frames at one SNR until the trial or error budget is hit."""
    t0 = time.perf_counter()
    bit_errors = frame_errors = trials_run = 0
    bits_counted = 0
    eps_hats = []
    for trial in range(cfg.trials):
        errs, ferr, eps_hat = _run_frame(cfg, snr_db, trial)
        bit_errors += errs
        frame_errors += ferr
        trials_run += 1
        bits_counted += _bits_per_frame(cfg)
        if np.isfinite(eps_hat):
            eps_hats.append(eps_hat)
        if cfg.min_bit_errors > 0 and bit_errors >= cfg.min_bit_errors:
            break
    return BerRecord(
        snr_db=snr_db, detector=cfg.detector, waveform=cfg.waveform, coded=cfg.coded,
        num_paths=cfg.num_paths, trials_run=trials_run, bit_errors=bit_errors,
        frame_errors=frame_errors, ber=bit_errors / bits_counted,
        fer=frame_errors / trials_run,
        mean_eps_hat=float(np.mean(eps_hats)) if eps_hats else float("nan"),
        wall_time_s=time.perf_counter() - t0,
    )


def _bits_per_frame(cfg: ExperimentConfig) -> int:
    c = constellation(cfg.constellation)
    n_coded = cfg.grid.frame_len * c.bits_per_symbol
    return ConvCode().n_info_bits(n_coded) if cfg.coded else n_coded


def run_sweep(cfg: ExperimentConfig, output_path: str | None = None) -> list[BerRecord]:
    """Map :func:`run_point` over the SNR grid, streaming rows to CSV.

    Rows are flushed as they complete, so an interrupted sweep leaves a
    valid partial results file behind.
    """
    fh = open(output_path, "w") if output_path else None
    try:
        if fh:
            fh.write("# schema=1\n")
            fh.write(f"# config={json.dumps(cfg.to_dict(), sort_keys=True)}\n")
            fh.write(RESULTS_HEADER + "\n")
            fh.flush()
        records = []
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                records = list(pool.map(run_point, [cfg] * len(cfg.snr_grid_db),
                                        cfg.snr_grid_db))
            if fh:
                for rec in records:
                    fh.write(rec.csv_row() + "\n")
                fh.flush()
        else:
            for snr in cfg.snr_grid_db:
                rec = run_point(cfg, snr)
                records.append(rec)
                if fh:
                    fh.write(rec.csv_row() + "\n")
                    fh.flush()
        return records
    finally:
        if fh:
            fh.close()


# ---------------------------------------------------------------------------
# Per-iteration traces (convergence plots)
# ---------------------------------------------------------------------------

DETECTOR_TRACE_HEADER = "trial,iter,eps_hat,mean_nu_x,ser_vs_truth"
TURBO_TRACE_HEADER = "iter,ber_info,ber_coded,eps_hat"


def run_detector_trace(cfg: ExperimentConfig, snr_db: float, trial: int = 0) -> list[dict]:
    """Per-iteration detector convergence for one uncoded seeded frame."""
    c, _, _, det_op, obs, bits, _, _, eps = _frame_setup(
        cfg if not cfg.coded else ExperimentConfig.from_dict({**cfg.to_dict(), "coded": False}),
        snr_db, trial)
    detector = make_detector(det_op, obs, c, eps if cfg.detector == "amp" else None)
    tx_idx = _symbol_indices(bits, c)
    rows = []
    for _ in range(cfg.max_iter):
        rec = detector.step()
        ser = float(np.mean(hard_decision(rec.x_hat, c) != tx_idx))
        rows.append({
            "trial": trial, "iter": rec.iteration,
            "eps_hat": rec.eps_hat if rec.eps_hat is not None else eps,
            "mean_nu_x": float(np.mean(rec.nu_x)), "ser_vs_truth": ser,
        })
    return rows


def run_turbo_trace(cfg: ExperimentConfig, snr_db: float, trial: int = 0) -> list[dict]:
    """Per-outer-iteration BER trace for one coded seeded frame."""
    if not cfg.coded:
        raise ValueError("turbo trace needs a coded config")
    c, code, _, det_op, obs, bits, coded_bits, ilv_seed, eps = _frame_setup(cfg, snr_db, trial)
    res = turbo_receive(obs, det_op, c, TurboConfig(cfg.max_iter, interleaver_seed=ilv_seed),
                        code, noise_precision=eps if cfg.detector == "amp" else None,
                        truth_info_bits=bits, truth_coded_bits=coded_bits)
    return [{
        "iter": st.iteration, "ber_info": st.ber_info, "ber_coded": st.ber_coded,
        "eps_hat": st.eps_hat if st.eps_hat is not None else eps,
    } for st in res.iterations]


def write_trace_csv(rows: list[dict], header: str, path: str, cfg: ExperimentConfig) -> None:
    with open(path, "w") as fh:
        fh.write("# schema=1\n")
        fh.write(f"# config={json.dumps(cfg.to_dict(), sort_keys=True)}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(row[k])) if not isinstance(row[k], int) else str(row[k])
                              for k in header.split(",")) + "\n")


def _symbol_indices(bits: np.ndarray, c) -> np.ndarray:
    groups = np.asarray(bits, dtype=int).reshape(-1, c.bits_per_symbol)
    shifts = np.arange(c.bits_per_symbol - 1, -1, -1)
    return (groups << shifts[None, :]).sum(axis=1)


def read_results_csv(path: str) -> list[dict]:
    """Parse a results CSV back into dict rows (tests and tooling)."""
    rows = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(dict(zip(header, line.split(","))))
    return rows
