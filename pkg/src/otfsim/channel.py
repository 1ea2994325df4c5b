"""Delay-Doppler channel generation and effective-matrix construction.

A propagation channel is a small set of paths, each with a complex gain,
an integer delay tap, an integer Doppler tap and an optional fractional
Doppler offset.  The effective frame-level matrix H (size MN x MN) comes
in three interchangeable forms:

* :class:`SparseChannelMatrix` -- explicit sparse H, used by the AMP
  detector and as the reference for everything else;
* :class:`SpectralChannel` -- the eigenvalue vector d of H under the
  unitary 2D DFT (H is block circulant with circulant blocks for the
  bi-orthogonal waveform), enabling matrix-free FFT products;
* :class:`RectSvdChannel` -- per-block SVD factors of the block-diagonal
  time-domain channel arising with the rectangular (CP per sub-block)
  waveform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import OtfsGrid, dd_fft2, to_grid, to_vector

# ---------------------------------------------------------------------------
# Channel description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelPath:
    """One resolvable propagation path."""

    gain: complex
    delay_idx: int              # integer delay tap in [0, l_max]
    doppler_idx: int            # integer Doppler tap in [-k_max, k_max]
    frac_doppler: float = 0.0   # fractional Doppler offset in [-1/2, 1/2]

    def __post_init__(self):
        if not -0.5 <= self.frac_doppler <= 0.5:
            raise ValueError(f"fractional Doppler {self.frac_doppler} outside [-1/2, 1/2]")


@dataclass(frozen=True)
class DdChannel:
    """A set of paths together with the grid they live on."""

    paths: tuple[ChannelPath, ...]
    grid: OtfsGrid

    def __post_init__(self):
        # Doppler taps are deliberately not range-checked here: they wrap
        # mod N, and hand-built structure checks use taps beyond N/2.
        # sample_channel enforces the physical k_max < N/2 bound.
        if len(self.paths) < 1:
            raise ValueError("channel needs at least one path")
        for p in self.paths:
            if not 0 <= p.delay_idx < self.grid.M:
                raise ValueError(f"delay tap {p.delay_idx} outside [0, M)")

    @property
    def num_paths(self) -> int:
        return len(self.paths)


def sample_channel(
    grid: OtfsGrid,
    num_paths: int,
    pdp_alpha: float = 0.0,
    k_max: int = 6,
    l_max: int = 14,
    fractional: bool = True,
    rng: int | np.random.Generator = 0,
    distinct_delays: bool = True,
) -> DdChannel:
    """Draw a random channel realization.

    The first path sits at delay 0; the remaining delays are uniform over
    [1, l_max] (without replacement unless ``distinct_delays`` is False).
    Doppler taps are uniform over [-k_max, k_max], fractional offsets
    uniform over [-1/2, 1/2] when enabled.  Gains are zero-mean complex
    Gaussian with variances exp(-pdp_alpha * l_i) normalized to sum to 1
    over the drawn paths (normalized power-delay profile).
    """
    if num_paths < 1:
        raise ValueError("num_paths must be >= 1")
    if l_max >= grid.M:
        raise ValueError(f"l_max={l_max} must be < M={grid.M}")
    if k_max >= grid.N / 2:
        raise ValueError(f"k_max={k_max} must be < N/2={grid.N / 2}")
    if distinct_delays and num_paths - 1 > l_max:
        raise ValueError(f"cannot draw {num_paths - 1} distinct delays from [1, {l_max}]")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    delays = np.zeros(num_paths, dtype=int)
    if num_paths > 1:
        choices = np.arange(1, l_max + 1)
        delays[1:] = gen.choice(choices, size=num_paths - 1, replace=not distinct_delays)
    dopplers = gen.integers(-k_max, k_max + 1, size=num_paths)
    kappas = gen.uniform(-0.5, 0.5, size=num_paths) if fractional else np.zeros(num_paths)

    weights = np.exp(-pdp_alpha * delays)
    variances = weights / weights.sum()
    gains = np.sqrt(variances / 2) * (
        gen.standard_normal(num_paths) + 1j * gen.standard_normal(num_paths)
    )

    paths = tuple(
        ChannelPath(complex(gains[i]), int(delays[i]), int(dopplers[i]), float(kappas[i]))
        for i in range(num_paths)
    )
    return DdChannel(paths, grid)


# ---------------------------------------------------------------------------
# Doppler spreading coefficient
# ---------------------------------------------------------------------------


def doppler_spread_coeff(c: int, path: ChannelPath, grid: OtfsGrid) -> complex:
    """Weight with which a path leaks into the Doppler bin offset c.

    For a path with fractional offset kappa the energy received at Doppler
    distance c from the path's integer tap is a Dirichlet-kernel ratio;
    for kappa = 0 it collapses to 1 at c = 0 (mod N) and 0 elsewhere.
    The c = -kappa (mod N) point is a removable 0/0 singularity and is
    evaluated as its limit.
    """
    N = grid.N
    if not -N < c < N:
        raise ValueError(f"Doppler offset {c} outside (-{N}, {N})")
    u = -c - path.frac_doppler
    phase = np.exp(-2j * np.pi * path.delay_idx * (path.doppler_idx + path.frac_doppler)
                   / (grid.M * N))
    if abs(u - N * round(u / N)) < 1e-12:
        return complex(phase)
    ratio = (1.0 - np.exp(-2j * np.pi * u)) / (1.0 - np.exp(-2j * np.pi * u / N))
    return complex(ratio / N * phase)


# ---------------------------------------------------------------------------
# Sparse effective matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparseChannelMatrix:
    """Explicit sparse H in the delay-Doppler domain."""

    mat: sp.csr_matrix
    grid: OtfsGrid

    @property
    def shape(self) -> tuple[int, int]:
        return self.mat.shape

    def nonzeros_per_row(self) -> np.ndarray:
        return np.diff(self.mat.indptr)

    def first_column(self) -> np.ndarray:
        return np.asarray(self.mat[:, [0]].todense()).ravel()

    def to_dense(self) -> np.ndarray:
        return self.mat.toarray()

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.mat @ x


def _shift_entries(grid: OtfsGrid, block_shift: int, delay_shift: int):
    """Row/column indices of C_{block_shift}(N) kron (delay shift matrix)."""
    M, N = grid.M, grid.N
    j = np.arange(M * N)
    k, l = j // M, j % M
    cols = ((k - block_shift) % N) * M + (l - delay_shift) % M
    return j, cols


def build_dd_matrix(channel: DdChannel, trunc_doppler: int | None = None) -> SparseChannelMatrix:
    """Assemble H for the bi-orthogonal waveform, fractional Doppler allowed.

    ``trunc_doppler`` truncates the Doppler-leakage sum to offsets
    |c| <= trunc_doppler; the default floor(N/2) covers every Doppler bin
    exactly once (offsets that alias onto an already-covered bin are
    skipped, so no bin is double counted).
    """
    grid = channel.grid
    M, N = grid.M, grid.N
    Ni = N // 2 if trunc_doppler is None else trunc_doppler
    if Ni >= N:
        raise ValueError(f"trunc_doppler={Ni} must be < N={N}")

    rows, cols, data = [], [], []
    for path in channel.paths:
        seen = set()
        for c in range(-Ni, Ni + 1):
            if c % N in seen:
                continue
            seen.add(c % N)
            coeff = path.gain * doppler_spread_coeff(c, path, grid)
            if coeff == 0:
                continue
            block = (path.doppler_idx - c) % N
            r, cl = _shift_entries(grid, block, path.delay_idx)
            rows.append(r)
            cols.append(cl)
            data.append(np.full(M * N, coeff, dtype=complex))
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(M * N, M * N),
    ).tocsr()
    return SparseChannelMatrix(mat, grid)


def build_dd_matrix_integer(channel: DdChannel) -> SparseChannelMatrix:
    """Assemble H for integer Doppler taps (all fractional offsets zero)."""
    grid = channel.grid
    M, N = grid.M, grid.N
    rows, cols, data = [], [], []
    for path in channel.paths:
        if path.frac_doppler != 0.0:
            raise ValueError("integer-Doppler build requires frac_doppler == 0 on every path")
        coeff = path.gain * np.exp(
            -2j * np.pi * path.delay_idx * path.doppler_idx / (M * N)
        )
        r, cl = _shift_entries(grid, path.doppler_idx % N, path.delay_idx)
        rows.append(r)
        cols.append(cl)
        data.append(np.full(M * N, coeff, dtype=complex))
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(M * N, M * N),
    ).tocsr()
    return SparseChannelMatrix(mat, grid)


# ---------------------------------------------------------------------------
# Spectral (BCCB) form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralChannel:
    """Eigenvalues d of a BCCB channel matrix under F = F_N kron F_M."""

    d: np.ndarray          # complex, length MN
    grid: OtfsGrid
    lam: np.ndarray = field(init=False)  # |d|^2

    def __post_init__(self):
        object.__setattr__(self, "lam", np.abs(self.d) ** 2)

    @classmethod
    def from_channel(cls, channel: DdChannel, trunc_doppler: int | None = None) -> SpectralChannel:
        return bccb_spectrum(bccb_first_column(channel, trunc_doppler), channel.grid)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-free H @ x via forward/inverse 2D FFT."""
        return apply_bccb(self, x)


def bccb_first_column(channel: DdChannel, trunc_doppler: int | None = None) -> np.ndarray:
    """First column of the bi-orthogonal H without assembling the matrix."""
    grid = channel.grid
    M, N = grid.M, grid.N
    Ni = N // 2 if trunc_doppler is None else trunc_doppler
    col = np.zeros(M * N, dtype=complex)
    for path in channel.paths:
        seen = set()
        for c in range(-Ni, Ni + 1):
            if c % N in seen:
                continue
            seen.add(c % N)
            block = (path.doppler_idx - c) % N
            col[block * M + path.delay_idx] += path.gain * doppler_spread_coeff(c, path, grid)
    return col


def bccb_spectrum(h_first_column: np.ndarray, grid: OtfsGrid) -> SpectralChannel:
    """Diagonalize a BCCB matrix from its first column.

    Returns d such that F H F^H = diag(d) with F the unitary 2D DFT; d is
    the unnormalized 2D FFT of the first column reshaped to M x N.
    """
    h_first_column = np.asarray(h_first_column, dtype=complex)
    if h_first_column.size != grid.frame_len:
        raise ValueError("first column length does not match the grid")
    C = to_grid(h_first_column, grid.M, grid.N)
    d = to_vector(np.fft.fft2(C))
    return SpectralChannel(d, grid)


def apply_bccb(spec: SpectralChannel, x: np.ndarray) -> np.ndarray:
    """Compute H @ x as F^H (d . (F x)) with unitary 2D FFTs."""
    M, N = spec.grid.M, spec.grid.N
    fx = np.fft.fft2(to_grid(x, M, N)) / np.sqrt(M * N)
    hx = np.fft.ifft2(to_grid(spec.d * to_vector(fx), M, N)) * np.sqrt(M * N)
    return to_vector(hx)


def build_rect_dd_matrix(channel: DdChannel) -> SparseChannelMatrix:
    """Explicit DD-domain matrix for the rectangular waveform.

    Composes the block-diagonal time channel with the slot DFTs,
    (F_N kron I_M) H_T (F_N^H kron I_M); each path contributes N entries
    per row (the Doppler spreading of the per-slot phase ramp).
    """
    grid = channel.grid
    M, N = grid.M, grid.N
    fn = np.fft.fft(np.eye(N)) / np.sqrt(N)
    p = np.arange(M)
    n = np.arange(N)[:, None]
    rows, cols, data = [], [], []
    row_k = np.repeat(np.arange(N), N * M)
    col_k = np.tile(np.repeat(np.arange(N), M), N)
    pp = np.tile(p, N * N)
    for path in channel.paths:
        ramp = path.gain * np.exp(
            2j * np.pi * (path.doppler_idx + path.frac_doppler)
            * (n * M + (p - path.delay_idx)[None, :]) / (M * N)
        )  # (N slots, M samples)
        block = np.einsum("kn,np,qn->kqp", fn, ramp, fn.conj())  # (k, k', p)
        rows.append(row_k * M + pp)
        cols.append(col_k * M + (pp - path.delay_idx) % M)
        data.append(block.reshape(-1))
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(M * N, M * N),
    ).tocsr()
    return SparseChannelMatrix(mat, grid)


# ---------------------------------------------------------------------------
# Rectangular waveform: block-diagonal time channel and its SVD
# ---------------------------------------------------------------------------


def build_rect_blocks(channel: DdChannel) -> np.ndarray:
    """Per-slot M x M time-domain channel blocks for the rectangular waveform.

    With a cyclic prefix per length-M sub-block each path wraps circularly
    in delay; the Doppler phase advances with the global sample index
    n*M + p - l so it stays continuous across slots.
    Returns an (N, M, M) array.
    """
    grid = channel.grid
    M, N = grid.M, grid.N
    blocks = np.zeros((N, M, M), dtype=complex)
    p = np.arange(M)
    n = np.arange(N)[:, None]
    for path in channel.paths:
        cols = (p - path.delay_idx) % M
        t_global = n * M + (p - path.delay_idx)[None, :]
        phase = np.exp(2j * np.pi * (path.doppler_idx + path.frac_doppler) * t_global / (M * N))
        blocks[:, p, cols] += path.gain * phase
    return blocks


@dataclass(frozen=True)
class RectSvdChannel:
    """Block-wise SVD factors of the rectangular-waveform time channel.

    Each block satisfies ``blocks[n] = u[n] @ diag(s[n]) @ vh[n]``; the
    stacked singular values form the effective gain vector d (>= 0) of
    the unitarily transformed model.
    """

    u: np.ndarray        # (N, M, M)
    s: np.ndarray        # (N, M), descending per block
    vh: np.ndarray       # (N, M, M)
    blocks: np.ndarray   # (N, M, M) original time blocks
    grid: OtfsGrid

    @property
    def d(self) -> np.ndarray:
        return self.s.reshape(-1)

    @property
    def lam(self) -> np.ndarray:
        return self.d ** 2

    @classmethod
    def from_channel(cls, channel: DdChannel) -> RectSvdChannel:
        return rect_block_svd(build_rect_blocks(channel), channel.grid)

    def apply_vh_blocks(self, w: np.ndarray) -> np.ndarray:
        """Right SVD factor applied block by block (w -> vh[n] @ w_n)."""
        W = w.reshape(self.grid.N, self.grid.M)
        return np.einsum("nij,nj->ni", self.vh, W).reshape(-1)

    def apply_v_blocks(self, w: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`apply_vh_blocks` (w -> vh[n]^H @ w_n)."""
        W = w.reshape(self.grid.N, self.grid.M)
        return np.einsum("nji,nj->ni", self.vh.conj(), W).reshape(-1)

    def apply_uh_blocks(self, w: np.ndarray) -> np.ndarray:
        W = w.reshape(self.grid.N, self.grid.M)
        return np.einsum("nji,nj->ni", self.u.conj(), W).reshape(-1)


def rect_block_svd(blocks: np.ndarray, grid: OtfsGrid) -> RectSvdChannel:
    """SVD each time block; raises if LAPACK fails to converge."""
    try:
        u, s, vh = np.linalg.svd(blocks)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("block SVD did not converge") from exc
    return RectSvdChannel(u, s, vh, blocks, grid)


# ---------------------------------------------------------------------------
# Transmission
# ---------------------------------------------------------------------------


def _awgn(size: int, noise_precision: float, rng: np.random.Generator) -> np.ndarray:
    noise_precision = float(noise_precision)
    if np.isinf(noise_precision):
        return np.zeros(size, dtype=complex)
    sigma = np.sqrt(1.0 / noise_precision / 2.0)
    return sigma * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def dd_to_timeblocks(x: np.ndarray, grid: OtfsGrid) -> np.ndarray:
    """(F_N^H kron I_M) x, returned in block-major (N, M) layout."""
    X = to_grid(x, grid.M, grid.N)
    return (np.fft.ifft(X, axis=1) * np.sqrt(grid.N)).T


def timeblocks_to_dd(W: np.ndarray, grid: OtfsGrid) -> np.ndarray:
    """(F_N kron I_M) w for w given in block-major (N, M) layout."""
    return to_vector(np.fft.fft(W.T, axis=1) / np.sqrt(grid.N))


def simulate_rx(
    channel: DdChannel,
    x: np.ndarray,
    noise_precision: float,
    waveform: str = "biorthogonal",
    rng: int | np.random.Generator = 0,
    trunc_doppler: int | None = None,
    operator=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pass a DD-domain frame through the channel, adding white noise.

    Returns (y, r): the DD-domain observation y = H x + w and the
    unitarily transformed observation r consumed by the UAMP detectors
    (r = F y for the bi-orthogonal waveform, r = U^H (F_N^H kron I_M) y
    for the rectangular one).  Deterministic given the rng seed.
    ``operator`` may carry a prebuilt SpectralChannel / RectSvdChannel to
    avoid rebuilding it per call.
    """
    noise_precision = float(noise_precision)
    if noise_precision <= 0:
        raise ValueError("noise_precision must be positive")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    x = np.asarray(x, dtype=complex)
    grid = channel.grid
    if x.size != grid.frame_len:
        raise ValueError("frame length does not match the grid")

    if waveform == "biorthogonal":
        spec = operator if operator is not None else SpectralChannel.from_channel(channel, trunc_doppler)
        y = apply_bccb(spec, x) + _awgn(x.size, noise_precision, gen)
        r = dd_fft2(y, grid.M, grid.N)
        return y, r
    if waveform == "rectangular":
        svd = operator if operator is not None else RectSvdChannel.from_channel(channel)
        w = dd_to_timeblocks(x, grid)
        u_t = np.einsum("nij,nj->ni", svd.blocks, w)
        y = timeblocks_to_dd(u_t, grid) + _awgn(x.size, noise_precision, gen)
        r = svd.apply_uh_blocks(dd_to_timeblocks(y, grid).reshape(-1))
        return y, r
    raise ValueError(f"unknown waveform {waveform!r}")


# ---------------------------------------------------------------------------
# JSON channel dump format (schema=1)
# ---------------------------------------------------------------------------


def channel_to_json(channel: DdChannel) -> dict:
    return {
        "schema": 1,
        "grid": {
            "M": channel.grid.M,
            "N": channel.grid.N,
            "subcarrier_spacing_hz": channel.grid.subcarrier_spacing_hz,
            "carrier_freq_hz": channel.grid.carrier_freq_hz,
        },
        "paths": [
            {
                "gain_re": p.gain.real,
                "gain_im": p.gain.imag,
                "l": p.delay_idx,
                "k": p.doppler_idx,
                "kappa": p.frac_doppler,
            }
            for p in channel.paths
        ],
    }


def channel_from_json(doc: dict) -> DdChannel:
    if doc.get("schema") != 1:
        raise ValueError(f"unsupported channel schema {doc.get('schema')!r}")
    g = doc["grid"]
    grid = OtfsGrid(int(g["M"]), int(g["N"]),
                    float(g["subcarrier_spacing_hz"]), float(g["carrier_freq_hz"]))
    paths = tuple(
        ChannelPath(complex(p["gain_re"], p["gain_im"]), int(p["l"]), int(p["k"]),
                    float(p["kappa"]))
        for p in doc["paths"]
    )
    return DdChannel(paths, grid)
