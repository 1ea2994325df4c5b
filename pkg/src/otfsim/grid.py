"""OTFS frame geometry and delay-Doppler indexing.

One OTFS frame carries M*N symbols on an M (delay) by N (Doppler) grid.
A grid point (k, l) with Doppler index k and delay index l maps to the
flat index j = k*M + l, i.e. vectors are stored delay-fastest.  All 2D
transforms below use that same column-major (order='F') convention.
"""

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class OtfsGrid:
    """Dimensions and physical parameters of one OTFS frame."""

    M: int                          # delay bins / subcarriers
    N: int                          # Doppler bins / time slots
    subcarrier_spacing_hz: float = 2e3
    carrier_freq_hz: float = 3e9

    def __post_init__(self):
        if self.M < 2 or self.N < 2:
            raise ValueError(f"grid needs M >= 2 and N >= 2, got M={self.M}, N={self.N}")
        if self.subcarrier_spacing_hz <= 0 or self.carrier_freq_hz <= 0:
            raise ValueError("subcarrier spacing and carrier frequency must be positive")

    @property
    def frame_len(self) -> int:
        return self.M * self.N

    @property
    def symbol_duration_s(self) -> float:
        """Time-slot duration T = 1/subcarrier spacing."""
        return 1.0 / self.subcarrier_spacing_hz

    @property
    def delay_resolution_s(self) -> float:
        return 1.0 / (self.M * self.subcarrier_spacing_hz)

    @property
    def doppler_resolution_hz(self) -> float:
        return self.subcarrier_spacing_hz / self.N


def doppler_index_for_speed(grid: OtfsGrid, speed_kmh: float) -> int:
    """Largest Doppler bin index reached by a mobile at the given speed."""
    doppler_hz = grid.carrier_freq_hz * (speed_kmh / 3.6) / SPEED_OF_LIGHT
    return int(round(doppler_hz / grid.doppler_resolution_hz))


def dd_index(k: int, l: int, M: int) -> int:
    """Flat index of grid point (Doppler k, delay l)."""
    return k * M + l


def dd_unindex(j: int, M: int) -> tuple[int, int]:
    """Inverse of :func:`dd_index`: flat index -> (k, l)."""
    return j // M, j % M


def to_grid(x: np.ndarray, M: int, N: int) -> np.ndarray:
    """Reshape a length-M*N vector to an M x N grid, delay along rows."""
    x = np.asarray(x)
    if x.size != M * N:
        raise ValueError(f"vector length {x.size} does not match {M}x{N} grid")
    return x.reshape((M, N), order="F")


def to_vector(X: np.ndarray) -> np.ndarray:
    """Flatten an M x N grid back to a vector (inverse of :func:`to_grid`)."""
    return np.asarray(X).reshape(-1, order="F")


def dd_fft2(x: np.ndarray, M: int, N: int) -> np.ndarray:
    """Apply the unitary 2D DFT (N-point Doppler x M-point delay) to a vector.

    This is the matrix F = F_N kron F_M with F_N, F_M normalized DFTs;
    it preserves the 2-norm exactly.
    """
    X = to_grid(x, M, N)
    return to_vector(np.fft.fft2(X) / np.sqrt(M * N))


def dd_ifft2(x: np.ndarray, M: int, N: int) -> np.ndarray:
    """Inverse of :func:`dd_fft2` (the adjoint F^H)."""
    X = to_grid(x, M, N)
    return to_vector(np.fft.ifft2(X) * np.sqrt(M * N))


def dd_dft_matrix(M: int, N: int) -> np.ndarray:
    """Dense F = F_N kron F_M, for small-size cross checks only."""
    fm = np.fft.fft(np.eye(M)) / np.sqrt(M)
    fn = np.fft.fft(np.eye(N)) / np.sqrt(N)
    return np.kron(fn, fm)
