"""Bit/symbol mapping and the ISFFT/SFFT grid transforms.

Bit-to-symbol labelings are fixed constants of this package (Gray codes,
unit average symbol energy) so that LLR computations are reproducible:

* QPSK: bit pair (b0, b1) selects sign of (real, imag); 0 maps to +.
  ``00 -> (1+1j)/sqrt(2)``.
* 16QAM: bits (b0, b1) pick the real level, (b2, b3) the imaginary one,
  with per-axis Gray map 00->+3, 01->+1, 11->-1, 10->-3, scaled by
  1/sqrt(10).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Constellation:
    """A labeled constellation; ``points[i]`` carries the bit label i."""

    name: str
    points: np.ndarray        # complex, length 2**bits_per_symbol
    bits_per_symbol: int

    @property
    def size(self) -> int:
        return self.points.size

    def labels(self) -> np.ndarray:
        """(size, bits_per_symbol) matrix of bit labels, MSB first."""
        idx = np.arange(self.size)
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return (idx[:, None] >> shifts[None, :]) & 1


def _qpsk() -> Constellation:
    levels = np.array([1.0, -1.0])  # bit 0 -> +, bit 1 -> -
    idx = np.arange(4)
    pts = (levels[(idx >> 1) & 1] + 1j * levels[idx & 1]) / np.sqrt(2)
    return Constellation("QPSK", pts, 2)


def _qam16() -> Constellation:
    axis = np.empty(4)
    axis[[0b00, 0b01, 0b11, 0b10]] = [3.0, 1.0, -1.0, -3.0]  # per-axis Gray map
    idx = np.arange(16)
    pts = (axis[(idx >> 2) & 0b11] + 1j * axis[idx & 0b11]) / np.sqrt(10)
    return Constellation("16QAM", pts, 4)


_CONSTELLATIONS = {"qpsk": _qpsk(), "16qam": _qam16()}


def constellation(name: str) -> Constellation:
    try:
        return _CONSTELLATIONS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; choose from {sorted(_CONSTELLATIONS)}")


def map_bits(bits: np.ndarray, c: Constellation) -> np.ndarray:
    """Gray-map a bit vector onto symbols, ``bits_per_symbol`` bits each."""
    bits = np.asarray(bits, dtype=int)
    if bits.size % c.bits_per_symbol:
        raise ValueError(f"bit count {bits.size} not divisible by {c.bits_per_symbol}")
    groups = bits.reshape(-1, c.bits_per_symbol)
    shifts = np.arange(c.bits_per_symbol - 1, -1, -1)
    idx = (groups << shifts[None, :]).sum(axis=1)
    return c.points[idx]


def hard_decision(x_hat: np.ndarray, c: Constellation) -> np.ndarray:
    """Nearest-point indices; ties go to the lowest label index."""
    dist = np.abs(np.asarray(x_hat)[:, None] - c.points[None, :])
    return np.argmin(dist, axis=1)


def indices_to_bits(idx: np.ndarray, c: Constellation) -> np.ndarray:
    """Bit vector carried by a sequence of constellation indices."""
    return c.labels()[np.asarray(idx, dtype=int)].reshape(-1)


def hard_frame_bits(x_hat: np.ndarray, c: Constellation) -> np.ndarray:
    """Hard-decide a symbol frame straight to its bit vector."""
    return indices_to_bits(hard_decision(x_hat, c), c)


def isfft(x_dd: np.ndarray) -> np.ndarray:
    """Delay-Doppler to time-frequency transform of an M x N grid.

    Unitary: an M-point DFT along the delay axis and an N-point inverse
    DFT along the Doppler axis.
    """
    M, N = x_dd.shape
    return np.fft.ifft(np.fft.fft(x_dd, axis=0), axis=1) * np.sqrt(N / M)


def sfft(x_tf: np.ndarray) -> np.ndarray:
    """Inverse of :func:`isfft` (time-frequency back to delay-Doppler)."""
    M, N = x_tf.shape
    return np.fft.fft(np.fft.ifft(x_tf, axis=0), axis=1) * np.sqrt(M / N)
