"""Iterative frame detectors: AMP and the FFT-accelerated UAMP variants.

All detectors share the same skeleton: a linear message step producing a
decoupled pseudo observation ``q_j = x_j + noise(nu_q)`` per symbol,
followed by a discrete posterior over the constellation.  They differ in
how the linear step is computed:

* :class:`AmpDetector` works on the explicit (sparse) channel matrix and
  keeps per-symbol variances; the noise precision must be supplied.
* :class:`UampDetector` works on the unitarily transformed model
  r = diag(d) F x + noise, runs every matrix product as a 2D FFT, keeps
  a scalar symbol variance, and estimates the noise precision online.
* :class:`RectUampDetector` is the same recursion on the block-SVD form
  of the rectangular-waveform channel.

Detector objects are stepped once per call so a turbo loop can inject
fresh symbol priors between iterations; the module-level functions run
the plain fixed-prior schedule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .channel import (
    RectSvdChannel,
    SparseChannelMatrix,
    SpectralChannel,
    dd_to_timeblocks,
    timeblocks_to_dd,
)
from .grid import dd_fft2, dd_ifft2
from .modem import Constellation

VAR_FLOOR = 1e-15        # numerical guard only; keeps message variances away from 0
EPS_FLOOR = 1e-12        # guard for the noise-precision estimate and for the
                         # residual-energy denominator it divides (zero-residual case)
DIVERGENCE_BOUND = 1e6   # mean symbol variance beyond this means blow-up


class DetectorDivergence(RuntimeError):
    """Raised when a detector state stops being finite."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class SymbolPosterior:
    """Per-symbol discrete posterior over the constellation."""

    beta: np.ndarray   # (MN, |A|) probabilities, rows sum to 1
    mean: np.ndarray   # posterior means
    var: np.ndarray    # posterior variances


@dataclass(frozen=True)
class IterationRecord:
    """State published by one detector iteration."""

    iteration: int
    q: np.ndarray                 # pseudo observations
    nu_q: float | np.ndarray      # their noise variance (scalar for UAMP)
    posterior: SymbolPosterior
    x_hat: np.ndarray
    nu_x: float | np.ndarray      # scalar for UAMP, vector for AMP
    eps_hat: float | None = None  # noise-precision estimate, UAMP only
    p: np.ndarray | None = None       # plug-in linear estimate (Onsager-corrected)
    z_hat: np.ndarray | None = None   # transformed-observation belief, UAMP only


def uniform_priors(n: int, c: Constellation) -> np.ndarray:
    return np.full((n, c.size), 1.0 / c.size)


def discrete_posterior(
    q: np.ndarray,
    nu_q: float | np.ndarray,
    priors: np.ndarray,
    c: Constellation,
) -> SymbolPosterior:
    """Posterior over constellation points given q_j = x_j + CN(0, nu_q).

    Evaluated in the log domain with a per-row max subtraction so that a
    tiny nu_q cannot underflow every weight.  A prior row of all zeros is
    rejected (it would make the posterior undefined).
    """
    q = np.asarray(q)
    priors = np.asarray(priors, dtype=float)
    if priors.shape != (q.size, c.size):
        raise ValueError(f"priors shape {priors.shape} != {(q.size, c.size)}")
    if np.any(priors.sum(axis=1) <= 0):
        raise ValueError("degenerate prior row (all zeros)")
    nu = np.maximum(np.asarray(nu_q, dtype=float), np.finfo(float).tiny)
    if nu.ndim == 1:
        nu = nu[:, None]
    with np.errstate(divide="ignore"):  # log(0) -> -inf is the intended weight
        log_xi = np.log(priors) - np.abs(c.points[None, :] - q[:, None]) ** 2 / nu
    log_xi -= log_xi.max(axis=1, keepdims=True)
    xi = np.exp(log_xi)
    beta = xi / xi.sum(axis=1, keepdims=True)
    mean = beta @ c.points
    var = np.einsum("ja,ja->j", beta, np.abs(c.points[None, :] - mean[:, None]) ** 2)
    return SymbolPosterior(beta, mean, var)


def _check_finite(t: int, x_hat: np.ndarray, mean_nu_x: float) -> None:
    if not np.all(np.isfinite(x_hat)) or not np.isfinite(mean_nu_x):
        raise DetectorDivergence(t, "non-finite detector state")
    if mean_nu_x > DIVERGENCE_BOUND:
        raise DetectorDivergence(t, f"symbol variance blew up ({mean_nu_x:.3g})")


# ---------------------------------------------------------------------------
# AMP on the explicit channel matrix
# ---------------------------------------------------------------------------


def _matrix_ops(H):
    """(A, A_adj, |A|^2, |A^H|^2) as multipliable operators."""
    if isinstance(H, SparseChannelMatrix):
        H = H.mat
    if sp.issparse(H):
        H = H.tocsr()
        abs2 = H.multiply(H.conj()).real.tocsr()
        return H, H.conj().T.tocsr(), abs2, abs2.T.tocsr()
    H = np.asarray(H)
    abs2 = np.abs(H) ** 2
    return H, H.conj().T, abs2, abs2.T


class AmpDetector:
    """Approximate message passing with known noise precision."""

    def __init__(self, H, y: np.ndarray, noise_precision: float, c: Constellation,
                 damping: float = 0.0):
        if noise_precision <= 0:
            raise ValueError("noise_precision must be positive")
        self.h, self.h_adj, self.h_abs2, self.h_adj_abs2 = _matrix_ops(H)
        self.y = np.asarray(y, dtype=complex)
        self.n = self.y.size
        self.noise_var = 1.0 / noise_precision
        self.c = c
        self.damping = damping
        self.s = np.zeros(self.n, dtype=complex)
        self.x_hat = np.zeros(self.n, dtype=complex)
        self.nu_x = np.ones(self.n)
        self.t = 0

    def step(self, priors: np.ndarray | None = None) -> IterationRecord:
        if priors is None:
            priors = uniform_priors(self.n, self.c)
        nu_p = np.maximum(self.h_abs2 @ self.nu_x, VAR_FLOOR)
        p = self.h @ self.x_hat - nu_p * self.s
        nu_s = np.maximum(1.0 / (nu_p + self.noise_var), VAR_FLOOR)
        self.s = nu_s * (self.y - p)
        nu_q = np.maximum(1.0 / (self.h_adj_abs2 @ nu_s), VAR_FLOOR)
        q = self.x_hat + nu_q * (self.h_adj @ self.s)
        post = discrete_posterior(q, nu_q, priors, self.c)
        self.x_hat = (1 - self.damping) * post.mean + self.damping * self.x_hat
        self.nu_x = (1 - self.damping) * post.var + self.damping * self.nu_x
        self.t += 1
        _check_finite(self.t, self.x_hat, float(np.mean(self.nu_x)))
        return IterationRecord(self.t, q, nu_q, post, self.x_hat.copy(), self.nu_x.copy(),
                               p=p)


# ---------------------------------------------------------------------------
# UAMP core shared by the BCCB and block-SVD forms
# ---------------------------------------------------------------------------


class _UampBase:
    """Scalar-variance UAMP recursion over r = diag(d) Phi x + noise.

    Subclasses provide ``lam`` (|d|^2) plus matrix-free ``_forward``
    (diag(d) Phi x) and ``_backward`` ((diag(d) Phi)^H s).
    """

    def __init__(self, r: np.ndarray, lam: np.ndarray, c: Constellation,
                 noise_precision: float | None, damping: float):
        self.r = np.asarray(r, dtype=complex)
        self.n = self.r.size
        self.lam = lam
        self.c = c
        self.damping = damping
        self.fixed_precision = noise_precision
        if np.any(lam == 0):
            warnings.warn("channel spectrum has zero entries; variances will sit at the floor")
        self.s = np.zeros(self.n, dtype=complex)
        self.x_hat = np.zeros(self.n, dtype=complex)
        self.nu_x = 1.0
        self.eps_hat = 1.0 if noise_precision is None else noise_precision
        self.t = 0

    def _forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _backward(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def step(self, priors: np.ndarray | None = None) -> IterationRecord:
        if priors is None:
            priors = uniform_priors(self.n, self.c)
        nu_p = np.maximum(self.nu_x * self.lam, VAR_FLOOR)
        p = self._forward(self.x_hat) - nu_p * self.s
        z_hat = None
        if self.fixed_precision is None:
            # Noise-precision estimate from the belief of the transformed
            # observation; updated before it is used in nu_s below.
            nu_z = 1.0 / (1.0 / nu_p + self.eps_hat)
            z_hat = nu_z * (p / nu_p + self.eps_hat * self.r)
            denom = np.sum(np.abs(self.r - z_hat) ** 2) + nu_z.sum()
            self.eps_hat = max(self.n / max(denom, EPS_FLOOR), EPS_FLOOR)
        nu_s = np.maximum(1.0 / (nu_p + 1.0 / self.eps_hat), VAR_FLOOR)
        self.s = nu_s * (self.r - p)
        nu_q = max(self.n / float(self.lam @ nu_s), VAR_FLOOR)
        q = self.x_hat + nu_q * self._backward(self.s)
        post = discrete_posterior(q, nu_q, priors, self.c)
        self.x_hat = (1 - self.damping) * post.mean + self.damping * self.x_hat
        self.nu_x = (1 - self.damping) * float(np.mean(post.var)) + self.damping * self.nu_x
        self.t += 1
        _check_finite(self.t, self.x_hat, self.nu_x)
        return IterationRecord(self.t, q, nu_q, post, self.x_hat.copy(), self.nu_x,
                               eps_hat=self.eps_hat, p=p, z_hat=z_hat)


class UampDetector(_UampBase):
    """UAMP on the BCCB (bi-orthogonal waveform) channel, 2D FFTs only."""

    def __init__(self, spec: SpectralChannel, r: np.ndarray, c: Constellation,
                 noise_precision: float | None = None, damping: float = 0.0):
        super().__init__(r, spec.lam, c, noise_precision, damping)
        self.spec = spec
        self.M, self.N = spec.grid.M, spec.grid.N

    def _forward(self, x: np.ndarray) -> np.ndarray:
        return self.spec.d * dd_fft2(x, self.M, self.N)

    def _backward(self, s: np.ndarray) -> np.ndarray:
        return dd_ifft2(self.spec.d.conj() * s, self.M, self.N)


class RectUampDetector(_UampBase):
    """UAMP on the rectangular-waveform block-SVD channel."""

    def __init__(self, svd: RectSvdChannel, r: np.ndarray, c: Constellation,
                 noise_precision: float | None = None, damping: float = 0.0):
        super().__init__(r, svd.lam, c, noise_precision, damping)
        self.svd = svd
        self.d = svd.d
        self.grid = svd.grid

    def _forward(self, x: np.ndarray) -> np.ndarray:
        w = dd_to_timeblocks(x, self.grid).reshape(-1)
        return self.d * self.svd.apply_vh_blocks(w)

    def _backward(self, s: np.ndarray) -> np.ndarray:
        z = self.svd.apply_v_blocks(self.d * s)
        return timeblocks_to_dd(z.reshape(self.grid.N, self.grid.M), self.grid)


# ---------------------------------------------------------------------------
# Fixed-prior convenience runners
# ---------------------------------------------------------------------------


def _run(detector, priors, max_iter, tol) -> list[IterationRecord]:
    records = []
    prev = None
    for _ in range(max_iter):
        rec = detector.step(priors)
        records.append(rec)
        if tol is not None and prev is not None:
            denom = np.linalg.norm(prev)
            if denom > 0 and np.linalg.norm(rec.x_hat - prev) / denom < tol:
                break
        prev = rec.x_hat
    return records


def amp_detect(H, y, noise_precision, c: Constellation, priors=None,
               max_iter=15, tol=None, damping=0.0) -> list[IterationRecord]:
    """Run AMP for up to ``max_iter`` iterations with fixed symbol priors."""
    return _run(AmpDetector(H, y, noise_precision, c, damping), priors, max_iter, tol)


def uamp_detect(spec: SpectralChannel, r, c: Constellation, priors=None,
                max_iter=15, noise_precision=None, tol=None,
                damping=0.0) -> list[IterationRecord]:
    """Run UAMP (noise precision estimated unless supplied)."""
    return _run(UampDetector(spec, r, c, noise_precision, damping), priors, max_iter, tol)


def uamp_rect_detect(svd: RectSvdChannel, r, c: Constellation, priors=None,
                     max_iter=15, noise_precision=None, tol=None,
                     damping=0.0) -> list[IterationRecord]:
    """Run the rectangular-waveform UAMP variant."""
    return _run(RectUampDetector(svd, r, c, noise_precision, damping), priors, max_iter, tol)
