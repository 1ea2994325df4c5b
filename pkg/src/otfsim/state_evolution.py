"""BER prediction for the coded receiver via a simulated decoder table.

The iterative receiver sees, at every iteration, a decoupled pseudo AWGN
channel q_j = x_j + noise(tau).  Simulating the code + mapper over plain
AWGN once, for a grid of noise variances tau, yields a lookup table
(tau -> BER, post-decoder symbol variance v_x).  The predictor then just
alternates that table with the effective-noise formula of the UAMP
recursion, which needs only the channel's squared singular-value vector
and the true noise precision.

The raw Monte-Carlo table is regularized to be non-decreasing in tau
(isotonic pass); without it sampling noise can stall the recursion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .coding import ConvCode, bcjr_decode, conv_encode, deinterleave, demap_llr, interleave, priors_from_llr
from .modem import Constellation, map_bits

BER_FLOOR = 1e-12          # keeps log interpolation finite at zero measured BER
CENSOR_MIN_ERRORS = 100    # fewer accumulated bit errors marks a row as censored


@dataclass(frozen=True)
class GTable:
    """Rows of (tau, ber, v_x) sorted by tau, plus raw trial counts."""

    tau: np.ndarray
    ber: np.ndarray      # isotonic-regularized
    v_x: np.ndarray      # isotonic-regularized
    trials: np.ndarray
    errors: np.ndarray   # raw bit-error counts behind the BER column
    meta: dict = field(default_factory=dict)

    @property
    def censored(self) -> np.ndarray:
        """Rows whose BER estimate rests on too few errors to be trusted."""
        return self.errors < CENSOR_MIN_ERRORS

    def lookup(self, tau: float) -> tuple[float, float]:
        """(BER, v_x) at tau; log-linear in tau, BER blended in log domain.

        Values outside the table range clamp to the nearest endpoint with
        a warning.
        """
        if tau <= self.tau[0] or tau >= self.tau[-1]:
            if tau < self.tau[0] * 0.999 or tau > self.tau[-1] * 1.001:
                warnings.warn(f"tau={tau:.4g} outside table range "
                              f"[{self.tau[0]:.4g}, {self.tau[-1]:.4g}]; clamping")
            idx = 0 if tau <= self.tau[0] else self.tau.size - 1
            return float(self.ber[idx]), float(self.v_x[idx])
        lt = np.log(tau)
        ltau = np.log(self.tau)
        ber = np.exp(np.interp(lt, ltau, np.log(np.maximum(self.ber, BER_FLOOR))))
        vx = np.interp(lt, ltau, self.v_x)
        return float(ber), float(vx)


def _isotonic(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators pass producing a non-decreasing sequence."""
    values = list(map(float, y))
    weights = [1.0] * len(values)
    merged = [1] * len(values)
    i = 0
    while i < len(values) - 1:
        if values[i] > values[i + 1] + 0.0:
            total = weights[i] + weights[i + 1]
            values[i] = (values[i] * weights[i] + values[i + 1] * weights[i + 1]) / total
            weights[i] = total
            merged[i] += merged.pop(i + 1)
            values.pop(i + 1)
            weights.pop(i + 1)
            if i > 0:
                i -= 1
        else:
            i += 1
    return np.repeat(values, merged)


def posterior_moments(probs: np.ndarray, c: Constellation) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance per symbol for rows of point probabilities."""
    mean = probs @ c.points
    var = np.einsum("ja,ja->j", probs, np.abs(c.points[None, :] - mean[:, None]) ** 2)
    return mean, var


def build_g_table(
    code: ConvCode,
    c: Constellation,
    tau_grid: np.ndarray | None = None,
    trials: int = 40,
    seed: int = 0,
    n_symbols: int = 1024,
) -> GTable:
    """Simulate the coded link over pseudo AWGN for each noise variance.

    Per trial: encode random data, interleave, map, add complex AWGN of
    variance tau, demap with uniform priors, decode once; record the info
    BER and the symbol variance implied by the decoder's a-posteriori
    LLRs.  The per-frame interleaver is drawn fresh from the seed stream.
    """
    if tau_grid is None:
        tau_grid = np.geomspace(1e-3, 10.0, 25)
    tau_grid = np.asarray(tau_grid, dtype=float)
    if np.any(tau_grid <= 0) or np.any(np.diff(tau_grid) <= 0):
        raise ValueError("tau_grid must be positive and strictly increasing")

    n_coded = n_symbols * c.bits_per_symbol
    n_info = code.n_info_bits(n_coded)
    ber = np.zeros(tau_grid.size)
    vx = np.zeros(tau_grid.size)
    errors = np.zeros(tau_grid.size, dtype=int)
    for i, tau in enumerate(tau_grid):
        ss = np.random.SeedSequence([seed, i])
        rng = np.random.default_rng(ss)
        vx_acc = 0.0
        for trial in range(trials):
            ilv_seed = int(rng.integers(0, 2**31))
            info = rng.integers(0, 2, n_info)
            x = map_bits(interleave(conv_encode(info, code), ilv_seed), c)
            noise = np.sqrt(tau / 2) * (rng.standard_normal(n_symbols)
                                        + 1j * rng.standard_normal(n_symbols))
            q = x + noise
            llrs = demap_llr(q, tau, None, c)
            res = bcjr_decode(deinterleave(llrs, ilv_seed), code=code)
            errors[i] += int(np.sum((res.info_llrs < 0).astype(int) != info))
            app_sym = interleave(res.app, ilv_seed)
            probs = priors_from_llr(app_sym, c)
            vx_acc += float(np.mean(posterior_moments(probs, c)[1]))
        ber[i] = errors[i] / (trials * n_info)
        vx[i] = vx_acc / trials
    meta = {
        "code": "conv_" + "_".join(oct(g)[2:] for g in code.generators),
        "constellation": c.name,
        "trials_per_point": trials,
        "n_symbols": n_symbols,
        "seed": seed,
    }
    return GTable(tau_grid, _isotonic(ber), np.clip(_isotonic(vx), 0.0, 1.0),
                  np.full(tau_grid.size, trials), errors, meta)


@dataclass(frozen=True)
class SePrediction:
    tau: np.ndarray     # effective pseudo-channel noise variance per iteration
    ber: np.ndarray     # predicted BER per iteration
    v_x: np.ndarray     # predicted symbol variance entering the next iteration


def se_predict(lam: np.ndarray, noise_precision: float, table: GTable,
               iters: int = 15) -> SePrediction:
    """Iterate the effective-noise recursion against the decoder table.

    ``lam`` is the squared singular-value vector of an actual channel
    realization; starting from unit symbol variance each iteration maps
    v_x to the pseudo-channel noise tau = J / sum(lam / (v_x lam + 1/eps))
    and reads (BER, v_x) off the table.
    """
    lam = np.asarray(lam, dtype=float)
    if noise_precision <= 0:
        raise ValueError("noise_precision must be positive")
    J = lam.size
    noise_var = 1.0 / noise_precision
    v = 1.0
    taus, bers, vxs = [], [], []
    for _ in range(iters):
        tau = J / float(np.sum(lam / (v * lam + noise_var)))
        b, v = table.lookup(tau)
        taus.append(tau)
        bers.append(b)
        vxs.append(v)
    return SePrediction(np.array(taus), np.array(bers), np.array(vxs))


# ---------------------------------------------------------------------------
# CSV persistence (schema=1): header tau,ber,v_x,trials,errors
# ---------------------------------------------------------------------------


def save_gtable(table: GTable, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("# schema=1\n")
        for key, val in table.meta.items():
            fh.write(f"# {key}={val}\n")
        fh.write("tau,ber,v_x,trials,errors\n")
        for row in zip(table.tau, table.ber, table.v_x, table.trials, table.errors):
            fh.write(f"{float(row[0])!r},{float(row[1])!r},{float(row[2])!r},"
                     f"{int(row[3])},{int(row[4])}\n")


def load_gtable(path: str) -> GTable:
    meta = {}
    rows = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, _, val = line[1:].strip().partition("=")
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                expected = ["tau", "ber", "v_x", "trials", "errors"]
                if header != expected:
                    raise ValueError(f"bad g-table header {header}, expected {expected}")
                continue
            rows.append(line.split(","))
    if not rows:
        raise ValueError(f"g-table {path} has no data rows")
    arr = np.array(rows)
    return GTable(arr[:, 0].astype(float), arr[:, 1].astype(float),
                  arr[:, 2].astype(float), arr[:, 3].astype(int),
                  arr[:, 4].astype(int), meta)
