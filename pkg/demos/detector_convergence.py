"""Per-iteration convergence of the two detectors on one noisy frame.

A fractional-Doppler channel with many paths is where the plain
message-passing recursion struggles and the unitary-transformed variant
shines; the table below shows symbol error rate, the noise-precision
estimate and the posterior variance per iteration.

Run:  python demos/detector_convergence.py
"""

import numpy as np

from otfsim import (
    OtfsGrid,
    SpectralChannel,
    build_dd_matrix,
    constellation,
    hard_decision,
    map_bits,
    sample_channel,
    simulate_rx,
)
from otfsim.detectors import AmpDetector, UampDetector

snr_db = 13.0
eps = 10 ** (snr_db / 10)
grid = OtfsGrid(64, 16)
c = constellation("qpsk")

channel = sample_channel(grid, num_paths=12, pdp_alpha=0.0, k_max=6, l_max=14,
                         fractional=True, rng=3)
spec = SpectralChannel.from_channel(channel)
H = build_dd_matrix(channel)

rng = np.random.default_rng(1)
bits = rng.integers(0, 2, grid.frame_len * 2)
x = map_bits(bits, c)
tx_idx = hard_decision(x, c)
y, r = simulate_rx(channel, x, eps, "biorthogonal", rng=2, operator=spec)

uamp = UampDetector(spec, r, c)                 # estimates the noise precision
amp = AmpDetector(H, y, eps, c)                 # needs it handed over

print(f"P=12 fractional-Doppler paths, SNR {snr_db} dB (true eps = {eps:.1f})")
print(f"{'iter':>4} | {'UAMP SER':>9} {'eps_hat':>8} {'nu_x':>7} "
      f"| {'AMP SER':>9} {'mean nu_x':>9}")
for it in range(15):
    ru = uamp.step()
    ra = amp.step()
    ser_u = np.mean(hard_decision(ru.x_hat, c) != tx_idx)
    ser_a = np.mean(hard_decision(ra.x_hat, c) != tx_idx)
    print(f"{it + 1:>4} | {ser_u:>9.4f} {ru.eps_hat:>8.2f} {ru.nu_x:>7.4f} "
          f"| {ser_a:>9.4f} {np.mean(ra.nu_x):>9.4f}")

print("\nThe estimated precision settles near the true value and the"
      "\nunitary-transformed recursion converges iterations earlier; push"
      "\nnum_paths to 14 and the gap widens into a detection-floor split.")
