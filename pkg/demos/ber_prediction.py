"""Predict the coded receiver's BER trajectory without simulating it.

Builds the decoder lookup table (BER and residual symbol variance as a
function of pseudo-channel noise), then iterates the effective-noise
recursion for one channel realization and compares against the turbo
receiver simulated on that same realization.

Run:  python demos/ber_prediction.py   (about two minutes)
"""

import numpy as np

from otfsim import (
    ConvCode,
    OtfsGrid,
    RectSvdChannel,
    TurboConfig,
    build_g_table,
    constellation,
    conv_encode,
    interleave,
    map_bits,
    sample_channel,
    se_predict,
    simulate_rx,
    turbo_receive,
)

snr_db = 8.0
c = constellation("qpsk")
code = ConvCode()

print("building the decoder lookup table over the pseudo AWGN channel ...")
table = build_g_table(code, c, trials=25, seed=5, n_symbols=1024)
resolvable = table.ber[~table.censored]
print(f"  {table.tau.size} noise points, BER resolvable down to "
      f"{resolvable.min() if resolvable.size else float('nan'):.1e}")

grid = OtfsGrid(64, 16)
channel = sample_channel(grid, num_paths=10, pdp_alpha=0.1, k_max=6, l_max=14,
                         fractional=True, rng=2002)
svd = RectSvdChannel.from_channel(channel)
pred = se_predict(svd.lam, 10 ** (snr_db / 10), table, iters=15)

print(f"simulating the turbo receiver on the same realization at {snr_db} dB ...")
n_frames = 120
n_info = code.n_info_bits(grid.frame_len * 2)
sim = np.zeros(15)
rng = np.random.default_rng(99)
for _ in range(n_frames):
    ilv = int(rng.integers(0, 2 ** 31))
    info = rng.integers(0, 2, n_info)
    x = map_bits(interleave(conv_encode(info, code), ilv), c)
    _, r = simulate_rx(channel, x, 10 ** (snr_db / 10), "rectangular",
                       rng=rng, operator=svd)
    res = turbo_receive(r, svd, c, TurboConfig(15, interleaver_seed=ilv), code,
                        truth_info_bits=info)
    sim += np.array([s.ber_info for s in res.iterations])
sim /= n_frames

floor = 0.5 / (n_frames * n_info)
print(f"\n{'iter':>4} {'tau':>8} {'predicted':>10} {'simulated':>10}")
for t in range(15):
    shown = sim[t] if sim[t] > 0 else floor
    print(f"{t + 1:>4} {pred.tau[t]:>8.3f} {pred.ber[t]:>10.2e} "
          f"{shown:>10.2e}{' (<resolution)' if sim[t] == 0 else ''}")

print("\nThe recursion and the receiver land on the same fixed point; the"
      "\nfirst iterations are predicted pessimistically because the"
      "\neffective-noise formula overstates the transient error of the"
      "\nunitary-transformed model (see the acceptance notes).")
