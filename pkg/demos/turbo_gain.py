"""Coded vs uncoded BER over a small SNR sweep (rectangular waveform).

Runs the Monte-Carlo harness twice with identical channels and noise
seeds: once with the plain detector, once with the full iterative
detection-and-decoding loop (rate-1/2 code, exact SISO decoder, 15
single-loop iterations), then prints both curves.

Run:  python demos/turbo_gain.py   (about a minute)
"""

from otfsim import ExperimentConfig, run_sweep

base = dict(M=64, N=16, num_paths=10, pdp_alpha=0.1, k_max=6, l_max=14,
            fractional=True, waveform="rectangular", detector="uamp",
            trials=60, min_bit_errors=60, master_seed=42)

uncoded = ExperimentConfig(**base, coded=False, snr_grid_db=(8.0, 10.0, 12.0, 14.0))
coded = ExperimentConfig(**base, coded=True, snr_grid_db=(4.0, 5.0, 6.0, 7.0))

print("uncoded sweep ...")
rec_u = run_sweep(uncoded)
print("coded sweep (turbo receiver) ...")
rec_c = run_sweep(coded)

print(f"\n{'':>10} {'SNR (dB)':>9} {'BER':>10} {'FER':>7} {'frames':>7}")
for rec in rec_u:
    print(f"{'uncoded':>10} {rec.snr_db:>9.1f} {rec.ber:>10.2e} {rec.fer:>7.3f} "
          f"{rec.trials_run:>7}")
for rec in rec_c:
    print(f"{'coded':>10} {rec.snr_db:>9.1f} {rec.ber:>10.2e} {rec.fer:>7.3f} "
          f"{rec.trials_run:>7}")

print("\nThe coded receiver reaches any target BER several dB earlier than"
      "\nthe uncoded detector; the acceptance suite pins the gap at >= 2 dB"
      "\nat BER 1e-3.")
