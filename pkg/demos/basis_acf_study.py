"""Which modulation basis gives random data the cleanest autocorrelation?

Draws random 16-QAM blocks, modulates them with each basis, and averages the
squared periodic ACF over trials.  OFDM spreads every symbol across all time
samples, which flattens the per-realization PSD and pushes the expected
sidelobe energy (EISL) below the other bases.  An i.i.d. Gaussian codebook is
the control: with Gaussian symbols all unitary bases are statistically
identical, so any EISL gap must come from the constellation's fourth moment.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from isacsim import build_basis, expected_acf_profile, expected_isl, make_standard, moments

KINDS = ("SC", "OFDM", "OTFS", "AFDM")
N = 64
TRIALS = 2000

c = make_standard("16QAM")
print(f"16QAM kurtosis {moments(c).kurtosis:.3f}")
print(f"{'basis':>6} {'EISL':>8} {'+/-':>8} {'Gaussian control':>18}")
for kind in KINDS:
    basis = build_basis(kind, N)
    stats = expected_isl(basis, c, TRIALS, seed=1)
    control = expected_isl(basis, c, TRIALS, seed=2, gaussian=True)
    print(f"{kind:>6} {stats.mean:8.4f} {stats.ci_halfwidth:8.4f} {control.mean:18.4f}")

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
lags = np.arange(N)
for kind in KINDS:
    basis = build_basis(kind, N)
    mean, var = expected_acf_profile(basis, c, TRIALS, seed=3)
    axes[0].semilogy(lags[1:], mean[1:], label=kind)
    axes[1].semilogy(lags[1:], var[1:], label=kind)
axes[0].set_title("mean |ACF|^2 per lag, 16QAM")
axes[1].set_title("variance of |ACF|^2 per lag")
for ax in axes:
    ax.set_xlabel("lag")
    ax.legend()
fig.tight_layout()
out = Path(__file__).resolve().parent / "basis_acf_study.png"
fig.savefig(out, dpi=120)
print(f"figure: {out}")
