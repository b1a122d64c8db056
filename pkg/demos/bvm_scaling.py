"""Posterior spectrum and acceptance as the dataset grows.

As n grows the posterior approaches a Gaussian with covariance
(n * Fisher)^{-1}, so the reference frequencies scaled by 1/sqrt(n)
converge to the square roots of the Fisher eigenvalues, and the residual
potential U1 shrinks. Integrators that are exact on the Gaussian limit
(the rotation-based ones) see their acceptance climb toward 100%; the
Verlet variants discretize the Gaussian too and plateau.

Run: python demos/bvm_scaling.py        (about a minute)
"""

import collections

import numpy as np

from splithmc.cli import ExperimentConfig, run_bvm_experiment

cfg = ExperimentConfig(
    bvm=True,
    seed=21,
    out="demo_bvm_out",
    bvm_n_list=(128, 256, 512, 1024, 2048),
    simdata_d_minus_1=10,
    bvm_samples=1000,
    bvm_fisher_draws=50000,
)
spectra, acceptance = run_bvm_experiment(cfg)

by_n = collections.defaultdict(list)
for n, j, scaled_omega, sqrt_fisher in spectra:
    by_n[n].append((scaled_omega, sqrt_fisher))

print("max_j | omega_j / sqrt(n) - sqrt(fisher eigenvalue_j) |")
for n in sorted(by_n):
    arr = np.array(by_n[n])
    print(f"   n={n:5d}: {np.abs(arr[:, 0] - arr[:, 1]).max():.4f}")
print("   (converges toward the Monte Carlo noise floor of the Fisher estimate)\n")

acc = collections.defaultdict(dict)
for n, method, ap in acceptance:
    acc[method][n] = ap
ns = sorted(by_n)
print("acceptance rate by dataset size")
print("   method  " + " ".join(f"n={n:<6d}" for n in ns))
for method in ("kdk", "ukrk", "pverlet", "pkrk", "prkr"):
    print(f"   {method:8s}" + "  ".join(f"{acc[method][n]:.3f}" for n in ns))
print("\nRotation-based rows (ukrk, pkrk, prkr) march toward 1.000; the")
print("Verlet rows saturate. CSVs written to demo_bvm_out/.")
