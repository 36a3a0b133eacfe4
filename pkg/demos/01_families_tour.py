"""A tour of the five mixed-state families.

Each family puts point masses on one or two atoms plus a density on an
interval, and the whole law is a single exponential family: a natural
parameter vector theta, a sufficient statistic B(x), and a closed-form
log-normalizer. This script walks through the parameter maps, densities,
moments, and exact sampling for each family.

Run:  python demos/01_families_tour.py
"""

import numpy as np

from mixedstate import (
    Atom,
    CensoredMixedExponential,
    Continuous,
    MixedExponential,
    MixedGamma,
    OriginalParams,
    PositiveMixedGaussian,
    TruncatedMixedExponential,
)

rng = np.random.default_rng(1)

print("=" * 72)
print("Mixed exponential: atom at 0 plus Exp(lambda) on (0, inf)")
print("=" * 72)
fam = MixedExponential()
orig = OriginalParams(gamma=0.5, q=(1.0,), xi=(2.0,))
theta = fam.natural_from_original(orig)
print(f"original (gamma=0.5, lambda=2)  ->  theta = {theta}")
print(f"round trip: {fam.original_from_natural(theta)}")
print(f"B(Atom(1))          = {fam.suff_stat(Atom(1))}   (the reference state)")
print(f"B(Continuous(2.5))  = {fam.suff_stat(Continuous(2.5))}")
print(f"log f(Atom(1))      = {fam.log_density(Atom(1), theta):.6f}  = log gamma")
print(f"E[X 1_(0,inf)(X)]   = {fam.continuous_restricted_mean(theta):.6f}  = (1-gamma)/lambda")

idx, vals = fam.sample_grid(np.broadcast_to(theta, (100_000, 2)), rng)
print(f"100k draws: atom frequency {np.mean(idx > 0):.4f} (gamma = 0.5), "
      f"continuous mean {vals[idx == 0].mean():.4f} (1/lambda = 0.5)")

print()
print("=" * 72)
print("Positive mixed Gaussian: atom at 0 plus |N(0, sigma^2)|")
print("=" * 72)
fam = PositiveMixedGaussian()
theta = fam.natural_from_original(OriginalParams(gamma=0.3, q=(1.0,), xi=(0.8,)))
print(f"theta = {theta}   (theta_2 = 1/(2 sigma^2))")
print(f"grad A(theta) = E[B] = {fam.grad_log_normalizer(theta)}")
print(f"  components: (P(X > 0), -E[X^2 1_(0,inf)])")

print()
print("=" * 72)
print("Mixed Gamma: atom at 0 plus Gamma(shape a, rate b)")
print("=" * 72)
fam = MixedGamma()
theta = fam.natural_from_original(OriginalParams(gamma=0.25, q=(1.0,), xi=(2.0, 1.5)))
print(f"xi = (rate, shape-1) = (2.0, 1.5); theta = {np.round(theta, 6)}")
print(f"restricted mean = {fam.continuous_restricted_mean(theta):.6f} "
      f"(= 0.75 * a/b = 0.9375)")

print()
print("=" * 72)
print("Truncated mixed exponential on {0} union (0, K]")
print("=" * 72)
K = 2.0
fam = TruncatedMixedExponential(K=K)
for lam in (0.001, 0.5, 2.0, 8.0):
    theta = fam.natural_from_original(OriginalParams(gamma=0.5, q=(1.0,), xi=(lam,)))
    mean = fam.continuous_restricted_mean(theta) / 0.5
    print(f"lambda = {lam:6.3f}: E[Z] = {mean:.5f}   (decreases from K/2 = {K / 2} to 0)")

print()
print("=" * 72)
print("Censored mixed exponential on {0, K} union (0, K)")
print("=" * 72)
K = 1.0
fam = CensoredMixedExponential(K=K)
alpha, lam = 0.5, 1.0
theta = fam.natural_from_censoring(alpha, lam)
print(f"(alpha, lambda) = (0.5, 1.0) -> theta = {theta}")
masses = fam.atom_masses(theta)
print(f"atom masses = {np.round(masses, 6)}  "
      f"(alpha, (1-alpha) e^-lambda K = {(1 - alpha) * np.exp(-lam * K):.6f})")
idx, vals = fam.sample_grid(np.broadcast_to(theta, (100_000, 3)), rng)
print(f"100k draws: mass at the censoring atom {np.mean(idx == 2):.4f}")
print(f"positive-part mean E[X 1_(0,K]] = {fam.continuous_restricted_mean(theta):.6f} "
      f"(formula (1-alpha)(1-e^-lambda K)/lambda = {(1 - alpha) * (1 - np.exp(-1)):.6f})")
