"""Shared helpers: admissible random models per family and small statistics."""

import math

import numpy as np
import pytest

from mixedstate import (
    AutoModel,
    CensoredMixedExponential,
    Lattice,
    MixedExponential,
    MixedGamma,
    PositiveMixedGaussian,
    TruncatedMixedExponential,
)


def sym2(c, d, e):
    return np.array([[c, d], [d, e]])


def sym3(s, u, t, c, d, e):
    return np.array([[s, u, t], [u, c, d], [t, d, e]])


def random_admissible_model(family, lattice, rng):
    """A translation-invariant model with admissible, well-classified draws.

    Mixed-gamma draws use conservative hand-picked signs (no coupling through
    the x or log-x statistics into unstable directions) since no named
    admissibility conditions exist for it.
    """
    kind = family.kind
    n_h, n_v = lattice.max_neighbor_counts()
    if kind == "positive_gaussian":
        alpha = np.array([rng.uniform(-2.0, 0.5), rng.uniform(0.5, 2.0)])
        beta_h = sym2(rng.uniform(0.0, 0.8), 0.0, 0.0)
        beta_v = sym2(rng.uniform(0.0, 0.8), 0.0, 0.0)
        return AutoModel(family, lattice, alpha, beta_h, beta_v)
    if kind == "mixed_exponential":
        while True:
            b = rng.uniform(0.8, 2.5)
            mats = [
                sym2(rng.uniform(-0.5, 0.5), rng.uniform(-0.15, 0.4), rng.uniform(-0.4, 0.0))
                for _ in range(2)
            ]
            worst = b + n_h * min(0.0, mats[0][1, 0]) + n_v * min(0.0, mats[1][1, 0])
            if worst > 0.1:
                alpha = np.array([rng.uniform(-1.0, 1.0), b])
                return AutoModel(family, lattice, alpha, mats[0], mats[1])
    if kind == "truncated_exponential":
        K = family.K
        while True:
            b = rng.uniform(0.8, 2.5)
            mats = [
                sym2(rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
                for _ in range(2)
            ]
            worst = b + sum(
                n * min(0.0, m[1, 0], m[1, 0] - m[1, 1] * K)
                for n, m in ((n_h, mats[0]), (n_v, mats[1]))
            )
            if worst > 0.1:
                alpha = np.array([rng.uniform(-1.0, 1.0), b])
                return AutoModel(family, lattice, alpha, mats[0], mats[1])
    if kind == "censored_exponential":
        K = family.K
        while True:
            b = rng.uniform(0.8, 2.5)
            mats = [sym3(*rng.uniform(-0.3, 0.3, size=6)) for _ in range(2)]
            worst = b + sum(
                n * min(0.0, m[2, 0], m[2, 1], m[2, 1] - m[2, 2] * K)
                for n, m in ((n_h, mats[0]), (n_v, mats[1]))
            )
            if worst > 0.1:
                alpha = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), b])
                return AutoModel(family, lattice, alpha, mats[0], mats[1])
    if kind == "mixed_gamma":
        # couplings only through the presence indicator; rate/shape offsets stay safe
        a_shape = rng.uniform(1.2, 3.0)
        b_rate = rng.uniform(0.8, 2.0)
        alpha = np.array([rng.uniform(-1.0, 1.0), b_rate, a_shape - 1.0])
        def mat():
            c = rng.uniform(-0.5, 0.5)
            d = rng.uniform(0.0, 0.2)  # adds to the rate at continuous neighbours
            h = rng.uniform(0.0, 0.2)  # adds to the shape at continuous neighbours
            return np.array([[c, d, h], [d, 0.0, 0.0], [h, 0.0, 0.0]])
        return AutoModel(family, lattice, alpha, mat(), mat())
    raise ValueError(kind)


def all_families():
    return [
        MixedExponential(),
        MixedGamma(),
        PositiveMixedGaussian(),
        TruncatedMixedExponential(K=2.0),
        CensoredMixedExponential(K=1.5),
    ]


def random_field(family, lattice, rng, atom_prob=0.4):
    """An iid field over the family's space (not a model sample)."""
    from mixedstate import Field

    space = family.space
    rows, cols = lattice.shape
    idx = np.zeros((rows, cols), dtype=np.int8)
    vals = np.zeros((rows, cols))
    hi = space.domain.hi
    top = 3.0 if math.isinf(hi) else hi
    for i in range(rows):
        for j in range(cols):
            if rng.random() < atom_prob:
                k = int(rng.integers(1, space.M + 1))
                idx[i, j] = k
                vals[i, j] = space.atoms[k - 1]
            else:
                x = rng.uniform(1e-6, top)
                while not space.domain.contains(x):
                    x = rng.uniform(1e-6, top)
                vals[i, j] = x
    return Field(space, idx, vals)


def quad_over_domain(fn, domain):
    """Adaptive quadrature over G; unbounded domains via x = t / (1 - t)."""
    from scipy.integrate import quad

    if math.isinf(domain.hi):
        val, _ = quad(
            lambda t: fn(t / (1.0 - t)) / (1.0 - t) ** 2,
            0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=400,
        )
    else:
        val, _ = quad(fn, 0.0, domain.hi, epsabs=1e-10, epsrel=1e-10, limit=400)
    return val


def quad_mean_suff_stat(family, theta):
    """(E_theta[B], total mass) by quadrature plus exact atom sums; the
    independent oracle for the grad-log-normalizer identity."""
    from mixedstate import Atom, Continuous

    theta = np.asarray(theta, dtype=float)
    space = family.space
    total = np.zeros(family.dim)
    mass = 0.0
    for k in range(1, space.M + 1):
        p = math.exp(family.log_density(Atom(k), theta))
        total += p * family.suff_stat(Atom(k))
        mass += p

    def dens(x):
        return math.exp(family.log_density(Continuous(x), theta))

    for comp in range(family.dim):
        total[comp] += quad_over_domain(
            lambda x, comp=comp: dens(x) * family.suff_stat(Continuous(x))[comp],
            space.domain,
        )
    mass += quad_over_domain(dens, space.domain)
    return total, mass


def mann_kendall_z(series) -> float:
    """Trend statistic: S = sum of sign(x_j - x_i) over i < j, normalized."""
    x = np.asarray(series, dtype=float)
    n = x.size
    s = 0
    for i in range(n - 1):
        s += np.sign(x[i + 1 :] - x[i]).sum()
    var = n * (n - 1) * (2 * n + 5) / 18.0
    if s > 0:
        return float((s - 1) / math.sqrt(var))
    if s < 0:
        return float((s + 1) / math.sqrt(var))
    return 0.0


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
