"""Mixed-state exponential families.

Each family describes a random variable on E = {e_1,...,e_M} union G whose
density with respect to the mixture measure (sum of Dirac masses plus
Lebesgue on G) has exponential-family form

    f(x) = exp( <theta, B(x)> - A(theta) ),

with sufficient statistic

    B(x) = ( 1_{e_1}(x), ..., 1_{e_{M-1}}(x), 1_G(x), T(x) 1_G(x) )

of dimension M + ell. The reference atom e_M has B(e_M) = 0, so the mass it
carries is exp(-A(theta)). All five families here have a unit carrier on G
(their continuous base density is H(xi) exp<xi, T(x)> with no extra factor),
so no log-carrier term appears anywhere.

The log-normalizer is computed in closed form,

    A(theta) = logsumexp( 0, theta_1, ..., theta_{M-1}, theta_M - log H(xi) ),

where H(xi) normalizes the continuous component; its gradient is the mean of
B, assembled from the category probabilities and the continuous-component
moments, which each family supplies analytically.

Parameter values are immutable; sampling takes a caller-owned
numpy.random.Generator, so there is no hidden shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import digamma, gammainc, gammaln, erf

from .errors import DomainError, ParameterError
from .state_space import Atom, Continuous, Field, Interval, MixedValue, StateSpace

__all__ = [
    "OriginalParams",
    "MixedStateFamily",
    "MixedExponential",
    "MixedGamma",
    "PositiveMixedGaussian",
    "TruncatedMixedExponential",
    "CensoredMixedExponential",
    "family_from_kind",
    "FAMILY_KINDS",
]


@dataclass(frozen=True)
class OriginalParams:
    """Original parameterization: total atom probability gamma in (0,1), a
    positive distribution q over the M atoms, and the continuous-family
    parameter xi (length ell)."""

    gamma: float
    q: tuple
    xi: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in np.atleast_1d(self.q)))
        object.__setattr__(self, "xi", tuple(float(v) for v in np.atleast_1d(self.xi)))

    def q_array(self) -> np.ndarray:
        return np.array(self.q)

    def xi_array(self) -> np.ndarray:
        return np.array(self.xi)


def _logsumexp_last(a: np.ndarray) -> np.ndarray:
    """Max-subtracted log-sum-exp over the trailing axis (lighter than the
    scipy version, which dominates the sitewise sampling profile)."""
    m = np.max(a, axis=-1, keepdims=True)
    return np.squeeze(m, -1) + np.log(np.sum(np.exp(a - m), axis=-1))


class MixedStateFamily:
    """Base class; subclasses fill in the continuous component on G."""

    kind: str = ""
    ell: int = 1
    M: int = 1

    @property
    def dim(self) -> int:
        return self.ell + self.M

    @property
    def space(self) -> StateSpace:
        raise NotImplementedError

    # -- continuous-component hooks (vectorized over leading axes) ---------

    def _xi_valid(self, xi) -> np.ndarray:
        """Boolean mask: xi inside the continuous family's parameter domain."""
        raise NotImplementedError

    def _log_h(self, xi) -> np.ndarray:
        """log H(xi), the continuous component's normalizing factor."""
        raise NotImplementedError

    def _t_stat(self, x) -> np.ndarray:
        """T(x) with trailing axis ell; x is assumed strictly inside G."""
        raise NotImplementedError

    def _mean_t(self, xi) -> np.ndarray:
        """E_g[T(X)] under the continuous component, trailing axis ell."""
        raise NotImplementedError

    def _mean_x(self, xi) -> np.ndarray:
        """E_g[X] under the continuous component."""
        raise NotImplementedError

    def _draw_continuous(self, xi, rng) -> np.ndarray:
        """One draw from g_xi per entry of xi (leading axes)."""
        raise NotImplementedError

    def continuous_cdf(self, x, xi) -> np.ndarray:
        """CDF of the continuous component (used by sampler-law tests)."""
        raise NotImplementedError

    # -- natural parameter domain ------------------------------------------

    def natural_valid_grid(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.isfinite(theta).all(axis=-1) & self._xi_valid(theta[..., self.M :])

    def natural_valid(self, theta) -> bool:
        return bool(self.natural_valid_grid(np.asarray(theta, dtype=float)))

    def check_natural(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.dim:
            raise ParameterError(f"{self.kind}: theta must have length {self.dim}")
        if not np.all(self.natural_valid_grid(theta)):
            raise ParameterError(f"{self.kind}: theta outside the admissible set: {theta}")
        return theta

    # -- sufficient statistic ------------------------------------------------

    def suff_stat(self, v: MixedValue) -> np.ndarray:
        """B(v); zero exactly at the reference atom e_M."""
        self.space.validate(v)
        out = np.zeros(self.dim)
        if v.is_continuous:
            out[self.M - 1] = 1.0
            out[self.M :] = self._t_stat(v.value)
        elif v.atom_index < self.M:
            out[v.atom_index - 1] = 1.0
        return out

    def suff_stat_grid(self, atom_idx, values) -> np.ndarray:
        """Vectorized B over aligned (atom_idx, values) arrays; trailing axis dim."""
        atom_idx = np.asarray(atom_idx)
        values = np.asarray(values, dtype=float)
        cont = atom_idx == 0
        out = np.zeros(atom_idx.shape + (self.dim,))
        for k in range(1, self.M):
            out[..., k - 1] = atom_idx == k
        out[..., self.M - 1] = cont
        safe = np.where(cont, values, 1.0)
        out[..., self.M :] = self._t_stat(safe) * cont[..., None]
        return out

    def suff_stat_field(self, f: Field) -> np.ndarray:
        return self.suff_stat_grid(f.atom_idx, f.values)

    # -- log-normalizer and derived probabilities ---------------------------

    def _category_logits(self, theta) -> np.ndarray:
        """Unnormalized log-masses of the M+1 categories, ordered
        (atom_1, ..., atom_{M-1}, reference atom e_M, continuous)."""
        theta = np.asarray(theta, dtype=float)
        parts = [theta[..., : self.M - 1], np.zeros(theta.shape[:-1] + (1,))]
        xi = theta[..., self.M :]
        cont = theta[..., self.M - 1] - self._log_h(xi)
        parts.append(cont[..., None])
        return np.concatenate(parts, axis=-1)

    def log_normalizer_grid(self, theta) -> np.ndarray:
        return _logsumexp_last(self._category_logits(theta))

    def log_normalizer(self, theta) -> float:
        theta = self.check_natural(theta)
        return float(self.log_normalizer_grid(theta))

    def _category_probs(self, theta) -> np.ndarray:
        logits = self._category_logits(theta)
        return np.exp(logits - _logsumexp_last(logits)[..., None])

    def atom_masses(self, theta) -> np.ndarray:
        """Probabilities of (Atom(1), ..., Atom(M)); sums to the total gamma."""
        theta = self.check_natural(theta)
        p = self._category_probs(theta)
        return np.concatenate([p[..., : self.M - 1], p[..., self.M - 1 : self.M]], axis=-1)

    def grad_log_normalizer_grid(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        p = self._category_probs(theta)
        out = np.empty_like(theta)
        out[..., : self.M - 1] = p[..., : self.M - 1]
        p_g = p[..., self.M]
        out[..., self.M - 1] = p_g
        out[..., self.M :] = p_g[..., None] * self._mean_t(theta[..., self.M :])
        return out

    def grad_log_normalizer(self, theta) -> np.ndarray:
        """E_theta[B(X)], the exponential-family mean identity."""
        theta = self.check_natural(theta)
        return self.grad_log_normalizer_grid(theta)

    def log_density(self, v: MixedValue, theta) -> float:
        """Log density of v with respect to the mixture reference measure."""
        theta = self.check_natural(theta)
        b = self.suff_stat(v)
        return float(b @ theta - self.log_normalizer_grid(theta))

    def continuous_restricted_mean(self, theta) -> float:
        """E[X 1_G(X)] = P(X in G) * E_g[X]; the quantity whose monotonicity
        in neighbouring values defines spatial cooperation."""
        theta = self.check_natural(theta)
        p_g = self._category_probs(theta)[..., self.M]
        return float(p_g * self._mean_x(theta[..., self.M :]))

    # -- original <-> natural ------------------------------------------------

    def natural_from_original(self, orig: OriginalParams) -> np.ndarray:
        """(k_1,...,k_{M-1}, log((1-gamma)H(xi)/(gamma q_M)), xi).

        Raises on the gamma in {0,1} boundary, where the map is undefined.
        """
        gamma = float(orig.gamma)
        q = orig.q_array()
        xi = orig.xi_array()
        if not 0.0 < gamma < 1.0:
            raise ParameterError(f"gamma={gamma} is on the boundary; the parameter maps need gamma in (0,1)")
        if q.shape != (self.M,) or np.any(q <= 0.0):
            raise ParameterError(f"q must be a positive distribution over {self.M} atoms, got {q}")
        if not math.isclose(q.sum(), 1.0, rel_tol=1e-9):
            raise ParameterError(f"q must sum to 1, got {q.sum()}")
        if xi.shape != (self.ell,) or not np.all(self._xi_valid(xi)):
            raise ParameterError(f"xi={xi} outside the continuous family's domain")
        theta = np.empty(self.dim)
        theta[: self.M - 1] = np.log(q[: self.M - 1] / q[self.M - 1])
        theta[self.M - 1] = math.log1p(-gamma) - math.log(gamma) - math.log(q[self.M - 1]) + float(self._log_h(xi))
        theta[self.M :] = xi
        return theta

    def original_from_natural(self, theta) -> OriginalParams:
        theta = self.check_natural(theta)
        k = np.concatenate([theta[: self.M - 1], [0.0]])
        log_q = k - _logsumexp_last(k)
        xi = theta[self.M :]
        # gamma = H / (H + q_M e^{theta_M}) as a stable sigmoid
        log_ratio = theta[self.M - 1] + log_q[self.M - 1] - float(self._log_h(xi))
        gamma = 1.0 / (1.0 + math.exp(log_ratio))
        return OriginalParams(gamma=gamma, q=tuple(np.exp(log_q)), xi=tuple(xi))

    # -- sampling --------------------------------------------------------------

    def sample_grid(self, theta, rng: np.random.Generator):
        """One exact draw per entry of a (..., dim) theta array.

        Returns aligned (atom_idx, values) arrays; atom cells carry the atom
        coordinate in values. Consumes a fixed number of rng draws regardless
        of outcomes, so output is deterministic given (theta, rng state).
        """
        theta = np.asarray(theta, dtype=float)
        if not np.all(self.natural_valid_grid(theta)):
            raise ParameterError(f"{self.kind}: theta outside the admissible set")
        p = self._category_probs(theta)
        atom_cum = np.cumsum(p[..., : self.M], axis=-1)
        u = rng.random(theta.shape[:-1])
        chosen = np.sum(u[..., None] >= atom_cum, axis=-1)  # 0..M; M means continuous
        cont = chosen >= self.M
        draws = self._draw_continuous(theta[..., self.M :], rng)
        atom_idx = np.where(cont, 0, chosen + 1).astype(np.int8)
        coords = np.array(self.space.atoms)[np.where(cont, 0, chosen)]
        values = np.where(cont, draws, coords)
        return atom_idx, values

    def sample(self, theta, rng: np.random.Generator) -> MixedValue:
        theta = self.check_natural(theta)
        atom_idx, values = self.sample_grid(theta, rng)
        k = int(atom_idx)
        return Atom(k) if k > 0 else Continuous(float(values))

    def sample_original(self, orig: OriginalParams, rng: np.random.Generator) -> MixedValue:
        """Two-stage draw in the original parameterization; unlike the natural
        maps this tolerates the degenerate gamma in {0,1}."""
        gamma = float(orig.gamma)
        if not 0.0 <= gamma <= 1.0:
            raise ParameterError(f"gamma={gamma} outside [0,1]")
        if rng.random() < gamma:
            q = orig.q_array()
            k = int(rng.choice(self.M, p=q / q.sum())) + 1
            return Atom(k)
        xi = orig.xi_array()
        if not np.all(self._xi_valid(xi)):
            raise ParameterError(f"xi={xi} outside the continuous family's domain")
        return Continuous(float(self._draw_continuous(xi, rng)))

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and getattr(self, "K", None) == getattr(other, "K", None)

    def __hash__(self):
        return hash((type(self).__name__, getattr(self, "K", None)))

    def __repr__(self) -> str:
        k = getattr(self, "K", None)
        return f"{type(self).__name__}()" if k is None else f"{type(self).__name__}(K={k})"


# ---------------------------------------------------------------------------


class MixedExponential(MixedStateFamily):
    """Atom at 0 plus Exp(lambda) on (0,inf); theta = (log((1-gamma)lambda/gamma), lambda)."""

    kind = "mixed_exponential"
    ell = 1
    M = 1

    @property
    def space(self) -> StateSpace:
        return StateSpace(atoms=(0.0,), domain=Interval())

    def _xi_valid(self, xi):
        return np.asarray(xi)[..., 0] > 0.0

    def _log_h(self, xi):
        return np.log(np.asarray(xi)[..., 0])

    def _t_stat(self, x):
        return -np.asarray(x, dtype=float)[..., None]

    def _mean_t(self, xi):
        return -1.0 / np.asarray(xi)

    def _mean_x(self, xi):
        return 1.0 / np.asarray(xi)[..., 0]

    def _draw_continuous(self, xi, rng):
        return rng.exponential(scale=1.0 / np.asarray(xi)[..., 0])

    def continuous_cdf(self, x, xi):
        lam = np.asarray(xi)[..., 0]
        return -np.expm1(-lam * np.asarray(x))


class MixedGamma(MixedStateFamily):
    """Atom at 0 plus Gamma(a, rate b) on (0,inf); xi = (b, a-1), T = (-x, log x)."""

    kind = "mixed_gamma"
    ell = 2
    M = 1

    @property
    def space(self) -> StateSpace:
        return StateSpace(atoms=(0.0,), domain=Interval())

    @staticmethod
    def _ab(xi):
        xi = np.asarray(xi, dtype=float)
        return xi[..., 1] + 1.0, xi[..., 0]

    def _xi_valid(self, xi):
        a, b = self._ab(xi)
        return (b > 0.0) & (a > 0.0)

    def _log_h(self, xi):
        a, b = self._ab(xi)
        return a * np.log(b) - gammaln(a)

    def _t_stat(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x, np.log(x)], axis=-1)

    def _mean_t(self, xi):
        a, b = self._ab(xi)
        return np.stack([-a / b, digamma(a) - np.log(b)], axis=-1)

    def _mean_x(self, xi):
        a, b = self._ab(xi)
        return a / b

    def _draw_continuous(self, xi, rng):
        a, b = self._ab(xi)
        return rng.gamma(shape=a, scale=1.0 / b)

    def continuous_cdf(self, x, xi):
        a, b = self._ab(xi)
        return gammainc(a, b * np.asarray(x))


class PositiveMixedGaussian(MixedStateFamily):
    """Atom at 0 plus |N(0, sigma^2)| on (0,inf); xi = 1/(2 sigma^2), T = -x^2."""

    kind = "positive_gaussian"
    ell = 1
    M = 1

    @property
    def space(self) -> StateSpace:
        return StateSpace(atoms=(0.0,), domain=Interval())

    def _xi_valid(self, xi):
        return np.asarray(xi)[..., 0] > 0.0

    def _log_h(self, xi):
        # H(xi) = g_xi(0) = 2 sqrt(xi/pi)
        return math.log(2.0) + 0.5 * (np.log(np.asarray(xi)[..., 0]) - math.log(math.pi))

    def _t_stat(self, x):
        x = np.asarray(x, dtype=float)
        return -(x * x)[..., None]

    def _mean_t(self, xi):
        return -0.5 / np.asarray(xi)

    def _mean_x(self, xi):
        # E|N(0, sigma^2)| = sigma sqrt(2/pi) = 1/sqrt(pi xi)
        return 1.0 / np.sqrt(math.pi * np.asarray(xi)[..., 0])

    def _draw_continuous(self, xi, rng):
        sigma = 1.0 / np.sqrt(2.0 * np.asarray(xi)[..., 0])
        return np.abs(rng.normal(0.0, 1.0, size=sigma.shape) * sigma)

    def continuous_cdf(self, x, xi):
        return erf(np.asarray(x) * np.sqrt(np.asarray(xi)[..., 0]))


def _truncated_exp_mean(lam, K):
    """Mean of Exp(lam) restricted to (0, K): 1/lam - K/(e^{lam K} - 1).

    Series for tiny lam*K (cancellation), plain 1/lam for huge lam*K (the
    truncation term underflows)."""
    lam = np.asarray(lam, dtype=float)
    u = lam * K
    small = u < 1e-4
    large = u > 700.0
    u_mid = np.where(small | large, 1.0, u)
    direct = (1.0 / u_mid - 1.0 / np.expm1(u_mid)) * K
    series = K * (0.5 - u / 12.0 + u**3 / 720.0)
    return np.where(small, series, np.where(large, 1.0 / lam, direct))


class TruncatedMixedExponential(MixedStateFamily):
    """Atom at 0 plus an exponential truncated to (0, K]; T = -x."""

    kind = "truncated_exponential"
    ell = 1
    M = 1

    def __init__(self, K: float):
        if not K > 0.0:
            raise ParameterError(f"truncation level must be positive, got K={K}")
        self.K = float(K)

    @property
    def space(self) -> StateSpace:
        return StateSpace(atoms=(0.0,), domain=Interval(hi=self.K, closed_hi=True))

    def _xi_valid(self, xi):
        return np.asarray(xi)[..., 0] > 0.0

    def _log_h(self, xi):
        lam = np.asarray(xi)[..., 0]
        return np.log(lam) - np.log(-np.expm1(-lam * self.K))

    def _t_stat(self, x):
        return -np.asarray(x, dtype=float)[..., None]

    def _mean_t(self, xi):
        return -_truncated_exp_mean(np.asarray(xi)[..., 0], self.K)[..., None]

    def _mean_x(self, xi):
        return _truncated_exp_mean(np.asarray(xi)[..., 0], self.K)

    def _draw_continuous(self, xi, rng):
        lam = np.asarray(xi)[..., 0]
        u = rng.random(lam.shape)
        return -np.log1p(u * np.expm1(-lam * self.K)) / lam

    def continuous_cdf(self, x, xi):
        lam = np.asarray(xi)[..., 0]
        return np.expm1(-lam * np.asarray(x)) / np.expm1(-lam * self.K)


class CensoredMixedExponential(MixedStateFamily):
    """Atoms at 0 and K plus an exponential density on (0, K); the censoring
    atom K is the reference state.

    In the single-variable censored model the three natural coordinates are
    tied through (alpha, lambda); here the full 3-vector varies freely (the
    auto-model construction moves the coordinates independently), so no such
    constraint is imposed -- only theta_3 > 0.
    """

    kind = "censored_exponential"
    ell = 1
    M = 2

    def __init__(self, K: float):
        if not K > 0.0:
            raise ParameterError(f"censoring level must be positive, got K={K}")
        self.K = float(K)

    @property
    def space(self) -> StateSpace:
        return StateSpace(atoms=(0.0, self.K), domain=Interval(hi=self.K, closed_hi=False))

    def _xi_valid(self, xi):
        return np.asarray(xi)[..., 0] > 0.0

    def _log_h(self, xi):
        lam = np.asarray(xi)[..., 0]
        return np.log(lam) - np.log(-np.expm1(-lam * self.K))

    def _t_stat(self, x):
        return -np.asarray(x, dtype=float)[..., None]

    def _mean_t(self, xi):
        return -_truncated_exp_mean(np.asarray(xi)[..., 0], self.K)[..., None]

    def _mean_x(self, xi):
        return _truncated_exp_mean(np.asarray(xi)[..., 0], self.K)

    def _draw_continuous(self, xi, rng):
        lam = np.asarray(xi)[..., 0]
        u = rng.random(lam.shape)
        return -np.log1p(u * np.expm1(-lam * self.K)) / lam

    def continuous_cdf(self, x, xi):
        lam = np.asarray(xi)[..., 0]
        return np.expm1(-lam * np.asarray(x)) / np.expm1(-lam * self.K)

    def continuous_restricted_mean(self, theta) -> float:
        """E[X 1_{(0,K]}(X)]: the censoring atom at K counts into the
        positive-part mean (equivalently, the plain mean of the coordinate,
        since the other atom sits at 0); this is the functional whose
        monotonicity in neighbouring values classifies cooperation."""
        theta = self.check_natural(theta)
        p = self._category_probs(theta)
        p_g, p_ref = p[..., self.M], p[..., self.M - 1]
        return float(p_g * self._mean_x(theta[..., self.M :]) + p_ref * self.K)

    # -- the (alpha, lambda) censoring parameterization --------------------

    def original_from_censoring(self, alpha: float, lam: float) -> OriginalParams:
        """X = 0 with probability alpha, else an Exp(lam) censored at K."""
        if not 0.0 < alpha < 1.0:
            raise ParameterError(f"alpha={alpha} must lie in (0,1)")
        if not lam > 0.0:
            raise ParameterError(f"lambda={lam} must be positive")
        p_cens = (1.0 - alpha) * math.exp(-lam * self.K)
        gamma = alpha + p_cens
        return OriginalParams(gamma=gamma, q=(alpha / gamma, p_cens / gamma), xi=(lam,))

    def natural_from_censoring(self, alpha: float, lam: float) -> np.ndarray:
        """theta = (log(alpha/(1-alpha)) + lam K, log lam + lam K, lam)."""
        return self.natural_from_original(self.original_from_censoring(alpha, lam))

    def censoring_from_natural(self, theta) -> tuple:
        """Recover (alpha, lambda); exact when theta lies on the censored manifold."""
        theta = self.check_natural(theta)
        lam = float(theta[2])
        alpha = 1.0 / (1.0 + math.exp(-(theta[0] - lam * self.K)))
        return alpha, lam


FAMILY_KINDS = {
    "mixed_exponential": MixedExponential,
    "mixed_gamma": MixedGamma,
    "positive_gaussian": PositiveMixedGaussian,
    "truncated_exponential": TruncatedMixedExponential,
    "censored_exponential": CensoredMixedExponential,
}


def family_from_kind(kind: str, K: Optional[float] = None) -> MixedStateFamily:
    """Instantiate a family by its registry name; K required for the bounded ones."""
    key = kind.strip().lower().replace("-", "_")
    if key not in FAMILY_KINDS:
        raise ParameterError(f"unknown family kind {kind!r}; known: {sorted(FAMILY_KINDS)}")
    cls = FAMILY_KINDS[key]
    if cls in (TruncatedMixedExponential, CensoredMixedExponential):
        if K is None:
            raise ParameterError(f"{kind} requires the level K")
        return cls(K)
    if K is not None:
        raise ParameterError(f"{kind} takes no level K")
    return cls()
