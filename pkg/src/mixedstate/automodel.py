"""Markov random fields with mixed-state conditionals on 4-nearest-neighbour lattices.

The joint density is P(x) = Z^{-1} exp Q(x) with pairwise-only energy

    Q(x) = sum_i <alpha_i, B(x_i)> + sum_{i~j} B(x_i)^T beta_ij B(x_j),

normalized so the all-reference configuration has Q = 0. Compatibility of the
local conditionals forces beta_ij^T = beta_ji and makes the local natural
parameter linear in the neighbours' sufficient statistics,

    theta_i = alpha_i + sum_{j in di} beta_ij B(x_j),

so the conditional at site i is the family's density at theta_i.

Two parameterizations are provided: the translation-invariant scheme (one
alpha, one matrix per lattice direction, symmetric) used everywhere for
estimation, and a general per-site / per-edge scheme that can represent
spatially asymmetric interactions. Parameters are immutable during
evaluation; energy and conditional evaluation are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from .errors import DomainError, InadmissibleParameterError, ParameterError
from .families import MixedStateFamily
from .state_space import Field

__all__ = ["Lattice", "AutoModel", "GeneralAutoModel", "shift_grid"]

Site = Tuple[int, int]


@dataclass(frozen=True)
class Lattice:
    """A rows x cols grid with the four-nearest-neighbour graph.

    Free boundary drops the missing neighbours at the border; toroidal wraps
    (and needs rows, cols >= 3 so no edge is duplicated).
    """

    rows: int
    cols: int
    boundary: str = "free"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("lattice dimensions must be positive")
        if self.boundary not in ("free", "toroidal"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "toroidal" and (self.rows < 3 or self.cols < 3):
            raise DomainError("a toroidal lattice needs rows, cols >= 3")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def sites(self) -> Iterator[Site]:
        for i in range(self.rows):
            for j in range(self.cols):
                yield (i, j)

    def neighbors(self, i: int, j: int):
        """[(site, direction)] with direction 'h' or 'v'; symmetric, no loops."""
        out = []
        for dj in (-1, 1):
            jj = j + dj
            if self.boundary == "toroidal":
                out.append(((i, jj % self.cols), "h"))
            elif 0 <= jj < self.cols:
                out.append(((i, jj), "h"))
        for di in (-1, 1):
            ii = i + di
            if self.boundary == "toroidal":
                out.append(((ii % self.rows, j), "v"))
            elif 0 <= ii < self.rows:
                out.append(((ii, j), "v"))
        return out

    def edges(self) -> Iterator[Tuple[Site, Site, str]]:
        """Each undirected edge once, as (site_a, site_b, direction)."""
        for i in range(self.rows):
            for j in range(self.cols):
                if j + 1 < self.cols:
                    yield (i, j), (i, j + 1), "h"
                elif self.boundary == "toroidal":
                    yield (i, j), (i, 0), "h"
                if i + 1 < self.rows:
                    yield (i, j), (i + 1, j), "v"
                elif self.boundary == "toroidal":
                    yield (i, j), (0, j), "v"

    def max_neighbor_counts(self) -> Tuple[int, int]:
        """(horizontal, vertical) neighbour counts of a worst-case site."""
        if self.boundary == "toroidal":
            return 2, 2
        return min(2, self.cols - 1), min(2, self.rows - 1)


def shift_grid(arr: np.ndarray, di: int, dj: int, boundary: str) -> np.ndarray:
    """out[i, j] = arr[i+di, j+dj]; zero-filled outside under free boundary
    (zero is B at the reference state, so missing neighbours contribute 0)."""
    if boundary == "toroidal":
        return np.roll(np.roll(arr, -di, axis=0), -dj, axis=1)
    out = np.zeros_like(arr)
    rows, cols = arr.shape[:2]
    i0, i1 = max(0, -di), rows - max(0, di)
    j0, j1 = max(0, -dj), cols - max(0, dj)
    if i0 < i1 and j0 < j1:
        out[i0:i1, j0:j1] = arr[i0 + di : i1 + di, j0 + dj : j1 + dj]
    return out


class AutoModel:
    """Translation-invariant symmetric auto-model: one natural-parameter offset
    alpha and one symmetric interaction matrix per lattice direction."""

    def __init__(
        self,
        family: MixedStateFamily,
        lattice: Lattice,
        alpha,
        beta_h,
        beta_v,
        require_symmetric: bool = True,
    ):
        dim = family.dim
        alpha = np.asarray(alpha, dtype=float)
        beta_h = np.asarray(beta_h, dtype=float)
        beta_v = np.asarray(beta_v, dtype=float)
        if alpha.shape != (dim,):
            raise ParameterError(f"alpha must have shape ({dim},), got {alpha.shape}")
        for name, b in (("beta_h", beta_h), ("beta_v", beta_v)):
            if b.shape != (dim, dim):
                raise ParameterError(f"{name} must be {dim}x{dim}, got {b.shape}")
            if require_symmetric and not np.array_equal(b, b.T):
                raise ParameterError(
                    f"{name} must be symmetric in the translation-invariant scheme; "
                    "use GeneralAutoModel for asymmetric interactions"
                )
        self.family = family
        self.lattice = lattice
        self.alpha = alpha
        self.beta_h = beta_h
        self.beta_v = beta_v
        self.alpha.setflags(write=False)
        self.beta_h.setflags(write=False)
        self.beta_v.setflags(write=False)

    @classmethod
    def isotropic(cls, family, lattice, alpha, beta) -> "AutoModel":
        return cls(family, lattice, alpha, beta, beta)

    @property
    def is_isotropic(self) -> bool:
        return bool(np.array_equal(self.beta_h, self.beta_v))

    # -- shared parameter interface (also provided by GeneralAutoModel) ----

    def site_alpha(self, site: Site) -> np.ndarray:
        return self.alpha

    def edge_beta(self, site_a: Site, site_b: Site) -> np.ndarray:
        """beta oriented a -> b; symmetric here, so direction only selects h/v."""
        return self.beta_h if site_a[0] == site_b[0] else self.beta_v

    # -- evaluation ---------------------------------------------------------

    def _check_field(self, field: Field) -> None:
        if field.shape != self.lattice.shape:
            raise DomainError(f"field {field.shape} does not match the lattice {self.lattice.shape}")
        if field.space != self.family.space:
            raise DomainError("field state space does not match the family's")

    def neighbor_stat_sums(self, B: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Per-site sums of neighbour sufficient statistics, split by direction."""
        bd = self.lattice.boundary
        s_h = shift_grid(B, 0, 1, bd) + shift_grid(B, 0, -1, bd)
        s_v = shift_grid(B, 1, 0, bd) + shift_grid(B, -1, 0, bd)
        return s_h, s_v

    def natural_params_grid(self, field: Field, validate: bool = True) -> np.ndarray:
        """theta at every site, shape (rows, cols, dim)."""
        self._check_field(field)
        B = self.family.suff_stat_field(field)
        s_h, s_v = self.neighbor_stat_sums(B)
        theta = (
            self.alpha
            + np.einsum("kl,rcl->rck", self.beta_h, s_h)
            + np.einsum("kl,rcl->rck", self.beta_v, s_v)
        )
        if validate:
            ok = self.family.natural_valid_grid(theta)
            if not np.all(ok):
                i, j = np.argwhere(~ok)[0]
                raise InadmissibleParameterError(
                    f"local natural parameter outside Theta at site ({i}, {j}): {theta[i, j]}",
                    site=(int(i), int(j)),
                )
        return theta

    def local_natural_params(self, field: Field, site: Site) -> np.ndarray:
        """theta_i = alpha + beta_h (B_e + B_w) + beta_v (B_n + B_s); depends
        only on the neighbours of the site."""
        self._check_field(field)
        i, j = site
        theta = self.alpha.copy()
        for (ni, nj), direction in self.lattice.neighbors(i, j):
            b = self.family.suff_stat(field.get(ni, nj))
            beta = self.beta_h if direction == "h" else self.beta_v
            theta += beta @ b
        if not self.family.natural_valid(theta):
            raise InadmissibleParameterError(
                f"local natural parameter outside Theta at site {site}: {theta}", site=site
            )
        return theta

    def local_conditional(self, field: Field, site: Site):
        """(family, theta_i): the conditional law of x_i given its neighbours."""
        return self.family, self.local_natural_params(field, site)

    def energy(self, field: Field) -> float:
        """Q(field); exactly 0 at the all-reference configuration."""
        self._check_field(field)
        B = self.family.suff_stat_field(field)
        total = float(np.einsum("rck,k->", B, self.alpha))
        total += float(np.einsum("rck,kl,rcl->", B[:, :-1], self.beta_h, B[:, 1:]))
        total += float(np.einsum("rck,kl,rcl->", B[:-1, :], self.beta_v, B[1:, :]))
        if self.lattice.boundary == "toroidal":
            total += float(np.einsum("rk,kl,rl->", B[:, -1], self.beta_h, B[:, 0]))
            total += float(np.einsum("ck,kl,cl->", B[-1, :], self.beta_v, B[0, :]))
        return total

    def __repr__(self) -> str:
        return (
            f"AutoModel({self.family!r}, {self.lattice.rows}x{self.lattice.cols} "
            f"{self.lattice.boundary}, isotropic={self.is_isotropic})"
        )


class GeneralAutoModel:
    """Per-site alphas and per-edge interaction matrices.

    Each undirected edge is stored once under a canonical orientation
    (site_a, site_b); the reverse orientation uses the transpose, which is the
    compatibility requirement beta_ij^T = beta_ji. Asymmetric matrices are
    allowed, so spatially asymmetric interactions are representable.
    """

    def __init__(self, family: MixedStateFamily, lattice: Lattice, alphas: Dict, betas: Dict):
        dim = family.dim
        self.family = family
        self.lattice = lattice
        self._alphas = {}
        for site in lattice.sites():
            a = np.asarray(alphas[site], dtype=float)
            if a.shape != (dim,):
                raise ParameterError(f"alpha at {site} must have shape ({dim},)")
            self._alphas[site] = a
        valid_edges = {frozenset((a, b)) for a, b, _ in lattice.edges()}
        self._betas = {}
        seen = set()
        for (a, b), m in betas.items():
            key = frozenset((a, b))
            if key not in valid_edges:
                raise ParameterError(f"({a}, {b}) is not a lattice edge")
            if key in seen:
                raise ParameterError(f"edge {{{a}, {b}}} given twice")
            seen.add(key)
            m = np.asarray(m, dtype=float)
            if m.shape != (dim, dim):
                raise ParameterError(f"beta for edge ({a}, {b}) must be {dim}x{dim}")
            self._betas[(a, b)] = m
        for key in valid_edges - seen:
            a, b = sorted(key)
            self._betas[(a, b)] = np.zeros((dim, dim))

    def site_alpha(self, site: Site) -> np.ndarray:
        return self._alphas[site]

    def edge_beta(self, site_a: Site, site_b: Site) -> np.ndarray:
        if (site_a, site_b) in self._betas:
            return self._betas[(site_a, site_b)]
        if (site_b, site_a) in self._betas:
            return self._betas[(site_b, site_a)].T
        raise ParameterError(f"({site_a}, {site_b}) is not a lattice edge")

    def stored_edges(self):
        return list(self._betas.items())

    def _check_field(self, field: Field) -> None:
        if field.shape != self.lattice.shape:
            raise DomainError(f"field {field.shape} does not match the lattice {self.lattice.shape}")
        if field.space != self.family.space:
            raise DomainError("field state space does not match the family's")

    def local_natural_params(self, field: Field, site: Site) -> np.ndarray:
        self._check_field(field)
        theta = self._alphas[site].copy()
        for nb, _ in self.lattice.neighbors(*site):
            theta += self.edge_beta(site, nb) @ self.family.suff_stat(field.get(*nb))
        if not self.family.natural_valid(theta):
            raise InadmissibleParameterError(
                f"local natural parameter outside Theta at site {site}: {theta}", site=site
            )
        return theta

    def local_conditional(self, field: Field, site: Site):
        return self.family, self.local_natural_params(field, site)

    def energy(self, field: Field) -> float:
        self._check_field(field)
        B = {site: self.family.suff_stat(field.get(*site)) for site in self.lattice.sites()}
        total = sum(float(self._alphas[s] @ B[s]) for s in self.lattice.sites())
        for (a, b), m in self._betas.items():
            total += float(B[a] @ m @ B[b])
        return total

    def __repr__(self) -> str:
        return f"GeneralAutoModel({self.family!r}, {self.lattice.rows}x{self.lattice.cols})"
