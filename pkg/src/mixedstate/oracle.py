"""Brute-force ground truth on tiny lattices.

The mixture reference measure is discretized into the atoms (Dirac weight
exactly 1) plus midpoint cells of width h on the continuous interval, G being
truncated at a radius for unbounded domains. The joint law exp(Q)/Z is then a
finite probability table; conditionals, marginals, and moments derived from it
certify the analytic machinery of the other modules (Hammersley-Clifford
consistency, closed-form means, cooperation certificates).

Everything is evaluated in log space with max subtraction before
normalization. Table construction is a pure map over grid tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.special import logsumexp

from .automodel import AutoModel
from .errors import DomainError, ParameterError
from .families import MixedStateFamily
from .state_space import Atom, Continuous, MixedValue, StateSpace

__all__ = [
    "Discretization",
    "DiscreteGrid",
    "JointTable",
    "ConditionalTable",
    "joint_table",
    "conditional_from_joint",
    "conditional_fiber",
    "family_distribution_on_grid",
    "moment",
    "total_variation",
    "default_discretization",
]

MAX_SITES = 4
MAX_GRID = 2000
MAX_ENTRIES = 20_000_000


@dataclass
class DiscreteGrid:
    """Atoms followed by ascending continuous midpoints, with their measure weights."""

    space: StateSpace
    atom_idx: np.ndarray  # (g,) int8; 0 marks a continuous cell
    values: np.ndarray  # (g,) coordinates / cell midpoints
    weights: np.ndarray  # (g,) exactly 1 for atoms, the cell width for cells

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    def continuous_mask(self) -> np.ndarray:
        return self.atom_idx == 0

    def value_at(self, k: int) -> MixedValue:
        a = int(self.atom_idx[k])
        return Atom(a) if a > 0 else Continuous(float(self.values[k]))

    def index_of(self, v: MixedValue) -> int:
        """Grid index of an atom, or of the cell containing a continuous value."""
        if v.is_atom:
            if v.atom_index > self.space.M:
                raise DomainError(f"atom index {v.atom_index} > M")
            return v.atom_index - 1
        cont = np.flatnonzero(self.continuous_mask())
        k = cont[np.argmin(np.abs(self.values[cont] - v.value))]
        if abs(self.values[k] - v.value) > 0.5 * self.weights[k] + 1e-12:
            raise DomainError(f"value {v.value} is outside the discretized range")
        return int(k)


@dataclass(frozen=True)
class Discretization:
    """Step h and, for unbounded G, a truncation radius."""

    step: float
    radius: Optional[float] = None

    def __post_init__(self):
        if not self.step > 0.0:
            raise ParameterError(f"step must be positive, got {self.step}")
        if self.radius is not None and not self.radius > self.step:
            raise ParameterError("radius must exceed the step")

    def grid(self, space: StateSpace) -> DiscreteGrid:
        hi = space.domain.hi
        if math.isinf(hi):
            if self.radius is None:
                raise ParameterError("an unbounded domain needs a truncation radius")
            hi = self.radius
        elif self.radius is not None:
            hi = min(hi, self.radius)
        h = self.step
        n_full = int(hi / h)
        mids = (np.arange(n_full) + 0.5) * h
        widths = np.full(n_full, h)
        rem = hi - n_full * h
        if rem > 1e-12 * h:
            mids = np.append(mids, n_full * h + 0.5 * rem)
            widths = np.append(widths, rem)
        m = space.M
        atom_idx = np.concatenate([np.arange(1, m + 1), np.zeros(mids.size)]).astype(np.int8)
        values = np.concatenate([np.array(space.atoms), mids])
        weights = np.concatenate([np.ones(m), widths])
        return DiscreteGrid(space, atom_idx, values, weights)


def default_discretization(model, h: Optional[float] = None) -> Discretization:
    """h defaults to 1e-3 of the domain scale; the radius (unbounded G only)
    puts the continuous tail mass below 1e-8 under the alpha-family."""
    family = model.family
    hi = family.space.domain.hi
    alpha = model.site_alpha(next(model.lattice.sites()))
    if math.isinf(hi):
        xi = np.asarray(alpha[family.M :])
        if family.kind == "positive_gaussian":
            radius = 10.0 / math.sqrt(xi[0])
            scale = radius / 10.0
        elif family.kind == "mixed_gamma":
            a, b = xi[1] + 1.0, xi[0]
            radius = (a + 40.0 * math.sqrt(a) + 40.0) / b
            scale = a / b
        else:
            radius = 40.0 / xi[0]
            scale = 1.0 / xi[0]
        return Discretization(step=(h if h is not None else 1e-3 * scale), radius=radius)
    return Discretization(step=(h if h is not None else 1e-3 * hi), radius=None)


@dataclass
class JointTable:
    """Normalized probability table over grid^|S| with its partition function."""

    model: object
    grid: DiscreteGrid
    sites: list
    probs: np.ndarray
    log_z: float

    @property
    def z(self) -> float:
        return math.exp(self.log_z)

    @property
    def n_sites(self) -> int:
        return len(self.sites)


@dataclass
class ConditionalTable:
    """A distribution over one site's grid."""

    grid: DiscreteGrid
    probs: np.ndarray

    def moment(self, fn) -> float:
        return float(sum(p * fn(self.grid.value_at(k)) for k, p in enumerate(self.probs)))

    def restricted_mean(self) -> float:
        """E[X 1_G(X)] under this distribution."""
        cont = self.grid.continuous_mask()
        return float(np.sum(self.probs[cont] * self.grid.values[cont]))

    def atom_mass(self, k: int) -> float:
        return float(self.probs[k - 1])

    def tv(self, other: "ConditionalTable") -> float:
        return total_variation(self.probs, other.probs)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _axis_view(arr: np.ndarray, axes, n: int) -> np.ndarray:
    """Reshape a 1-D or 2-D array so its axes land at the given table positions."""
    if arr.ndim == 1:
        shape = [1] * n
        shape[axes[0]] = arr.size
        return arr.reshape(shape)
    a, b = axes
    if a > b:
        arr = arr.T
        a, b = b, a
    shape = [1] * n
    shape[a] = arr.shape[0]
    shape[b] = arr.shape[1]
    return arr.reshape(shape)


def joint_table(model, disc: Discretization) -> JointTable:
    """P(x) = exp(Q(x)) w(x) / Z over the product grid; the table sums to 1 and
    the reference configuration has probability exactly 1/Z."""
    lattice = model.lattice
    n = lattice.n_sites
    if n > MAX_SITES:
        raise ParameterError(f"joint tables are limited to {MAX_SITES} sites, got {n}")
    grid = disc.grid(model.family.space)
    g = grid.size
    if n > 1 and g > MAX_GRID:
        raise ParameterError(f"grid size {g} exceeds the guard {MAX_GRID} for {n}-site tables")
    if g**n > MAX_ENTRIES:
        raise ParameterError(f"table would hold {g**n} entries (> {MAX_ENTRIES})")

    sites = list(lattice.sites())
    pos = {s: k for k, s in enumerate(sites)}
    B = model.family.suff_stat_grid(grid.atom_idx, grid.values)
    log_w = grid.log_weights

    log_f = np.zeros((g,) * n)
    for s in sites:
        log_f = log_f + _axis_view(B @ model.site_alpha(s) + log_w, (pos[s],), n)
    for a, b, _ in lattice.edges():
        pair = B @ model.edge_beta(a, b) @ B.T
        log_f = log_f + _axis_view(pair, (pos[a], pos[b]), n)

    if np.isposinf(log_f).any() or np.isnan(log_f).any():
        raise ParameterError("non-finite exp(Q) on the grid; the parameters are likely inadmissible")
    log_z = float(logsumexp(log_f))
    return JointTable(model, grid, sites, np.exp(log_f - log_z), log_z)


def conditional_from_joint(table: JointTable, site, given: Dict) -> ConditionalTable:
    """Slice the joint at the given values of every other site and renormalize."""
    indexer = []
    for s in table.sites:
        if s == site:
            indexer.append(slice(None))
        else:
            if s not in given:
                raise DomainError(f"conditioning values must cover site {s}")
            v = given[s]
            indexer.append(v if isinstance(v, (int, np.integer)) else table.grid.index_of(v))
    fiber = np.asarray(table.probs[tuple(indexer)], dtype=float)
    mass = fiber.sum()
    if mass <= 0.0:
        raise DomainError("conditioning event has zero table mass")
    return ConditionalTable(table.grid, fiber / mass)


def conditional_fiber(model, disc: Discretization, site, neighbor_values: Dict) -> ConditionalTable:
    """The same conditional computed without materializing the table: terms of
    Q not involving the site are constants that cancel on renormalization, so
    only the fiber of exp(Q) along the site's grid is evaluated."""
    grid = disc.grid(model.family.space)
    B = model.family.suff_stat_grid(grid.atom_idx, grid.values)
    logits = B @ model.site_alpha(site) + grid.log_weights
    for nb, _ in model.lattice.neighbors(*site):
        if nb not in neighbor_values:
            raise DomainError(f"neighbour value needed for site {nb}")
        logits = logits + B @ (model.edge_beta(site, nb) @ model.family.suff_stat(neighbor_values[nb]))
    probs = np.exp(logits - logsumexp(logits))
    return ConditionalTable(grid, probs / probs.sum())


def family_distribution_on_grid(family: MixedStateFamily, theta, grid: DiscreteGrid) -> ConditionalTable:
    """A single-variable family law represented on the grid (midpoint masses,
    renormalized); the analytic side of the Hammersley-Clifford certification."""
    theta = family.check_natural(theta)
    B = family.suff_stat_grid(grid.atom_idx, grid.values)
    logits = B @ theta + grid.log_weights
    probs = np.exp(logits - logsumexp(logits))
    return ConditionalTable(grid, probs / probs.sum())


def moment(table, fn) -> float:
    """Weighted sum of fn over the table's support. For a single-site table fn
    receives a MixedValue; for larger tables a tuple of them."""
    if isinstance(table, ConditionalTable):
        return table.moment(fn)
    if table.n_sites == 1:
        return ConditionalTable(table.grid, table.probs).moment(fn)
    flat = table.probs.reshape(-1)
    shape = table.probs.shape
    total = 0.0
    for flat_idx in np.flatnonzero(flat > 0.0):
        idx = np.unravel_index(flat_idx, shape)
        total += flat[flat_idx] * fn(tuple(table.grid.value_at(k) for k in idx))
    return float(total)
