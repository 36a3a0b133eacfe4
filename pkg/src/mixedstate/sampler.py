"""Gibbs sampling of admissible auto-models through their local conditionals.

A sweep re-draws every site exactly once from its conditional given the
current neighbours; the scan order is raster (row-major), random (a fresh
permutation per sweep), or checkerboard. The two colour classes of the
4-nearest-neighbour graph are conditionally independent, so the checkerboard
scan updates each colour as one vectorized draw -- it is the fast path for
large lattices (on a torus it requires even side lengths, otherwise the wrap
joins sites of equal colour).

Output is deterministic given (model, config): one chain owns one field and
one random generator, never shared. Inadmissible local parameters met during
a sweep raise immediately -- that is the runtime signal for parameter sets
the sufficient-only admissibility checks let through.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Optional, Union

import numpy as np

from .automodel import AutoModel
from .errors import DomainError, InadmissibleParameterError, ParameterError
from .state_space import Field

__all__ = [
    "AllReference",
    "AllContinuous",
    "GibbsConfig",
    "SimulationResult",
    "gibbs_sweep",
    "simulate",
    "initial_field",
]

SCANS = ("raster", "random", "checkerboard")


@dataclass(frozen=True)
class AllReference:
    """Start from tau = (e_M, ..., e_M); Q(tau) = 0."""


@dataclass(frozen=True)
class AllContinuous:
    value: float


InitSpec = Union[AllReference, AllContinuous, Field]


@dataclass(frozen=True)
class GibbsConfig:
    sweeps: int
    burn_in: int = 0
    scan: str = "raster"
    seed: int = 0
    init: InitSpec = dataclass_field(default_factory=AllReference)

    def __post_init__(self):
        if self.sweeps < 1:
            raise ParameterError("need at least one sweep")
        if not 0 <= self.burn_in < self.sweeps:
            raise ParameterError("burn_in must satisfy 0 <= burn_in < sweeps")
        if self.scan not in SCANS:
            raise ParameterError(f"scan must be one of {SCANS}")


@dataclass
class SimulationResult:
    field: Field
    energy_trace: np.ndarray  # one entry per sweep, burn-in included
    config: GibbsConfig

    def post_burn_in_trace(self) -> np.ndarray:
        return self.energy_trace[self.config.burn_in :]


def initial_field(model, init: InitSpec) -> Field:
    space = model.family.space
    rows, cols = model.lattice.shape
    if isinstance(init, AllReference):
        return Field.full_reference(space, rows, cols)
    if isinstance(init, AllContinuous):
        return Field.full_continuous(space, rows, cols, init.value)
    if isinstance(init, Field):
        if init.shape != (rows, cols):
            raise DomainError(f"initial field {init.shape} does not match the lattice {(rows, cols)}")
        return init.copy()
    raise ParameterError(f"unknown init {init!r}")


def _raster_order(lattice):
    return list(lattice.sites())


def _sweep_sitewise(model, field: Field, rng: np.random.Generator, order) -> None:
    family = model.family
    stats = family.suff_stat_field(field)  # cache, updated as sites are redrawn
    for site in order:
        theta = model.site_alpha(site).copy()
        for nb, _ in model.lattice.neighbors(*site):
            theta += model.edge_beta(site, nb) @ stats[nb]
        if not family.natural_valid(theta):
            raise InadmissibleParameterError(
                f"local natural parameter outside Theta at site {site}: {theta}", site=site
            )
        atom_idx, value = family.sample_grid(theta, rng)
        field.atom_idx[site] = atom_idx
        field.values[site] = value
        stats[site] = family.suff_stat_grid(atom_idx, value)


def _sweep_checkerboard(model: AutoModel, field: Field, rng: np.random.Generator, masks) -> None:
    family = model.family
    B = family.suff_stat_field(field)
    for mask in masks:
        s_h, s_v = model.neighbor_stat_sums(B)
        theta = (
            model.alpha
            + np.einsum("kl,rcl->rck", model.beta_h, s_h)
            + np.einsum("kl,rcl->rck", model.beta_v, s_v)
        )
        theta_sel = theta[mask]
        ok = family.natural_valid_grid(theta_sel)
        if not np.all(ok):
            rows, cols = np.nonzero(mask)
            bad = int(np.argmin(ok))
            raise InadmissibleParameterError(
                "local natural parameter outside Theta during sweep",
                site=(int(rows[bad]), int(cols[bad])),
            )
        atom_idx, values = family.sample_grid(theta_sel, rng)
        field.atom_idx[mask] = atom_idx
        field.values[mask] = values
        B[mask] = family.suff_stat_grid(atom_idx, values)


def _checkerboard_masks(lattice):
    if lattice.boundary == "toroidal" and (lattice.rows % 2 or lattice.cols % 2):
        raise ParameterError("checkerboard scan on a torus needs even side lengths")
    parity = (np.add.outer(np.arange(lattice.rows), np.arange(lattice.cols)) % 2).astype(bool)
    return [~parity, parity]


def gibbs_sweep(model, field: Field, rng: np.random.Generator, scan: str = "raster") -> Field:
    """One in-place sweep; every site is re-drawn exactly once."""
    if scan == "raster":
        _sweep_sitewise(model, field, rng, _raster_order(model.lattice))
    elif scan == "random":
        order = _raster_order(model.lattice)
        perm = rng.permutation(len(order))
        _sweep_sitewise(model, field, rng, [order[k] for k in perm])
    elif scan == "checkerboard":
        if not isinstance(model, AutoModel):
            raise ParameterError("the checkerboard scan is implemented for translation-invariant models")
        _sweep_checkerboard(model, field, rng, _checkerboard_masks(model.lattice))
    else:
        raise ParameterError(f"unknown scan {scan!r}")
    return field


def simulate(model, config: GibbsConfig) -> SimulationResult:
    """Run the chain, recording the energy after every sweep (burn-in included)
    and returning the final field."""
    rng = np.random.default_rng(config.seed)
    field = initial_field(model, config.init)
    trace = np.empty(config.sweeps)
    if config.scan == "checkerboard" and isinstance(model, AutoModel):
        masks = _checkerboard_masks(model.lattice)
        for k in range(config.sweeps):
            _sweep_checkerboard(model, field, rng, masks)
            trace[k] = model.energy(field)
    else:
        for k in range(config.sweeps):
            gibbs_sweep(model, field, rng, config.scan)
            trace[k] = model.energy(field)
    return SimulationResult(field=field, energy_trace=trace, config=config)
