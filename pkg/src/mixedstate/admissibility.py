"""Admissibility and spatial-behaviour checks for mixed-state auto-models.

Each checker decides whether a parameter set yields an integrable joint
(sufficient conditions only; a negative verdict does not prove
non-integrability, hence the ``sufficient_only`` marker) and classifies the
local interaction as cooperative, competitive, or undetermined. Cooperation
and competition refer to the monotonicity of R(x_di) = E[X_i 1_G(X_i) | x_di]
in each neighbour's continuous value.

Naming of the interaction entries follows the 2x2 matrix ((c, d), (f, e)) for
the two-dimensional families and the symmetric 3x3 matrix
((s, u, t), (u, c, d), (t, d, e)) for the censored one. All inequalities are
evaluated exactly on the supplied decimals; the conditions constrain
user-given parameters, not computed quantities, so no epsilon is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .automodel import AutoModel, GeneralAutoModel
from .errors import ParameterError

__all__ = [
    "ConditionViolation",
    "AdmissibilityVerdict",
    "check_mixed_exponential",
    "check_truncated",
    "check_censored",
    "check_positive_gaussian",
    "check_model",
    "worst_case_interaction_sum",
]

COOPERATIVE = "cooperative"
COMPETITIVE = "competitive"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class ConditionViolation:
    condition: str
    detail: str
    where: Optional[tuple] = None

    def __str__(self) -> str:
        loc = f" at {self.where}" if self.where is not None else ""
        return f"{self.condition}{loc}: {self.detail}"


@dataclass
class AdmissibilityVerdict:
    well_defined: bool
    behaviour: str
    violated: List[ConditionViolation] = field(default_factory=list)
    sufficient_only: bool = True
    notes: List[str] = field(default_factory=list)
    # raw truth of the behaviour conditions (both can hold degenerately)
    cooperative_conditions: Optional[bool] = None
    competitive_conditions: Optional[bool] = None

    def __post_init__(self):
        if not self.well_defined and not self.violated:
            raise ParameterError("a negative verdict must list at least one violation")

    def __str__(self) -> str:
        head = "well-defined" if self.well_defined else "NOT well-defined"
        lines = [f"{head}, behaviour: {self.behaviour}"]
        lines += [f"  violated {v}" for v in self.violated]
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


def worst_case_interaction_sum(b: float, f_entries) -> float:
    """min over subsets A of the neighbourhood of b + sum_{j in A} f_j.

    The minimizing subset keeps exactly the strictly negative entries, so the
    reduction is b + sum(min(0, f_j)); equivalence with exhaustive subset
    enumeration is brute-force tested.
    """
    return float(b) + float(sum(min(0.0, float(f)) for f in f_entries))


def _directional_entries(model):
    """[(label, beta, multiplicity)] of oriented interaction matrices.

    For the translation-invariant scheme the worst-case site has the maximal
    neighbour count per direction; for the general scheme each stored edge
    yields both orientations (beta and its transpose).
    """
    if isinstance(model, AutoModel):
        n_h, n_v = model.lattice.max_neighbor_counts()
        return [("horizontal", model.beta_h, n_h), ("vertical", model.beta_v, n_v)]
    entries = []
    for (a, b), m in model.stored_edges():
        entries.append((f"{a}->{b}", m, 1))
        entries.append((f"{b}->{a}", m.T, 1))
    return entries


def _per_site_interactions(model):
    """{site: [(neighbour, beta oriented site->neighbour)]}."""
    out = {}
    for site in model.lattice.sites():
        out[site] = [(nb, model.edge_beta(site, nb)) for nb, _ in model.lattice.neighbors(*site)]
    return out


def _require_kind(model, kind: str):
    if model.family.kind != kind:
        raise ParameterError(f"this check applies to {kind} models, got {model.family.kind}")


def check_mixed_exponential(model) -> AdmissibilityVerdict:
    """Conditions (A): every pair coefficient e <= 0, and for every site and
    every subset A of its neighbourhood, b + sum_{j in A} f_j > 0 (worst-case
    subset reduction). The model is never spatially cooperative; it is
    competitive when every d entry is >= 0."""
    _require_kind(model, "mixed_exponential")
    violations = []
    notes = []

    for label, beta, _ in _directional_entries(model):
        if beta[1, 1] > 0.0:
            violations.append(ConditionViolation("(A)(i)", f"e={beta[1, 1]} > 0", (label,)))

    if isinstance(model, AutoModel):
        n_h, n_v = model.lattice.max_neighbor_counts()
        worst = worst_case_interaction_sum(
            model.alpha[1], [model.beta_h[1, 0]] * n_h + [model.beta_v[1, 0]] * n_v
        )
        if not worst > 0.0:
            violations.append(
                ConditionViolation("(A)(ii)", f"b + sum of negative f entries = {worst} <= 0")
            )
    else:
        per_site = _per_site_interactions(model)
        for site, nbs in per_site.items():
            worst = worst_case_interaction_sum(
                model.site_alpha(site)[1], [beta[1, 0] for _, beta in nbs]
            )
            if not worst > 0.0:
                violations.append(
                    ConditionViolation("(A)(ii)", f"b + sum of negative f entries = {worst} <= 0", site)
                )

    well = not violations
    d_entries = [beta[0, 1] for _, beta, _ in _directional_entries(model)]
    e_entries = [beta[1, 1] for _, beta, _ in _directional_entries(model)]
    comp = all(d >= 0.0 for d in d_entries)
    if not well:
        behaviour = UNDETERMINED
    elif all(d == 0.0 for d in d_entries) and all(e == 0.0 for e in e_entries):
        behaviour = UNDETERMINED
        notes.append("degenerate: R does not depend on the neighbours' continuous values")
    elif comp:
        behaviour = COMPETITIVE
    else:
        behaviour = UNDETERMINED
    return AdmissibilityVerdict(
        well, behaviour, violations, notes=notes,
        cooperative_conditions=False, competitive_conditions=comp,
    )


def check_truncated(model) -> AdmissibilityVerdict:
    """Truncated-exponential conditionals on {0} union (0, K].

    Well-defined when at every site b + sum_j min(0, f_j, f_j - e_j K) > 0;
    cooperative when additionally every d <= 0 and e >= 0, competitive when
    every d >= 0 and e <= 0."""
    _require_kind(model, "truncated_exponential")
    K = model.family.K
    violations = []
    notes = []

    def contribution(beta):
        return min(0.0, beta[1, 0], beta[1, 0] - beta[1, 1] * K)

    if isinstance(model, AutoModel):
        n_h, n_v = model.lattice.max_neighbor_counts()
        worst = model.alpha[1] + n_h * contribution(model.beta_h) + n_v * contribution(model.beta_v)
        if not worst > 0.0:
            violations.append(
                ConditionViolation("assumption-4", f"b + sum min(0, f, f - eK) = {worst} <= 0")
            )
    else:
        for site, nbs in _per_site_interactions(model).items():
            worst = model.site_alpha(site)[1] + sum(contribution(beta) for _, beta in nbs)
            if not worst > 0.0:
                violations.append(
                    ConditionViolation("assumption-4", f"b + sum min(0, f, f - eK) = {worst} <= 0", site)
                )

    well = not violations
    entries = _directional_entries(model)
    coop = all(beta[0, 1] <= 0.0 and beta[1, 1] >= 0.0 for _, beta, _ in entries)
    comp = all(beta[0, 1] >= 0.0 and beta[1, 1] <= 0.0 for _, beta, _ in entries)
    behaviour = _classify(well, coop, comp, notes)
    return AdmissibilityVerdict(
        well, behaviour, violations, notes=notes,
        cooperative_conditions=coop, competitive_conditions=comp,
    )


def check_censored(model) -> AdmissibilityVerdict:
    """Censored-exponential conditionals on {0, K} union (0, K).

    Well-defined when at every site b + sum_j min(0, t_j, d_j, d_j - e_j K) > 0
    (the 0 term covers neighbours at the censoring atom, whose sufficient
    statistic vanishes); cooperative when every e >= 0 and t - eK >= 0,
    competitive when every e <= 0 and t - eK <= 0."""
    _require_kind(model, "censored_exponential")
    K = model.family.K
    violations = []
    notes = []

    for label, beta, _ in _directional_entries(model):
        if not np.array_equal(beta, beta.T):
            raise ParameterError(
                f"censored-model conditions assume symmetric interaction matrices; {label} is not"
            )

    def contribution(beta):
        t, d, e = beta[2, 0], beta[2, 1], beta[2, 2]
        return min(0.0, t, d, d - e * K)

    if isinstance(model, AutoModel):
        n_h, n_v = model.lattice.max_neighbor_counts()
        worst = model.alpha[2] + n_h * contribution(model.beta_h) + n_v * contribution(model.beta_v)
        if not worst > 0.0:
            violations.append(
                ConditionViolation("assumption-7", f"b + sum min(0, t, d, d - eK) = {worst} <= 0")
            )
    else:
        for site, nbs in _per_site_interactions(model).items():
            worst = model.site_alpha(site)[2] + sum(contribution(beta) for _, beta in nbs)
            if not worst > 0.0:
                violations.append(
                    ConditionViolation(
                        "assumption-7", f"b + sum min(0, t, d, d - eK) = {worst} <= 0", site
                    )
                )

    well = not violations
    entries = _directional_entries(model)
    coop = all(beta[2, 2] >= 0.0 and beta[0, 2] - beta[2, 2] * K >= 0.0 for _, beta, _ in entries)
    comp = all(beta[2, 2] <= 0.0 and beta[0, 2] - beta[2, 2] * K <= 0.0 for _, beta, _ in entries)
    behaviour = _classify(well, coop, comp, notes)
    return AdmissibilityVerdict(
        well, behaviour, violations, notes=notes,
        cooperative_conditions=coop, competitive_conditions=comp,
    )


def check_positive_gaussian(model) -> AdmissibilityVerdict:
    """Positive-Gaussian conditionals with interactions through the presence
    indicator only (d = e = 0 enforced): well-defined iff b > 0, cooperative
    by construction. Configurations with nonzero d or e are refused: no
    admissibility analysis covers them."""
    _require_kind(model, "positive_gaussian")
    for label, beta, _ in _directional_entries(model):
        if beta[0, 1] != 0.0 or beta[1, 0] != 0.0 or beta[1, 1] != 0.0:
            raise ParameterError(
                "positive-Gaussian auto-models are only supported with d = e = 0 "
                f"(interaction through presence indicators); {label} has {beta.tolist()}"
            )
    violations = []
    b_values = (
        [("", model.alpha[1])]
        if isinstance(model, AutoModel)
        else [(s, model.site_alpha(s)[1]) for s in model.lattice.sites()]
    )
    for where, b in b_values:
        if not b > 0.0:
            violations.append(ConditionViolation("b-positive", f"b = {b} <= 0", where or None))
    well = not violations
    return AdmissibilityVerdict(
        well, COOPERATIVE if well else UNDETERMINED, violations,
        cooperative_conditions=True, competitive_conditions=False,
    )


def _classify(well: bool, coop: bool, comp: bool, notes: List[str]) -> str:
    if not well:
        return UNDETERMINED
    if coop and comp:
        notes.append("degenerate: cooperative and competitive conditions both hold (zero couplings)")
        return UNDETERMINED
    if coop:
        return COOPERATIVE
    if comp:
        return COMPETITIVE
    return UNDETERMINED


_CHECKERS = {
    "mixed_exponential": check_mixed_exponential,
    "truncated_exponential": check_truncated,
    "censored_exponential": check_censored,
    "positive_gaussian": check_positive_gaussian,
}


def check_model(model) -> AdmissibilityVerdict:
    """Dispatch to the family-specific checker."""
    kind = model.family.kind
    if kind not in _CHECKERS:
        raise ParameterError(f"no admissibility conditions available for {kind} auto-models")
    return _CHECKERS[kind](model)
