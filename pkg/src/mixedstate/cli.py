"""Command-line interface.

Subcommands: check (admissibility verdict for a model config), simulate
(Gibbs sampling to an MSF1 field file), fit (pseudo-likelihood estimation
from a field file), oracle (brute-force cross-checks on a tiny lattice),
motion-report (isotropy analysis of a motion map), histogram (mixed-state
histogram of a motion map).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import motion
from .admissibility import check_model
from .automodel import Lattice
from .errors import MixedStateError
from .estimation import FitOptions, fit
from .families import family_from_kind
from .modelio import parse_model_config, write_report
from .oracle import (
    Discretization,
    MAX_ENTRIES,
    MAX_GRID,
    conditional_from_joint,
    family_distribution_on_grid,
    joint_table,
)
from .sampler import AllContinuous, AllReference, GibbsConfig, simulate
from .state_space import parse_field, write_field

_CONDITIONS = {
    "mixed_exponential": ("(A)(i)", "(A)(ii)"),
    "truncated_exponential": ("assumption-4",),
    "censored_exponential": ("assumption-7",),
    "positive_gaussian": ("b-positive",),
}


def _load_model(path: str):
    return parse_model_config(Path(path).read_text())


def _cmd_check(args) -> int:
    model = _load_model(args.model)
    verdict = check_model(model)
    print(f"model: {model.family.kind} on {model.lattice.rows}x{model.lattice.cols} ({model.lattice.boundary})")
    failed = {v.condition for v in verdict.violated}
    for name in _CONDITIONS[model.family.kind]:
        print(f"condition {name}: {'FAIL' if name in failed else 'pass'}")
    for v in verdict.violated:
        print(f"  {v}")
    print(f"well-defined: {'yes' if verdict.well_defined else 'no'} (sufficient conditions only)")
    print(f"behaviour: {verdict.behaviour}")
    for note in verdict.notes:
        print(f"note: {note}")
    return 0 if verdict.well_defined else 1


def _parse_init(text: str):
    if text == "reference":
        return AllReference()
    if text.startswith("continuous:"):
        return AllContinuous(float(text.split(":", 1)[1]))
    return parse_field(Path(text).read_text())


def _cmd_simulate(args) -> int:
    model = _load_model(args.model)
    cfg = GibbsConfig(
        sweeps=args.sweeps,
        burn_in=args.burn_in,
        scan=args.scan,
        seed=args.seed,
        init=_parse_init(args.init),
    )
    result = simulate(model, cfg)
    Path(args.out).write_text(write_field(result.field))
    print(f"wrote {args.out}: atom fraction {result.field.atom_fraction():.4f}, "
          f"final energy {result.energy_trace[-1]:.6g}")
    if args.trace:
        lines = ["sweep,energy"] + [f"{k},{float(e)!r}" for k, e in enumerate(result.energy_trace)]
        Path(args.trace).write_text("\n".join(lines) + "\n")
    if args.pgm:
        motion.render_field_pgm(args.pgm, result.field)
    return 0


def _cmd_fit(args) -> int:
    family = family_from_kind(args.family, args.k)
    field = parse_field(Path(args.field).read_text(), family.space)
    options = FitOptions(
        isotropic=args.isotropic,
        boundary=args.boundary,
        interior_only=args.interior_only,
        bootstrap_reps=args.bootstrap,
        bootstrap_seed=args.seed,
    )
    report = fit(family, field, options)
    print(report)
    entries = {
        "family": report.family_kind,
        "rows": field.rows,
        "cols": field.cols,
        "boundary": args.boundary,
        "n_sites": report.n_sites,
        "names": " ".join(report.names),
        "phi": report.phi,
        "log_pl": report.log_pl,
        "grad_norm": report.grad_norm,
        "iterations": report.iterations,
        "converged": report.converged,
        "well_defined": report.admissible.well_defined,
        "behaviour": report.admissible.behaviour,
    }
    for name, value in report.phi_dict().items():
        entries[f"phi_{name}"] = value
    if report.se is not None and report.se.size:
        entries["se"] = report.se
        for name, value in zip(report.names, report.se):
            entries[f"se_{name}"] = float(value)
    write_report(entries, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_oracle(args) -> int:
    model = _load_model(args.model)
    if args.lattice:
        rows, cols = (int(tok) for tok in args.lattice.lower().split("x"))
        model = type(model)(model.family, Lattice(rows, cols, model.lattice.boundary),
                            model.alpha, model.beta_h, model.beta_v)
    lattice = model.lattice
    family = model.family
    space = family.space
    hi = space.domain.hi
    if np.isinf(hi):
        radius = args.radius if args.radius else 40.0 / float(model.alpha[-1])
        extent = radius
    else:
        radius = args.radius
        extent = hi
    if args.h:
        h = args.h
    else:
        per_site = min(MAX_GRID, int(MAX_ENTRIES ** (1.0 / lattice.n_sites)))
        h = extent / max(per_site - space.M - 1, 8)
    disc = Discretization(step=h, radius=radius)
    table = joint_table(model, disc)

    site = next(lattice.sites())
    reference = space.reference()
    given_ref = {s: reference for s in table.sites if s != site}
    cond_ref = conditional_from_joint(table, site, given_ref)
    # at an all-reference neighbourhood the analytic conditional sits at theta = alpha
    analytic_ref = family_distribution_on_grid(family, model.alpha, table.grid)
    tv_ref = cond_ref.tv(analytic_ref)
    entries = {
        "family": family.kind,
        "rows": lattice.rows,
        "cols": lattice.cols,
        "h": disc.step,
        "radius": float(radius) if radius else 0.0,
        "grid_size": table.grid.size,
        "z": table.z,
        "log_z": table.log_z,
        "reference_probability": float(table.probs[(0,) * lattice.n_sites]),
        "tv_reference_conditional": tv_ref,
        "restricted_mean_oracle": cond_ref.restricted_mean(),
        "restricted_mean_analytic": family.continuous_restricted_mean(model.alpha),
    }
    write_report(entries, args.report)
    print(f"Z = {table.z:.8g}; TV(analytic, table conditional) = {tv_ref:.3g}")
    print(f"wrote {args.report}")
    return 0


def _cmd_motion_report(args) -> int:
    field = motion.ingest(args.infile, eps=args.eps)
    options = motion.AnalyzeOptions(
        eps=args.eps,
        bootstrap_reps=args.bootstrap,
        level=args.level,
        seed=args.seed,
    )
    report = motion.analyze(field, options)
    print(report)
    entries = {
        "source": str(args.infile),
        "rows": field.rows,
        "cols": field.cols,
        "eps": args.eps,
        "atom_fraction": report.atom_fraction,
        "phi": report.fit.phi,
        "c_diff": report.c_diff,
        "se_c_diff": report.se_c_diff,
        "ci_low": report.ci[0],
        "ci_high": report.ci[1],
        "level": report.level,
        "verdict": report.verdict,
        "bootstrap_reps": report.bootstrap_reps,
        "bootstrap_failed": report.bootstrap_failed,
    }
    for name, value in report.fit.phi_dict().items():
        entries[f"phi_{name}"] = value
    entries.update(report.quantiles)
    write_report(entries, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_histogram(args) -> int:
    field = motion.ingest(args.infile, eps=args.eps)
    hist = motion.mixed_histogram(field, args.bins)
    lines = [f"# atom_mass = {float(hist.atom_mass)!r}", "lo,hi,mass,density"]
    densities = hist.densities
    for k in range(hist.masses.size):
        lines.append(
            f"{float(hist.edges[k])!r},{float(hist.edges[k + 1])!r},"
            f"{float(hist.masses[k])!r},{float(densities[k])!r}"
        )
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"atom mass {hist.atom_mass:.4f}, {hist.masses.size} bins; wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixedstate", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="admissibility verdict for a model config")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("simulate", help="Gibbs-sample a field from a model config")
    p.add_argument("--model", required=True)
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=0, dest="burn_in")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scan", choices=("raster", "random", "checkerboard"), default="raster")
    p.add_argument("--init", default="reference",
                   help="reference | continuous:VALUE | path to an MSF1 field")
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None, help="CSV energy trace")
    p.add_argument("--pgm", default=None, help="grayscale rendering for inspection")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="pseudo-likelihood fit from an MSF1 field")
    p.add_argument("--family", required=True,
                   help="positive-gaussian | mixed-exponential | truncated-exponential | censored-exponential")
    p.add_argument("--k", type=float, default=None, help="level K for truncated/censored")
    p.add_argument("--field", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--boundary", choices=("free", "toroidal"), default="free")
    p.add_argument("--isotropic", action="store_true")
    p.add_argument("--interior-only", action="store_true", dest="interior_only")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("oracle", help="brute-force checks on a tiny lattice")
    p.add_argument("--model", required=True)
    p.add_argument("--lattice", default=None, help="override, e.g. 2x2")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("motion-report", help="isotropy analysis of a motion map")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--bootstrap", type=int, default=50)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_motion_report)

    p = sub.add_parser("histogram", help="mixed-state histogram of a motion map")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_histogram)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MixedStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
