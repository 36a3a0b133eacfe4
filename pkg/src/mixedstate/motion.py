"""Motion-magnitude maps: ingestion, mixed histograms, isotropy analysis.

A motion map is a grid of nonnegative magnitudes with an atom at zero where
nothing moves. Maps are thresholded into mixed-state fields (value <= eps
becomes the zero atom), summarized by a histogram with an explicit atom mass,
and fitted with the four-parameter positive-Gaussian auto-model
phi = (a, b, c1, c2). Spatial isotropy holds exactly when c1 = c2, so the
verdict compares a parametric-bootstrap confidence interval for c1 - c2
against zero.

Computing motion fields from video is out of scope; maps are ingested from
PGM/CSV. ``frame_difference_magnitude`` is a naive |I(t+1) - I(t)| stand-in
so the pipeline can run on a raw image pair; it is not an optical-flow
estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import ndtri

from .automodel import Lattice
from .errors import DomainError, FormatError, NonIdentifiableError, ParameterError
from .estimation import FitOptions, FitReport, Parameterization, bootstrap_se, fit
from .families import PositiveMixedGaussian
from .state_space import Field, Interval, StateSpace

__all__ = [
    "MotionMap",
    "read_pgm",
    "write_pgm",
    "render_field_pgm",
    "motion_map_from_csv",
    "frame_difference_magnitude",
    "ingest",
    "MixedHistogram",
    "mixed_histogram",
    "AnalyzeOptions",
    "IsotropyReport",
    "analyze",
]

ZERO_ATOM_SPACE = StateSpace(atoms=(0.0,), domain=Interval())


@dataclass(frozen=True)
class MotionMap:
    """Nonnegative per-pixel motion magnitudes."""

    grid: np.ndarray
    source: str = ""

    def __post_init__(self):
        grid = np.ascontiguousarray(self.grid, dtype=np.float64)
        if grid.ndim != 2:
            raise DomainError("a motion map is a 2-D grid")
        if np.any(grid < 0.0) or not np.all(np.isfinite(grid)):
            raise DomainError("motion magnitudes must be finite and nonnegative")
        object.__setattr__(self, "grid", grid)


# -- PGM ----------------------------------------------------------------------


def read_pgm(path) -> np.ndarray:
    """P2/P5 grayscale, 8- or 16-bit; gray levels returned as floats."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(data):
            raise FormatError("truncated PGM header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            pos += 1
            continue
        if data[pos : pos + 1].isspace():
            pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic = tokens[0].decode("ascii", "replace")
    if magic not in ("P2", "P5"):
        raise FormatError(f"not a PGM file (magic {magic!r})")
    try:
        cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError("malformed PGM header") from exc
    if not (0 < maxval < 65536):
        raise FormatError(f"bad maxval {maxval}")
    if magic == "P2":
        body = data[pos:].split()
        if len(body) != rows * cols:
            raise FormatError(f"expected {rows * cols} pixels, found {len(body)}")
        arr = np.array([int(tok) for tok in body], dtype=np.float64)
    else:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        need = rows * cols * dtype.itemsize
        raw = data[pos : pos + need]
        if len(raw) != need:
            raise FormatError("truncated PGM pixel data")
        arr = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    if arr.max(initial=0) > maxval:
        raise FormatError("pixel value exceeds maxval")
    return arr.reshape(rows, cols)


def write_pgm(path, grid, maxval: Optional[int] = None, binary: bool = True) -> None:
    """Quantize nonnegative values to gray levels (round to nearest, so the
    round-trip error is at most half a gray level)."""
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(grid < 0.0):
        raise DomainError("PGM export needs nonnegative values")
    if maxval is None:
        top = float(grid.max(initial=0.0))
        maxval = 255 if top <= 255 else 65535
    gray = np.clip(np.rint(grid), 0, maxval).astype(np.uint32)
    header = f"P5 {grid.shape[1]} {grid.shape[0]} {maxval}\n".encode("ascii")
    if not binary:
        body = "\n".join(" ".join(str(v) for v in row) for row in gray) + "\n"
        Path(path).write_bytes(f"P2 {grid.shape[1]} {grid.shape[0]} {maxval}\n".encode("ascii") + body.encode("ascii"))
        return
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    Path(path).write_bytes(header + gray.astype(dtype).tobytes())


def render_field_pgm(path, field: Field, maxval: int = 255) -> None:
    """Visual check only: atoms render white, continuous values scale to gray."""
    vals = field.continuous_values()
    top = float(vals.max()) if vals.size else 1.0
    gray = np.rint((maxval - 1) * (1.0 - field.values / max(top, 1e-12))).clip(0, maxval - 1)
    gray[field.atom_idx > 0] = maxval
    header = f"P5 {field.cols} {field.rows} {maxval}\n".encode("ascii")
    Path(path).write_bytes(header + gray.astype(np.uint8).tobytes())


def motion_map_from_csv(text_or_path) -> MotionMap:
    text = text_or_path
    source = ""
    if isinstance(text_or_path, (str, Path)) and "\n" not in str(text_or_path) and Path(text_or_path).exists():
        text = Path(text_or_path).read_text()
        source = str(text_or_path)
    rows = []
    for line in str(text).strip().splitlines():
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.replace(",", " ").split()])
        except ValueError as exc:
            raise FormatError(f"bad CSV row {line!r}") from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise FormatError("empty or ragged CSV")
    grid = np.array(rows)
    if np.any(grid < 0.0):
        raise FormatError("negative magnitudes in CSV")
    return MotionMap(grid=grid, source=source)


def frame_difference_magnitude(frame_prev, frame_next) -> MotionMap:
    """|I(t+1) - I(t)| per pixel. A crude activity measure so the pipeline can
    run on raw image pairs; this is not a motion-field estimate."""
    a = np.asarray(frame_prev, dtype=np.float64)
    b = np.asarray(frame_next, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DomainError("frames must be two equal-shape 2-D grids")
    return MotionMap(grid=np.abs(b - a), source="frame-difference")


def ingest(source: Union[str, Path, np.ndarray, MotionMap], eps: float = 0.0) -> Field:
    """Threshold a motion map into a mixed-state field over {0} union (0, inf):
    values <= eps become the zero atom. Larger eps never lowers the atom count."""
    if eps < 0.0:
        raise ParameterError("eps must be nonnegative")
    if isinstance(source, MotionMap):
        grid = source.grid
    elif isinstance(source, np.ndarray):
        grid = MotionMap(grid=source).grid
    else:
        path = Path(source)
        if path.suffix.lower() == ".pgm":
            grid = read_pgm(path)
        elif path.suffix.lower() == ".csv":
            grid = motion_map_from_csv(path).grid
        else:
            raise FormatError(f"unsupported motion-map format {path.suffix!r}")
    atom = grid <= eps
    idx = atom.astype(np.int8)
    values = np.where(atom, 0.0, grid)
    return Field(ZERO_ATOM_SPACE, idx, values)


# -- histogram ------------------------------------------------------------------


@dataclass
class MixedHistogram:
    atom_mass: float
    edges: np.ndarray  # (bins + 1,)
    masses: np.ndarray  # (bins,)

    @property
    def densities(self) -> np.ndarray:
        return self.masses / np.diff(self.edges)

    def total_mass(self) -> float:
        return self.atom_mass + float(self.masses.sum())


def mixed_histogram(field: Field, bins: int) -> MixedHistogram:
    """Atom mass plus a binned continuous part; masses sum to 1 exactly."""
    if bins < 1:
        raise ParameterError("need at least one bin")
    n = field.n_sites
    cont = field.continuous_values()
    n_atom = n - cont.size
    top = float(cont.max()) if cont.size else 1.0
    edges = np.linspace(0.0, top, bins + 1)
    if cont.size:
        counts, edges = np.histogram(cont, bins=edges)
    else:
        counts = np.zeros(bins, dtype=int)
    return MixedHistogram(atom_mass=n_atom / n, edges=edges, masses=counts / n)


# -- isotropy analysis -----------------------------------------------------------


@dataclass(frozen=True)
class AnalyzeOptions:
    eps: float = 0.0
    bootstrap_reps: int = 50
    level: float = 0.95
    seed: int = 0
    boundary: str = "free"
    sweeps: int = 520
    burn_in: int = 500
    bootstrap_init: Optional[Callable] = None  # (model, rng) -> Field; default: half-atom iid mix
    fit_options: Optional[FitOptions] = None


@dataclass
class IsotropyReport:
    fit: FitReport
    c_diff: float
    se_c_diff: float
    ci: tuple
    level: float
    verdict: str  # "isotropic" | "anisotropic"
    bootstrap_reps: int
    bootstrap_failed: int
    atom_fraction: float
    quantiles: dict

    def __str__(self) -> str:
        a, b, c1, c2 = self.fit.phi
        lo, hi = self.ci
        return (
            f"phi=(a={a:.4g}, b={b:.4g}, c1={c1:.4g}, c2={c2:.4g}); "
            f"c1-c2={self.c_diff:.4g}, {100 * self.level:.0f}% CI [{lo:.4g}, {hi:.4g}] -> {self.verdict}"
        )


def analyze(field: Field, options: Optional[AnalyzeOptions] = None) -> IsotropyReport:
    """Fit the 4-parameter positive-Gaussian auto-model and decide isotropy.

    Anisotropic exactly when the bootstrap confidence interval for c1 - c2
    (normal approximation, estimate +/- z * SE over parametric-bootstrap
    refits) excludes 0.
    """
    options = options or AnalyzeOptions()
    if field.n_sites == 0:
        raise DomainError("empty field")
    if options.bootstrap_reps < 2:
        raise ParameterError("the isotropy decision needs at least 2 bootstrap replicates")
    family = PositiveMixedGaussian()
    if field.space != family.space:
        raise DomainError("analysis expects a field over {0} union (0, inf)")
    base_fit = options.fit_options or FitOptions(boundary=options.boundary)
    report = fit(family, field, base_fit)
    boot_fit = replace(base_fit, init_phi=report.phi, bootstrap_reps=0)
    param = Parameterization(family)
    lattice = Lattice(field.rows, field.cols, options.boundary)
    boot = bootstrap_se(
        family,
        report.phi,
        lattice,
        options.bootstrap_reps,
        seed=options.seed,
        sweeps=options.sweeps,
        burn_in=options.burn_in,
        init_factory=options.bootstrap_init,
        fit_options=boot_fit,
    )
    report.se = boot.se
    c1_idx, c2_idx = param.names.index("c1"), param.names.index("c2")
    diffs = boot.estimates[:, c1_idx] - boot.estimates[:, c2_idx]
    se_diff = float(diffs.std(ddof=1))
    d_hat = float(report.phi[c1_idx] - report.phi[c2_idx])
    z = float(ndtri(0.5 + options.level / 2.0))
    ci = (d_hat - z * se_diff, d_hat + z * se_diff)
    verdict = "anisotropic" if (ci[0] > 0.0 or ci[1] < 0.0) else "isotropic"
    cont = field.continuous_values()
    qs = (0.25, 0.5, 0.75, 0.9)
    quantiles = {f"q{int(100 * q)}": (float(np.quantile(cont, q)) if cont.size else math.nan) for q in qs}
    return IsotropyReport(
        fit=report,
        c_diff=d_hat,
        se_c_diff=se_diff,
        ci=ci,
        level=options.level,
        verdict=verdict,
        bootstrap_reps=options.bootstrap_reps,
        bootstrap_failed=boot.n_failed,
        atom_fraction=field.atom_fraction(),
        quantiles=quantiles,
    )
