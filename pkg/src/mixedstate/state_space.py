"""Mixed state spaces and tagged values.

A mixed state space is a finite set of atoms {e_1, ..., e_M} plus a continuous
interval G. Values are kept as an explicit tagged union: an atom carries a
point mass under the reference measure, so identifying Atom(1) at coordinate 0
with the continuous value 0.0 would corrupt both density evaluation and
sufficient statistics. Everything here is immutable after construction and
safe to share across threads; fields carry their data in numpy arrays and are
mutated only by an owner (typically the Gibbs sampler).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, FormatError

__all__ = [
    "Interval",
    "MixedValue",
    "Atom",
    "Continuous",
    "StateSpace",
    "Field",
    "parse_field",
    "write_field",
    "field_from_csv",
    "field_to_csv",
]


@dataclass(frozen=True)
class Interval:
    """The continuous component G: an interval with open lower endpoint 0.

    Supported forms are (0, inf), (0, hi] and (0, hi).
    """

    hi: float = math.inf
    closed_hi: bool = False

    def __post_init__(self):
        if not self.hi > 0.0:
            raise DomainError(f"continuous domain must have positive length, got hi={self.hi}")
        if math.isinf(self.hi) and self.closed_hi:
            raise DomainError("an unbounded interval cannot be closed at the top")

    def contains(self, r: float) -> bool:
        if not (r > 0.0):
            return False
        if r < self.hi:
            return True
        return self.closed_hi and r == self.hi

    def __str__(self) -> str:
        if math.isinf(self.hi):
            return "(0, inf)"
        return f"(0, {self.hi}{']' if self.closed_hi else ')'}"


@dataclass(frozen=True)
class MixedValue:
    """A point of E: either Atom(k) with 1-based index k, or Continuous(r), r in G.

    Equality is tag-aware: an atom at coordinate 0 and a continuous value
    approaching 0 are distinct values.
    """

    atom_index: Optional[int] = None
    value: Optional[float] = None

    def __post_init__(self):
        if (self.atom_index is None) == (self.value is None):
            raise DomainError("a MixedValue is exactly one of Atom(k) or Continuous(r)")
        if self.atom_index is not None and self.atom_index < 1:
            raise DomainError(f"atom indices are 1-based, got {self.atom_index}")

    @property
    def is_atom(self) -> bool:
        return self.atom_index is not None

    @property
    def is_continuous(self) -> bool:
        return self.atom_index is None

    def __repr__(self) -> str:
        if self.is_atom:
            return f"Atom({self.atom_index})"
        return f"Continuous({self.value!r})"


def Atom(k: int) -> MixedValue:
    """The k-th atom (1-based)."""
    return MixedValue(atom_index=int(k))


def Continuous(r: float) -> MixedValue:
    """A continuous point r in G."""
    return MixedValue(value=float(r))


@dataclass(frozen=True)
class StateSpace:
    """E = {e_1, ..., e_M} union G with the mixture reference measure.

    Atoms are scalar coordinates (the ambient dimension is 1 here), pairwise
    distinct, and none may lie inside G. For M >= 2 the last atom e_M is the
    reference state; for M = 1 the single atom is.
    """

    atoms: tuple
    domain: Interval
    atom_labels: Optional[tuple] = None

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if len(atoms) < 1:
            raise DomainError("need at least one atom")
        if len(set(atoms)) != len(atoms):
            raise DomainError(f"atoms must be pairwise distinct: {atoms}")
        for a in atoms:
            if self.domain.contains(a):
                raise DomainError(f"atom {a} lies inside the continuous domain {self.domain}")
        if self.atom_labels is not None and len(self.atom_labels) != len(atoms):
            raise DomainError("atom_labels must match the number of atoms")

    @property
    def M(self) -> int:
        return len(self.atoms)

    @property
    def reference_index(self) -> int:
        """Index of the reference atom e_M."""
        return self.M

    def reference(self) -> MixedValue:
        return Atom(self.M)

    def validate(self, v: MixedValue) -> None:
        if v.is_atom:
            if v.atom_index > self.M:
                raise DomainError(f"atom index {v.atom_index} > M={self.M}")
        elif not self.domain.contains(v.value):
            raise DomainError(f"{v.value} is not in the continuous domain {self.domain}")

    def contains(self, v: MixedValue) -> bool:
        try:
            self.validate(v)
        except DomainError:
            return False
        return True

    def coordinate(self, v: MixedValue) -> float:
        """The point of R the value sits at (atom coordinate or continuous value)."""
        self.validate(v)
        if v.is_atom:
            return self.atoms[v.atom_index - 1]
        return v.value

    def indicator_vector(self, v: MixedValue) -> np.ndarray:
        """(1_{e_1}(x), ..., 1_{e_{M-1}}(x), 1_G(x)) of length M.

        All-zeros exactly when v is the reference atom e_M; injective on the
        atoms plus any single continuous point.
        """
        self.validate(v)
        out = np.zeros(self.M)
        if v.is_continuous:
            out[self.M - 1] = 1.0
        elif v.atom_index < self.M:
            out[v.atom_index - 1] = 1.0
        return out

    def value_from_float(self, x: float) -> MixedValue:
        """Exact-match rule used by CSV import: x maps to Atom(k) iff x == e_k
        bit-exactly, otherwise to Continuous(x) (which must lie in G)."""
        for k, a in enumerate(self.atoms, start=1):
            if x == a:
                return Atom(k)
        v = Continuous(x)
        self.validate(v)
        return v


def indicator_vector(v: MixedValue, space: StateSpace) -> np.ndarray:
    """Functional form of :meth:`StateSpace.indicator_vector`."""
    return space.indicator_vector(v)


class Field:
    """A rows x cols grid of mixed values over a common state space.

    Internally two aligned arrays: ``atom_idx`` (int8; 0 = continuous,
    k >= 1 = Atom(k)) and ``values`` (float64; always the coordinate of the
    cell, i.e. the atom coordinate at atom cells). Equality is bit-exact on
    both arrays.
    """

    __slots__ = ("space", "atom_idx", "values")

    def __init__(self, space: StateSpace, atom_idx: np.ndarray, values: np.ndarray):
        atom_idx = np.ascontiguousarray(atom_idx, dtype=np.int8)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if atom_idx.ndim != 2 or atom_idx.shape != values.shape:
            raise DomainError("atom_idx and values must be 2-D arrays of equal shape")
        if atom_idx.min(initial=0) < 0 or atom_idx.max(initial=0) > space.M:
            raise DomainError("atom indices must lie in 0..M")
        self.space = space
        self.atom_idx = atom_idx
        self.values = values

    # -- construction -----------------------------------------------------

    @classmethod
    def full_reference(cls, space: StateSpace, rows: int, cols: int) -> "Field":
        """The reference configuration tau = (e_M, ..., e_M)."""
        idx = np.full((rows, cols), space.M, dtype=np.int8)
        vals = np.full((rows, cols), space.atoms[space.M - 1])
        return cls(space, idx, vals)

    @classmethod
    def full_continuous(cls, space: StateSpace, rows: int, cols: int, value: float) -> "Field":
        if not space.domain.contains(value):
            raise DomainError(f"{value} is not in {space.domain}")
        idx = np.zeros((rows, cols), dtype=np.int8)
        vals = np.full((rows, cols), float(value))
        return cls(space, idx, vals)

    @classmethod
    def from_values(cls, space: StateSpace, grid) -> "Field":
        """Build from a float grid using the exact-match atom rule."""
        grid = np.asarray(grid, dtype=np.float64)
        idx = np.zeros(grid.shape, dtype=np.int8)
        for k, a in enumerate(space.atoms, start=1):
            idx[grid == a] = k
        cont = idx == 0
        bad = cont & ~_domain_mask(space.domain, grid)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DomainError(f"value {grid[i, j]} at ({i}, {j}) is not in {space.domain}")
        return cls(space, idx, grid)

    # -- basics ------------------------------------------------------------

    @property
    def rows(self) -> int:
        return self.atom_idx.shape[0]

    @property
    def cols(self) -> int:
        return self.atom_idx.shape[1]

    @property
    def shape(self):
        return self.atom_idx.shape

    @property
    def n_sites(self) -> int:
        return self.atom_idx.size

    def get(self, i: int, j: int) -> MixedValue:
        k = int(self.atom_idx[i, j])
        if k > 0:
            return Atom(k)
        return Continuous(float(self.values[i, j]))

    def set(self, i: int, j: int, v: MixedValue) -> None:
        self.space.validate(v)
        if v.is_atom:
            self.atom_idx[i, j] = v.atom_index
            self.values[i, j] = self.space.atoms[v.atom_index - 1]
        else:
            self.atom_idx[i, j] = 0
            self.values[i, j] = v.value

    def copy(self) -> "Field":
        return Field(self.space, self.atom_idx.copy(), self.values.copy())

    def transpose(self) -> "Field":
        return Field(self.space, self.atom_idx.T, self.values.T)

    def atom_fraction(self) -> float:
        return float(np.mean(self.atom_idx > 0))

    def continuous_values(self) -> np.ndarray:
        return self.values[self.atom_idx == 0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Field):
            return NotImplemented
        return (
            self.space == other.space
            and self.shape == other.shape
            and bool(np.all(self.atom_idx == other.atom_idx))
            and bool(np.all(self.values == other.values))
        )

    def __repr__(self) -> str:
        return f"Field({self.rows}x{self.cols}, atoms={self.space.atoms}, atom_fraction={self.atom_fraction():.3f})"


def _domain_mask(domain: Interval, grid: np.ndarray) -> np.ndarray:
    ok = grid > 0.0
    if math.isinf(domain.hi):
        return ok
    if domain.closed_hi:
        return ok & (grid <= domain.hi)
    return ok & (grid < domain.hi)


# -- MSF1 text format -------------------------------------------------------
#
# Line 1:  MSF1 <rows> <cols> atoms=<e_1,...,e_M>
# Then rows*cols whitespace-separated cells in row-major order, each either
# A<k> (atom k) or a decimal literal (continuous). repr() round-trips float64
# bit-exactly, so parse(write(f)) == f.


def write_field(field: Field) -> str:
    atoms = ",".join(repr(a) for a in field.space.atoms)
    lines = [f"MSF1 {field.rows} {field.cols} atoms={atoms}"]
    for i in range(field.rows):
        cells = []
        for j in range(field.cols):
            k = int(field.atom_idx[i, j])
            cells.append(f"A{k}" if k > 0 else repr(float(field.values[i, j])))
        lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"


def parse_field(text: str, space: Optional[StateSpace] = None) -> Field:
    """Parse the MSF1 format.

    If no state space is supplied, the atoms come from the header and G is
    inferred: (0, inf) for a single atom, (0, max(atoms)) when a second atom
    marks a censoring point. Pass the space explicitly for (0, K] domains.
    """
    lines = text.strip().splitlines()
    if not lines:
        raise FormatError("empty field text")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "MSF1" or not header[3].startswith("atoms="):
        raise FormatError(f"malformed MSF1 header: {lines[0]!r}")
    try:
        rows, cols = int(header[1]), int(header[2])
        atoms = tuple(float(tok) for tok in header[3][len("atoms="):].split(","))
    except ValueError as exc:
        raise FormatError(f"malformed MSF1 header: {lines[0]!r}") from exc
    if rows < 1 or cols < 1:
        raise FormatError("field dimensions must be positive")

    if space is None:
        hi = math.inf if len(atoms) == 1 else max(atoms)
        space = StateSpace(atoms=atoms, domain=Interval(hi=hi))
    elif tuple(space.atoms) != atoms:
        raise FormatError(f"header atoms {atoms} disagree with the supplied space {space.atoms}")

    tokens = " ".join(lines[1:]).split()
    if len(tokens) != rows * cols:
        raise FormatError(f"expected {rows * cols} cells, found {len(tokens)}")

    idx = np.zeros((rows, cols), dtype=np.int8)
    vals = np.zeros((rows, cols))
    for pos, tok in enumerate(tokens):
        i, j = divmod(pos, cols)
        if tok.startswith("A"):
            try:
                k = int(tok[1:])
            except ValueError as exc:
                raise FormatError(f"bad atom cell {tok!r}") from exc
            if not 1 <= k <= space.M:
                raise FormatError(f"atom index {k} > M={space.M} at cell {pos}")
            idx[i, j] = k
            vals[i, j] = space.atoms[k - 1]
        else:
            try:
                x = float(tok)
            except ValueError as exc:
                raise FormatError(f"bad cell {tok!r}") from exc
            if not space.domain.contains(x):
                raise FormatError(f"value {x} at cell {pos} is outside {space.domain}")
            vals[i, j] = x
    return Field(space, idx, vals)


def field_to_csv(field: Field) -> str:
    """CSV export: every cell as its coordinate, repr-exact."""
    lines = []
    for i in range(field.rows):
        lines.append(",".join(repr(float(field.values[i, j])) for j in range(field.cols)))
    return "\n".join(lines) + "\n"


def field_from_csv(text: str, space: StateSpace) -> Field:
    """CSV import with the exact-match atom rule (cell == e_k bit-exactly)."""
    rows = []
    for line in text.strip().splitlines():
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"bad CSV row {line!r}") from exc
    if not rows:
        raise FormatError("empty CSV")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError("ragged CSV rows")
    try:
        return Field.from_values(space, np.array(rows))
    except DomainError as exc:
        raise FormatError(str(exc)) from exc
