"""Grid data model and half-plane index machinery.

Lattice positions are 1-based pairs ``(t1, t2)``: ``t1`` indexes rows and
``t2`` columns.  Values are stored flat in row-major order so that
``(t1, t2)`` lives at ``(t1 - 1) * n2 + (t2 - 1)``.

Two total orders split the plane into a "past" and a "future":

* ``ROW`` -- ``j < k`` iff ``j1 < k1``, or ``j1 == k1`` and ``j2 < k2``;
* ``COL`` -- the same with the roles of the two coordinates swapped.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "GridDims",
    "Lattice2D",
    "HalfPlaneOrder",
    "HalfPlaneWindow",
    "lex_compare",
    "half_plane_indices",
    "read_lattice_csv",
    "write_lattice_csv",
]


class HalfPlaneOrder(enum.Enum):
    ROW = "row"
    COL = "col"

    @classmethod
    def parse(cls, text: "str | HalfPlaneOrder") -> "HalfPlaneOrder":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        aliases = {"row": cls.ROW, "rowlex": cls.ROW, "col": cls.COL, "collex": cls.COL}
        try:
            return aliases[key]
        except KeyError:
            raise ValidationError(f"unknown half-plane order {text!r}") from None


@dataclass(frozen=True)
class GridDims:
    n1: int
    n2: int

    def __post_init__(self):
        if int(self.n1) != self.n1 or int(self.n2) != self.n2:
            raise ValidationError("grid dimensions must be integers")
        if self.n1 < 1 or self.n2 < 1:
            raise ValidationError(f"grid dimensions must be positive, got {self.n1}x{self.n2}")
        object.__setattr__(self, "n1", int(self.n1))
        object.__setattr__(self, "n2", int(self.n2))

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def transpose(self) -> "GridDims":
        return GridDims(self.n2, self.n1)

    def contains(self, t: Sequence[int]) -> bool:
        return 1 <= t[0] <= self.n1 and 1 <= t[1] <= self.n2

    def flat_index(self, t: Sequence[int]) -> int:
        if not self.contains(t):
            raise ValidationError(f"index {tuple(t)} outside {self.n1}x{self.n2} lattice")
        return (t[0] - 1) * self.n2 + (t[1] - 1)


@dataclass(frozen=True, eq=False)
class Lattice2D:
    """Rectangular field of real observations with an observation mask.

    ``mask`` is ``True`` where the cell is observed.  Values stored at
    unobserved cells are never read by any estimator.
    """

    dims: GridDims
    values: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size != self.dims.size:
            raise ValidationError(
                f"expected {self.dims.size} values for {self.dims.n1}x{self.dims.n2}, got {values.size}"
            )
        if self.mask is None:
            mask = ~np.isnan(values)
        else:
            mask = np.array(self.mask, dtype=bool).ravel()
            if mask.size != values.size:
                raise ValidationError("mask and values differ in length")
        if not np.all(np.isfinite(values[mask])):
            raise ValidationError("observed cells must hold finite values")
        # unobserved cells are normalised to 0 so nothing downstream can leak them
        values = np.where(mask, values, 0.0)
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_array(cls, arr, mask=None) -> "Lattice2D":
        """Build from a 2-D array; NaN entries are unobserved unless ``mask`` is given."""
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2:
            raise ValidationError("expected a 2-D array")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != arr.shape:
                raise ValidationError("mask shape differs from array shape")
        return cls(GridDims(*arr.shape), arr.ravel(), None if mask is None else mask.ravel())

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(self.dims.shape)

    @property
    def mask_grid(self) -> np.ndarray:
        return self.mask.reshape(self.dims.shape)

    @property
    def fully_observed(self) -> bool:
        return bool(self.mask.all())

    @property
    def n_missing(self) -> int:
        return int((~self.mask).sum())

    def value(self, t1: int, t2: int) -> float:
        return float(self.values[self.dims.flat_index((t1, t2))])

    def is_observed(self, t1: int, t2: int) -> bool:
        return self.dims.contains((t1, t2)) and bool(self.mask[self.dims.flat_index((t1, t2))])

    def transpose(self) -> "Lattice2D":
        return Lattice2D.from_array(self.grid.T, self.mask_grid.T)

    def subgrid(self, rows: tuple[int, int], cols: tuple[int, int]) -> "Lattice2D":
        """Inclusive 1-based row/column ranges."""
        r0, r1 = rows
        c0, c1 = cols
        if not (1 <= r0 <= r1 <= self.dims.n1 and 1 <= c0 <= c1 <= self.dims.n2):
            raise ValidationError(f"sublattice rows {rows} cols {cols} outside lattice")
        sl = (slice(r0 - 1, r1), slice(c0 - 1, c1))
        return Lattice2D.from_array(self.grid[sl], self.mask_grid[sl])

    def with_value(self, t: Sequence[int], value: float) -> "Lattice2D":
        """Copy with cell ``t`` set to ``value`` and marked observed."""
        vals = self.grid.copy()
        mask = self.mask_grid.copy()
        vals[t[0] - 1, t[1] - 1] = value
        mask[t[0] - 1, t[1] - 1] = True
        return Lattice2D.from_array(vals, mask)

    def __repr__(self):
        return f"Lattice2D({self.dims.n1}x{self.dims.n2}, missing={self.n_missing})"


def lex_compare(j: Sequence[int], k: Sequence[int], order=HalfPlaneOrder.ROW) -> int:
    """Compare two lattice indices under a half-plane order.

    Returns -1 when ``j`` precedes ``k``, 0 when equal and 1 when it follows.
    """
    order = HalfPlaneOrder.parse(order)
    a = (j[0], j[1]) if order is HalfPlaneOrder.ROW else (j[1], j[0])
    b = (k[0], k[1]) if order is HalfPlaneOrder.ROW else (k[1], k[0])
    return (a > b) - (a < b)


@dataclass(frozen=True)
class HalfPlaneWindow:
    """Truncated half-plane index set.

    ``M1`` and ``M2`` always bound coordinates 1 and 2 respectively,
    whichever order is active.  Under ``ROW`` the set is::

        {(0, k2): 1 <= k2 <= M2} u {(k1, k2): 1 <= k1 <= M1, 1 - M2 <= k2 <= M2}

    and under ``COL`` the coordinate roles are exchanged.
    """

    M1: int
    M2: int
    order: HalfPlaneOrder = HalfPlaneOrder.ROW

    def __post_init__(self):
        if int(self.M1) != self.M1 or int(self.M2) != self.M2 or self.M1 < 1 or self.M2 < 1:
            raise ValidationError(f"window lags must be positive integers, got ({self.M1}, {self.M2})")
        object.__setattr__(self, "M1", int(self.M1))
        object.__setattr__(self, "M2", int(self.M2))
        object.__setattr__(self, "order", HalfPlaneOrder.parse(self.order))

    @property
    def size(self) -> int:
        if self.order is HalfPlaneOrder.ROW:
            return self.M2 * (1 + 2 * self.M1)
        return self.M1 * (1 + 2 * self.M2)

    def indices(self) -> np.ndarray:
        """``(size, 2)`` integer array in canonical enumeration order."""
        return _indices_cached(self.M1, self.M2, self.order)

    def transpose(self) -> "HalfPlaneWindow":
        other = HalfPlaneOrder.COL if self.order is HalfPlaneOrder.ROW else HalfPlaneOrder.ROW
        return HalfPlaneWindow(self.M2, self.M1, other)


_INDEX_CACHE: dict = {}


def _row_indices(L1: int, L2: int) -> np.ndarray:
    out = [(0, k2) for k2 in range(1, L2 + 1)]
    out += [(k1, k2) for k1 in range(1, L1 + 1) for k2 in range(1 - L2, L2 + 1)]
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def _indices_cached(M1: int, M2: int, order: HalfPlaneOrder) -> np.ndarray:
    key = (M1, M2, order)
    idx = _INDEX_CACHE.get(key)
    if idx is None:
        if order is HalfPlaneOrder.ROW:
            idx = _row_indices(M1, M2)
        else:
            idx = _row_indices(M2, M1)[:, ::-1].copy()
        idx.flags.writeable = False
        _INDEX_CACHE[key] = idx
    return idx


def half_plane_indices(window: HalfPlaneWindow) -> list[tuple[int, int]]:
    """Enumerate the truncated half-plane: the ``(0, .)`` block first, then
    leading-coordinate blocks in ascending order."""
    return [(int(a), int(b)) for a, b in window.indices()]


# --------------------------------------------------------------------------
# CSV format: "rows,cols" then one line per row; NA marks an unobserved cell.
# Lines starting with '#' are comments.


def _data_lines(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def parse_lattice_csv(text: str) -> Lattice2D:
    lines = _data_lines(text)
    if not lines:
        raise ValidationError("empty lattice file")
    try:
        rows, cols = (int(v) for v in lines[0].split(","))
    except ValueError:
        raise ValidationError(f"bad lattice header {lines[0]!r}, expected 'rows,cols'") from None
    body = lines[1:]
    if len(body) != rows:
        raise ValidationError(f"lattice header says {rows} rows, found {len(body)}")
    vals = np.zeros((rows, cols))
    mask = np.ones((rows, cols), dtype=bool)
    for i, ln in enumerate(body):
        tokens = [tok.strip() for tok in ln.split(",")]
        if len(tokens) != cols:
            raise ValidationError(f"row {i + 1}: expected {cols} values, got {len(tokens)}")
        for j, tok in enumerate(tokens):
            if tok.upper() in ("NA", ""):
                mask[i, j] = False
            else:
                try:
                    vals[i, j] = float(tok)
                except ValueError:
                    raise ValidationError(f"row {i + 1}, col {j + 1}: bad value {tok!r}") from None
    return Lattice2D.from_array(vals, mask)


def read_lattice_csv(path) -> Lattice2D:
    return parse_lattice_csv(Path(path).read_text())


def format_lattice_csv(x: Lattice2D, comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(f"{x.dims.n1},{x.dims.n2}\n")
    g, m = x.grid, x.mask_grid
    for i in range(x.dims.n1):
        buf.write(",".join(repr(float(g[i, j])) if m[i, j] else "NA" for j in range(x.dims.n2)))
        buf.write("\n")
    return buf.getvalue()


def write_lattice_csv(x: Lattice2D, path, comments: Iterable[str] = ()) -> None:
    Path(path).write_text(format_lattice_csv(x, comments))
