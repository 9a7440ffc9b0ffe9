"""Cellwise-constant functions on a uniform lattice.

Every function is constant on the cells of a box split into ``N_1 x ... x N_n``
cells of side ``h``.  Integrals are exact finite sums, so inequalities between
averages can be checked without quadrature error.

Values are float64 with ``np.inf`` standing for +infinity.  The extended-real
conventions used throughout the package are ``1/0 = inf``, ``1/inf = 0``,
``log 0 = -inf`` and ``exp(-inf) = 0``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GridFormatError",
    "Domain",
    "GridFunction",
    "CellSet",
    "as_gridfunction",
    "reciprocal",
    "integral",
    "average",
    "load_grid",
    "save_grid",
    "format_grid",
    "format_float",
]


class GridFormatError(ValueError):
    """Raised for malformed GRIDFN/CSV files."""


def format_float(x: float) -> str:
    """17 significant digits; round-trips every float64."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Domain:
    """A box of ``prod(shape)`` cells with side ``h``, anchored at ``origin``."""

    shape: tuple[int, ...]
    h: float = 1.0
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if not 1 <= len(shape) <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(shape)}")
        for n in shape:
            if not _is_pow2(n):
                raise ValueError(f"axis length {n} is not a power of two")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"spacing must be positive and finite, got {self.h}")
        origin = (0.0,) * len(shape) if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != len(shape):
            raise ValueError("origin length does not match dimension")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def cell_measure(self) -> float:
        return self.h ** self.dim

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(n.bit_length() - 1 for n in self.shape)

    def cell_centers(self) -> list[np.ndarray]:
        """Per-axis coordinates of the cell centers."""
        return [o + (np.arange(n) + 0.5) * self.h for o, n in zip(self.origin, self.shape)]

    def contains_index(self, x) -> bool:
        x = tuple(x)
        return len(x) == self.dim and all(0 <= i < n for i, n in zip(x, self.shape))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nonnegative extended-real values, one per cell, stored with the domain's shape."""

    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.size != self.domain.size:
            raise ValueError(f"expected {self.domain.size} values, got {v.size}")
        v = v.reshape(self.domain.shape)
        if np.isnan(v).any():
            raise ValueError("NaN values are not allowed")
        if (v < 0).any():
            raise ValueError("values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_array(cls, values, h: float = 1.0, origin=None) -> GridFunction:
        values = np.asarray(values, dtype=np.float64)
        return cls(Domain(values.shape, h, origin), values)

    @property
    def flat(self) -> np.ndarray:
        """Row-major view, last axis fastest."""
        return self.values.reshape(-1)

    @property
    def is_weight(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def check_weight(self, name: str = "weight") -> GridFunction:
        if not self.is_weight:
            raise ValueError(f"{name} must be finite everywhere")
        return self

    def map(self, func) -> GridFunction:
        return GridFunction(self.domain, func(self.values))

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CellSet:
    """An arbitrary set of cells given by a boolean mask."""

    domain: Domain
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.size != self.domain.size:
            raise ValueError(f"mask has {m.size} cells, domain has {self.domain.size}")
        m = m.reshape(self.domain.shape).copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.count * self.domain.cell_measure

    def indices(self) -> list[int]:
        return np.flatnonzero(self.mask).tolist()

    def to_json(self):
        return {"cells": self.indices()}


def as_gridfunction(f, domain: Domain | None = None) -> GridFunction:
    """Coerce arrays to a GridFunction; GridFunctions pass through."""
    if isinstance(f, GridFunction):
        if domain is not None and f.domain != domain:
            raise ValueError("domain mismatch")
        return f
    if domain is None:
        return GridFunction.from_array(f)
    return GridFunction(domain, f)


def reciprocal(x):
    """Elementwise 1/x with 1/0 = inf and 1/inf = 0."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(x == 0, np.inf, 1.0 / np.where(x == 0, 1.0, x))


def _mask_of(S, domain: Domain) -> np.ndarray:
    if isinstance(S, CellSet):
        if S.domain != domain:
            raise ValueError("domain mismatch between function and set")
        return S.mask
    # BasisSet / SetUnion duck-typing
    if hasattr(S, "cellset"):
        return _mask_of(S.cellset(domain), domain)
    raise TypeError(f"cannot use {type(S).__name__} as a set")


def integral(f, S) -> float:
    """Sum of ``f * h^n`` over the cells of ``S``; any infinite summand gives inf."""
    f = as_gridfunction(f)
    mask = _mask_of(S, f.domain)
    vals = f.values[mask]
    if vals.size == 0:
        return 0.0
    return float(np.sum(vals)) * f.domain.cell_measure


def average(f, S) -> float:
    f = as_gridfunction(f)
    mask = _mask_of(S, f.domain)
    n = int(mask.sum())
    if n == 0:
        raise ValueError("average over an empty set")
    return integral(f, S) / (n * f.domain.cell_measure)


def save_grid(f: GridFunction, path) -> None:
    """Write ``f`` in GRIDFN v1 text format."""
    Path(path).write_text(format_grid(f))


def format_grid(f: GridFunction) -> str:
    """GRIDFN v1 text for ``f``: header lines, then one value per line in
    row-major order, 17 significant digits."""
    f = as_gridfunction(f)
    if not f.is_weight:
        raise GridFormatError("GRIDFN files cannot hold infinite values")
    d = f.domain
    lines = [
        "gridfn 1",
        f"dim {d.dim}",
        "shape " + " ".join(str(n) for n in d.shape),
        "h " + format_float(d.h),
        "origin " + " ".join(format_float(o) for o in d.origin),
    ]
    lines.extend(format_float(v) for v in f.flat)
    return "\n".join(lines) + "\n"


def _parse_value(tok: str, lineno: int) -> float:
    if tok.strip().lower() in {"inf", "+inf", "infinity", "nan"}:
        raise GridFormatError(f"line {lineno}: non-finite value {tok!r}")
    try:
        v = float(tok)
    except ValueError:
        raise GridFormatError(f"line {lineno}: not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise GridFormatError(f"line {lineno}: non-finite value {tok!r}")
    if v < 0:
        raise GridFormatError(f"line {lineno}: negative value {v}")
    return v


def _header(lines, i, key):
    if i >= len(lines):
        raise GridFormatError(f"missing header line {key!r}")
    parts = lines[i].split()
    if not parts or parts[0] != key:
        raise GridFormatError(f"line {i + 1}: expected {key!r}, got {lines[i]!r}")
    return parts[1:]


def _load_csv(text: str) -> GridFunction:
    rows = list(csv.reader(text.splitlines()))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["value"]:
        raise GridFormatError("CSV grid must have a single 'value' column header")
    vals = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 1:
            raise GridFormatError(f"line {lineno}: expected one column")
        vals.append(_parse_value(row[0], lineno))
    if not _is_pow2(len(vals)):
        raise GridFormatError(f"value count {len(vals)} is not a power of two")
    return GridFunction(Domain((len(vals),)), vals)


def load_grid(path) -> GridFunction:
    """Read a GRIDFN v1 file (or a one-column CSV for 1-D data)."""
    text = Path(path).read_text()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GridFormatError("empty file")
    if lines[0].split()[:1] != ["gridfn"]:
        return _load_csv(text)
    if lines[0].split() != ["gridfn", "1"]:
        raise GridFormatError(f"unsupported header {lines[0]!r}")
    try:
        (dim,) = (int(t) for t in _header(lines, 1, "dim"))
        shape = tuple(int(t) for t in _header(lines, 2, "shape"))
        (h,) = (float(t) for t in _header(lines, 3, "h"))
        origin = tuple(float(t) for t in _header(lines, 4, "origin"))
    except ValueError as exc:
        if isinstance(exc, GridFormatError):
            raise
        raise GridFormatError(f"malformed header: {exc}") from None
    if len(shape) != dim or len(origin) != dim:
        raise GridFormatError("shape/origin arity does not match dim")
    try:
        domain = Domain(shape, h, origin)
    except ValueError as exc:
        raise GridFormatError(str(exc)) from None
    body = lines[5:]
    if len(body) != domain.size:
        raise GridFormatError(f"expected {domain.size} values, found {len(body)}")
    vals = [_parse_value(tok, i + 6) for i, tok in enumerate(body)]
    return GridFunction(domain, vals)
