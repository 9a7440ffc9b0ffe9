"""Bases of lattice-aligned boxes: dyadic cubes, cubes, rectangles.

Only boxes lying entirely inside the domain belong to a basis; nothing is
clipped at the boundary.  The dyadic basis is the single grid anchored at the
domain origin, from single cells up to the largest cubes that tile the box.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._tables import CUBES, DYADIC, KINDS, RECTS, get_table
from .grid import CellSet, Domain

__all__ = ["DYADIC", "CUBES", "RECTS", "KINDS", "BasisSet", "Basis", "SetUnion", "as_rng"]

_ALIASES = {
    "dyadic": DYADIC, "d": DYADIC,
    "cubes": CUBES, "cube": CUBES, "q": CUBES,
    "rects": RECTS, "rectangles": RECTS, "rect": RECTS, "r": RECTS,
}


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, order=True)
class BasisSet:
    """A box ``[lower, lower + size)`` in cell-index coordinates."""

    lower: tuple[int, ...]
    size: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(int(v) for v in self.lower))
        object.__setattr__(self, "size", tuple(int(v) for v in self.size))
        if len(self.lower) != len(self.size):
            raise ValueError("lower and size have different lengths")
        if any(s < 1 for s in self.size):
            raise ValueError("basis sets must be nonempty")
        if any(v < 0 for v in self.lower):
            raise ValueError("lower corner must be nonnegative")

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, a + s) for a, s in zip(self.lower, self.size))

    @property
    def count(self) -> int:
        return int(np.prod(self.size))

    def measure(self, domain: Domain) -> float:
        return self.count * domain.cell_measure

    def contains(self, x) -> bool:
        return all(a <= i < a + s for i, a, s in zip(x, self.lower, self.size))

    def inside(self, domain: Domain) -> bool:
        return len(self.lower) == domain.dim and all(
            a + s <= n for a, s, n in zip(self.lower, self.size, domain.shape)
        )

    def is_subset(self, other: BasisSet) -> bool:
        return all(b <= a and a + s <= b + t for a, s, b, t in
                   zip(self.lower, self.size, other.lower, other.size))

    def intersects(self, other: BasisSet) -> bool:
        return all(a < b + t and b < a + s for a, s, b, t in
                   zip(self.lower, self.size, other.lower, other.size))

    def cellset(self, domain: Domain) -> CellSet:
        if not self.inside(domain):
            raise ValueError(f"{self} is not contained in the domain")
        mask = np.zeros(domain.shape, dtype=bool)
        mask[self.slices] = True
        return CellSet(domain, mask)

    def to_json(self) -> dict:
        return {"lower": list(self.lower), "size": list(self.size)}

    @classmethod
    def from_json(cls, obj) -> BasisSet:
        return cls(tuple(obj["lower"]), tuple(obj["size"]))


class Basis:
    """A basis kind on a domain; enumeration follows the internal set table order."""

    def __init__(self, kind: str, domain: Domain):
        try:
            self.kind = _ALIASES[str(kind).lower()]
        except KeyError:
            raise ValueError(f"unknown basis kind {kind!r}; expected one of {KINDS}") from None
        self.domain = domain
        self.table = get_table(self.kind, domain.shape)

    def __repr__(self):
        return f"Basis({self.kind!r}, shape={self.domain.shape})"

    def __eq__(self, other):
        return isinstance(other, Basis) and (self.kind, self.domain) == (other.kind, other.domain)

    def __hash__(self):
        return hash((self.kind, self.domain))

    def __len__(self):
        return len(self.table)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower corners and extents of every set, shape ``(K, dim)`` each."""
        return self.table.lower_size()

    def enumerate_all(self) -> Iterator[BasisSet]:
        lower, size = self.arrays()
        for lo, sz in zip(lower.tolist(), size.tolist()):
            yield BasisSet(tuple(lo), tuple(sz))

    def containing_mask(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if not self.domain.contains_index(x.tolist()):
            raise IndexError(f"cell {tuple(x.tolist())} is outside the domain")
        lower, size = self.arrays()
        return np.all((lower <= x) & (x < lower + size), axis=1)

    def sets_containing(self, x) -> Iterator[BasisSet]:
        lower, size = self.arrays()
        for k in np.flatnonzero(self.containing_mask(x)):
            yield BasisSet(tuple(lower[k].tolist()), tuple(size[k].tolist()))

    def set_at(self, k: int) -> BasisSet:
        lower, size = self.arrays()
        return BasisSet(tuple(lower[k].tolist()), tuple(size[k].tolist()))

    def random_union(self, k: int, rng=None) -> SetUnion:
        """``k`` sets drawn uniformly with replacement, duplicates removed."""
        if k < 1:
            raise ValueError("k must be at least 1")
        rng = as_rng(rng)
        picks = rng.integers(0, len(self), size=k)
        seen = []
        for i in picks.tolist():
            if i not in seen:
                seen.append(i)
        return SetUnion(self.domain, tuple(self.set_at(i) for i in seen))


@dataclass(frozen=True, eq=True)
class SetUnion:
    """A finite union of basis sets."""

    domain: Domain
    members: tuple[BasisSet, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("a SetUnion needs at least one member")
        for b in self.members:
            if not b.inside(self.domain):
                raise ValueError(f"{b} is not contained in the domain")

    def cellset(self, domain: Domain | None = None) -> CellSet:
        if domain is not None and domain != self.domain:
            raise ValueError("domain mismatch")
        mask = np.zeros(self.domain.shape, dtype=bool)
        for b in self.members:
            mask[b.slices] = True
        return CellSet(self.domain, mask)

    @property
    def cells(self) -> CellSet:
        return self.cellset()

    @property
    def measure(self) -> float:
        return self.cells.measure

    def to_json(self) -> list:
        return [b.to_json() for b in self.members]

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, domain: Domain, obj) -> SetUnion:
        return cls(domain, tuple(BasisSet.from_json(o) for o in obj))
