"""Vectorised per-set sums and pointwise suprema for the three box bases.

A table stores one value per basis set in a basis-specific *layout* (a list of
arrays).  ``sums`` fills a layout with box sums of a cell array, ``spread_max``
turns a layout of per-set values into the field ``x -> max{value(B): x in B}``.

Sums are built by repeated addition only (tree sums, sliding windows, anchored
cumulative sums); no prefix-sum differences, so a set's sum never suffers
cancellation against the mass of other sets.
"""
from __future__ import annotations

import math
from functools import cached_property, lru_cache

import numpy as np
from scipy.ndimage import maximum_filter1d

DYADIC = "dyadic"
CUBES = "cubes"
RECTS = "rects"
KINDS = (DYADIC, CUBES, RECTS)

# dense rectangle tables hold prod(N_i^2) entries
RECT_DENSE_LIMIT = 1 << 24


def lmap(func, *layouts):
    return [func(*parts) for parts in zip(*layouts)]


class SetTable:
    def __init__(self, kind: str, shape: tuple[int, ...]):
        if kind not in KINDS:
            raise ValueError(f"unknown basis kind {kind!r}")
        self.kind = kind
        self.shape = tuple(int(n) for n in shape)
        self.dim = len(self.shape)
        if kind == DYADIC:
            for n in self.shape:
                if n & (n - 1):
                    raise ValueError("dyadic tables need power-of-two axes")
            self.top = min(n.bit_length() - 1 for n in self.shape)
        elif kind == CUBES:
            self.smax = min(self.shape)
        else:
            dense = math.prod(n * n for n in self.shape)
            if dense > RECT_DENSE_LIMIT:
                raise ValueError(
                    f"rectangle basis on shape {self.shape} needs {dense} table entries "
                    f"(limit {RECT_DENSE_LIMIT})"
                )
        self._lower_size = None

    # ------------------------------------------------------------------ sums
    def sums(self, x: np.ndarray) -> list[np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.shape:
            raise ValueError(f"array shape {x.shape} does not match table {self.shape}")
        if self.kind == DYADIC:
            return self._dyadic_sums(x)
        if self.kind == CUBES:
            return self._cube_sums(x)
        return [self._rect_sums(x)]

    def _dyadic_sums(self, x):
        levels = [x]
        for _ in range(self.top):
            cur = levels[-1]
            split = []
            for n in cur.shape:
                split += [n // 2, 2]
            levels.append(cur.reshape(split).sum(axis=tuple(range(1, 2 * self.dim, 2))))
        return levels

    def _cube_sums(self, x):
        out = []
        first = x
        for s in range(1, self.smax + 1):
            if s > 1:
                # window of length s along axis 0, extended from length s-1
                first = first[:-1] + x[s - 1:]
            acc = first
            for ax in range(1, self.dim):
                n_out = acc.shape[ax] - s + 1
                win = None
                for k in range(s):
                    part = np.take(acc, np.arange(k, k + n_out), axis=ax)
                    win = part if win is None else win + part
                acc = win
            out.append(np.ascontiguousarray(acc))
        return out

    def _rect_sums(self, x):
        acc = x
        for i in range(self.dim):
            p = 2 * i
            moved = np.moveaxis(acc, p, 0)
            n = moved.shape[0]
            dense = np.zeros((n, n) + moved.shape[1:])
            for a in range(n):
                dense[a, a:] = np.cumsum(moved[a:], axis=0)
            acc = np.moveaxis(dense, (0, 1), (p, p + 1))
        return np.ascontiguousarray(acc)

    # ------------------------------------------------------- set descriptors
    @cached_property
    def counts(self) -> list[np.ndarray]:
        """Number of cells in each set, as a float layout."""
        if self.kind == DYADIC:
            return [np.full(tuple(n >> l for n in self.shape), float(2 ** (l * self.dim)))
                    for l in range(self.top + 1)]
        if self.kind == CUBES:
            return [np.full(tuple(n - s + 1 for n in self.shape), float(s ** self.dim))
                    for s in range(1, self.smax + 1)]
        return [self._rect_counts()]

    def _rect_counts(self):
        c = np.ones(())
        for n in self.shape:
            a = np.arange(n)
            length = (a[None, :] - a[:, None] + 1).clip(min=0).astype(float)
            c = np.multiply.outer(c, length)
        return c

    @cached_property
    def valid(self) -> list[np.ndarray] | None:
        if self.kind != RECTS:
            return None
        return [self._rect_counts() > 0]

    def empty_layout(self, fill=0.0) -> list[np.ndarray]:
        return [np.full(c.shape, fill) for c in self.counts]

    # ---------------------------------------------------------------- spread
    def spread_max(self, layout: list[np.ndarray]) -> np.ndarray:
        """Pointwise max over containing sets; -inf entries are ignored."""
        if self.kind == DYADIC:
            pm = layout[self.top]
            for l in range(self.top - 1, -1, -1):
                up = pm
                for ax in range(self.dim):
                    up = up.repeat(2, axis=ax)
                pm = np.maximum(layout[l], up)
            return pm
        if self.kind == CUBES:
            field = np.full(self.shape, -np.inf)
            for s, vals in enumerate(layout, start=1):
                padded = np.full(self.shape, -np.inf)
                padded[tuple(slice(0, v) for v in vals.shape)] = vals
                for ax in range(self.dim):
                    if s > 1:
                        padded = maximum_filter1d(padded, s, axis=ax, mode="constant",
                                                  cval=-np.inf, origin=(s - 1) // 2)
                np.maximum(field, padded, out=field)
            return field
        v = np.where(self.valid[0], layout[0], -np.inf)
        for i in range(self.dim):
            # axes i, i+1 hold (start, end) for axis i once earlier pairs collapsed
            t = np.flip(np.maximum.accumulate(np.flip(v, i + 1), axis=i + 1), i + 1)
            c = np.maximum.accumulate(t, axis=i)
            v = np.moveaxis(np.diagonal(c, axis1=i, axis2=i + 1), -1, i)
        return np.ascontiguousarray(v)

    def spread_min(self, layout):
        return -self.spread_max([-v for v in layout])

    # ------------------------------------------------------------- flat view
    def flatten(self, layout) -> np.ndarray:
        """Per-set values in enumeration order."""
        if self.kind == DYADIC:
            return np.concatenate([layout[l].reshape(-1) for l in range(self.top, -1, -1)])
        if self.kind == CUBES:
            return np.concatenate([v.reshape(-1) for v in layout])
        return layout[0][self.valid[0]]

    def unflatten(self, flat) -> list[np.ndarray]:
        flat = np.asarray(flat)
        if self.kind == RECTS:
            dense = np.full(self.valid[0].shape, -np.inf)
            dense[self.valid[0]] = flat
            return [dense]
        shapes = [c.shape for c in self.counts]
        order = range(self.top, -1, -1) if self.kind == DYADIC else range(len(shapes))
        out = [None] * len(shapes)
        pos = 0
        for j in order:
            k = math.prod(shapes[j])
            out[j] = flat[pos:pos + k].reshape(shapes[j])
            pos += k
        return out

    def lower_size(self) -> tuple[np.ndarray, np.ndarray]:
        """(K, n) integer arrays of lower corners and extents in enumeration order."""
        if self._lower_size is None:
            lows, sizes = [], []
            if self.kind == DYADIC:
                for l in range(self.top, -1, -1):
                    idx = np.indices(tuple(n >> l for n in self.shape)).reshape(self.dim, -1).T
                    lows.append(idx << l)
                    sizes.append(np.full_like(idx, 1 << l))
            elif self.kind == CUBES:
                for s in range(1, self.smax + 1):
                    idx = np.indices(tuple(n - s + 1 for n in self.shape)).reshape(self.dim, -1).T
                    lows.append(idx)
                    sizes.append(np.full_like(idx, s))
            else:
                nz = np.nonzero(self.valid[0])
                a = np.stack(nz[0::2], axis=1)
                b = np.stack(nz[1::2], axis=1)
                lows.append(a)
                sizes.append(b - a + 1)
            self._lower_size = (np.concatenate(lows).astype(np.int64),
                                np.concatenate(sizes).astype(np.int64))
        return self._lower_size

    def __len__(self):
        return int(sum(c.size for c in self.counts)) if self.kind != RECTS else int(self.valid[0].sum())


@lru_cache(maxsize=512)
def get_table(kind: str, shape: tuple[int, ...]) -> SetTable:
    return SetTable(kind, tuple(shape))
