"""Arithmetic, harmonic, geometric and power maximal operators over box bases.

All operators take the supremum of a mean over the basis sets that contain a
cell.  Weighted versions replace Lebesgue averages with sigma-averages; sets
with zero sigma-mass have no weighted average and are skipped.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._tables import get_table, lmap
from .basis import DYADIC, Basis, BasisSet
from .grid import GridFunction, as_gridfunction, format_float, reciprocal

__all__ = [
    "MeanKind",
    "ARITHMETIC",
    "HARMONIC",
    "GEOMETRIC",
    "SigmaNullSet",
    "MaximalField",
    "set_mean",
    "mean_layout",
    "field_values",
    "maximal",
    "maximal_fast_dyadic",
    "minimal_operator",
    "ConvergenceReport",
    "limit_harmonic_to_geometric",
    "dyadic_stopping_cubes",
]


class SigmaNullSet(ValueError):
    """The weighted average over a set with zero weight mass is undefined."""


@dataclass(frozen=True)
class MeanKind:
    """Which mean a maximal operator takes: power means ``(avg f^t)^(1/t)``.

    ``t = 1`` is the arithmetic mean, ``t = -1`` the harmonic mean and
    ``t = 0`` stands for the geometric mean ``exp(avg log f)``.
    """

    t: float

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        if math.isnan(self.t) or math.isinf(self.t):
            raise ValueError("power must be finite")

    @classmethod
    def power(cls, t: float) -> MeanKind:
        if t == 0:
            raise ValueError("Power(t) needs t != 0; use GEOMETRIC")
        return cls(t)

    @classmethod
    def parse(cls, name: str, r: float | None = None) -> MeanKind:
        """Parse CLI-style names: m, m-1, m0, m-r, mr, arithmetic, ..."""
        key = name.strip().lower()
        table = {"m": ARITHMETIC, "arithmetic": ARITHMETIC, "m-1": HARMONIC,
                 "harmonic": HARMONIC, "m0": GEOMETRIC, "geometric": GEOMETRIC}
        if key in table:
            return table[key]
        if key in {"m-r", "mr", "power"}:
            if r is None or not r > 0:
                raise ValueError(f"{name} needs a positive r")
            return cls.power(-r if key == "m-r" else r)
        raise ValueError(f"unknown mean kind {name!r}")

    @property
    def name(self) -> str:
        if self.t == 1:
            return "arithmetic"
        if self.t == -1:
            return "harmonic"
        if self.t == 0:
            return "geometric"
        return f"power({self.t:g})"

    def __str__(self):
        return self.name


ARITHMETIC = MeanKind(1.0)
HARMONIC = MeanKind(-1.0)
GEOMETRIC = MeanKind(0.0)


@dataclass(frozen=True, eq=False)
class MaximalField(GridFunction):
    """Pointwise values of a maximal operator; ``witness`` holds per-cell
    attaining sets when requested."""

    witness: np.ndarray | None = field(default=None, repr=False)


# ---------------------------------------------------------------- cell terms
def _log_shift(f: np.ndarray) -> float:
    good = f[(f > 0) & np.isfinite(f)]
    if good.size == 0:
        return 0.0
    lg = np.log(good)
    return 0.5 * (float(lg.min()) + float(lg.max()))


def _cell_terms(kind: MeanKind, f: np.ndarray, w: np.ndarray | None, shift: float):
    """Cellwise summands.

    Returns ``(s, ninf, nzero)``: finite summands (already multiplied by the
    weight), an indicator of +inf summands and, for the geometric mean, of
    zeros.  Cells with zero weight contribute nothing.
    """
    pos = np.ones(f.shape, dtype=bool) if w is None else w > 0
    wt = 1.0 if w is None else w
    t = kind.t
    nzero = None
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if t == 1:
            g = f
        elif t == -1:
            g = reciprocal(f)
        elif t == 0:
            g = np.log(f)
            nzero = pos & (f == 0)
            g = np.where(nzero, 0.0, g)
        else:
            y = np.log(f)
            g = np.expm1(t * (y - shift))
            g = np.where(f == 0, -1.0 if t > 0 else np.inf, g)
            g = np.where(np.isinf(f), np.inf if t > 0 else -1.0, g)
        ninf = pos & np.isinf(g)
        s = np.where(pos & ~ninf, wt * np.where(ninf, 0.0, g), 0.0)
    return s, ninf, nzero


def _combine(kind: MeanKind, W, S, NINF, NZERO, shift: float):
    """Means from aggregated terms; -inf marks sets with no average."""
    t = kind.t
    W = np.asarray(W, dtype=float)
    null = W <= 0
    Wsafe = np.where(null, 1.0, W)
    avg = np.asarray(S, dtype=float) / Wsafe
    has_inf = np.asarray(NINF) > 0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if t == 1:
            out = np.where(has_inf, np.inf, avg)
        elif t == -1:
            out = np.where(has_inf, 0.0, reciprocal(avg))
        elif t == 0:
            out = np.exp(avg)
            out = np.where(has_inf, np.inf, out)
            out = np.where(np.asarray(NZERO) > 0, 0.0, out)
        else:
            a = np.where(has_inf, np.inf, np.maximum(avg, -1.0))
            out = np.exp(shift + np.log1p(a) / t)
    return np.where(null, -np.inf, out)


def _prep(f, sigma):
    f = as_gridfunction(f)
    if sigma is None:
        return f, None
    sigma = as_gridfunction(sigma, f.domain).check_weight("sigma")
    return f, sigma.values


def _agg(table, arr):
    if arr is None or not np.any(arr):
        return [np.zeros(c.shape) for c in table.counts]
    return table.sums(np.asarray(arr, dtype=float))


def _means(kind: MeanKind, fv: np.ndarray, wv, table, shift: float | None = None):
    if shift is None:
        shift = _log_shift(fv)
    s, ninf, nzero = _cell_terms(kind, fv, wv, shift)
    W = table.counts if wv is None else table.sums(wv)
    S = table.sums(s)
    NI = _agg(table, ninf)
    NZ = _agg(table, nzero) if nzero is not None else NI
    return lmap(lambda a, b, c, d: _combine(kind, a, b, c, d, shift), W, S, NI, NZ)


def field_values(kind: MeanKind, table, fv: np.ndarray, wv=None) -> np.ndarray:
    """Array-level maximal operator on any table shape (no GridFunction checks)."""
    vals = table.spread_max(_means(kind, fv, wv, table))
    return np.where(vals == -np.inf, 0.0, vals)


def mean_layout(kind: MeanKind, f, sigma=None, table=None):
    """Means of ``f`` over every set of ``table`` (default: dyadic on f's domain)."""
    f, w = _prep(f, sigma)
    if table is None:
        table = get_table(DYADIC, f.domain.shape)
    return _means(kind, f.values, w, table)


def set_mean(kind: MeanKind, f, S, sigma=None) -> float:
    """Mean of ``f`` over one set (a BasisSet, or anything with a cell mask).

    Raises SigmaNullSet when ``sigma`` has zero mass on the set.
    """
    f, w = _prep(f, sigma)
    if isinstance(S, BasisSet):
        if not S.inside(f.domain):
            raise ValueError(f"{S} is not inside the domain")
        sel = S.slices
    else:
        sel = S.cellset(f.domain).mask if hasattr(S, "cellset") else np.asarray(S.mask)
    fv = f.values[sel]
    if fv.size == 0:
        raise ValueError("mean over an empty set")
    wv = None if w is None else w[sel]
    shift = _log_shift(f.values)
    s, ninf, nzero = _cell_terms(kind, fv, wv, shift)
    W = float(fv.size) if wv is None else float(np.sum(wv))
    if W <= 0:
        raise SigmaNullSet("sigma vanishes on the set")
    nz = 0 if nzero is None else int(np.sum(nzero))
    val = _combine(kind, W, float(np.sum(s)), int(np.sum(ninf)), nz, shift)
    return float(val)


def maximal(kind: MeanKind, basis: Basis, f, sigma=None, method: str = "fast",
            witness: bool = False) -> MaximalField:
    """``x -> sup{mean(f, B) : B in basis, x in B}``; 0 where no set applies.

    ``method="brute"`` evaluates every set separately and is the reference
    path; ``witness=True`` implies it and records one attaining set per cell
    (ties go to the lexicographically smallest set).
    """
    f = as_gridfunction(f, basis.domain)
    if witness or method == "brute":
        return _maximal_brute(kind, basis, f, sigma, witness)
    if method != "fast":
        raise ValueError(f"unknown method {method!r}")
    f, w = _prep(f, sigma)
    return MaximalField(basis.domain, field_values(kind, basis.table, f.values, w))


def _maximal_brute(kind, basis, f, sigma, want_witness):
    out = np.full(basis.domain.shape, -np.inf)
    wit = np.full(basis.domain.shape, None, dtype=object) if want_witness else None
    for B in basis.enumerate_all():
        try:
            m = set_mean(kind, f, B, sigma)
        except SigmaNullSet:
            continue
        region = out[B.slices]
        if want_witness:
            wreg = wit[B.slices]
            for idx in np.ndindex(region.shape):
                cur = wreg[idx]
                if m > region[idx] or (m == region[idx] and (cur is None or B < cur)):
                    region[idx] = m
                    wreg[idx] = B
        else:
            np.maximum(region, m, out=region)
    vals = np.where(out == -np.inf, 0.0, out)
    return MaximalField(basis.domain, vals, wit)


def maximal_fast_dyadic(kind: MeanKind, f, sigma=None) -> MaximalField:
    """Dyadic maximal operator by tree aggregation: block sums bottom-up,
    running maxima top-down; O(cells) work per aggregate."""
    f = as_gridfunction(f)
    return maximal(kind, Basis(DYADIC, f.domain), f, sigma)


def minimal_operator(basis: Basis, f) -> MaximalField:
    """``x -> inf{avg_B f : B in basis, x in B}``."""
    f = as_gridfunction(f, basis.domain)
    means = mean_layout(ARITHMETIC, f, None, basis.table)
    # -inf marks nothing here: unweighted means always exist
    vals = basis.table.spread_min(means)
    return MaximalField(basis.domain, vals)


@dataclass
class ConvergenceReport:
    """Gaps between M_{-r} f and M_0 f along a schedule of r."""

    r: list[float]
    sup_gap: list[float]
    mean_gap: list[float]
    geometric: MaximalField = field(repr=False)
    fields: list[MaximalField] = field(repr=False, default_factory=list)

    def monotone(self, rtol: float = 0.0) -> bool:
        g = self.sup_gap
        return all(b <= a * (1 + rtol) + 0.0 for a, b in zip(g, g[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "sup_gap", "mean_gap"])
        for row in zip(self.r, self.sup_gap, self.mean_gap):
            w.writerow([format_float(v) for v in row])
        return buf.getvalue()


def limit_harmonic_to_geometric(basis: Basis, f, r_schedule, sigma=None) -> ConvergenceReport:
    """Evaluate ``M_{-r} f`` along a decreasing schedule and compare with ``M_0 f``."""
    f = as_gridfunction(f, basis.domain)
    geo = maximal(GEOMETRIC, basis, f, sigma)
    rs, sup_gap, mean_gap, fields = [], [], [], []
    for r in r_schedule:
        if not r > 0:
            raise ValueError("schedule entries must be positive")
        m = maximal(MeanKind.power(-r), basis, f, sigma)
        with np.errstate(invalid="ignore"):
            gap = np.abs(geo.values - m.values)
        gap = np.where(np.isnan(gap), 0.0, gap)  # inf - inf where both are infinite
        rs.append(float(r))
        sup_gap.append(float(gap.max()))
        mean_gap.append(float(gap.mean()))
        fields.append(m)
    return ConvergenceReport(rs, sup_gap, mean_gap, geo, fields)


def dyadic_stopping_cubes(f, sigma, lam: float) -> list[BasisSet]:
    """Maximal dyadic cubes whose harmonic sigma-average of ``f`` exceeds ``lam``.

    The cubes are pairwise disjoint and their union is the level set
    ``{M^D_{-1,sigma} f > lam}``.
    """
    if not lam > 0:
        raise ValueError("threshold must be positive")
    f = as_gridfunction(f)
    table = get_table(DYADIC, f.domain.shape)
    means = mean_layout(HARMONIC, f, sigma, table)
    out = []
    covered = np.zeros(means[table.top].shape, dtype=bool)
    for l in range(table.top, -1, -1):
        if l < table.top:
            for ax in range(table.dim):
                covered = covered.repeat(2, axis=ax)
        hit = (means[l] > lam) & ~covered
        for idx in zip(*np.nonzero(hit)):
            out.append(BasisSet(tuple(int(i) << l for i in idx), (1 << l,) * table.dim))
        covered |= hit
    return sorted(out)
