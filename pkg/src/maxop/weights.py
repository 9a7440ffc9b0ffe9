"""Sup-type weight constants: A_p, A_infinity, doubling, condition A and the
two-weight conditions for the harmonic maximal operator.

Every constant is an exact maximum over the sets of a basis, returned as a
ConstantReport with one attaining set (ties go to the lexicographically
smallest ``(lower, size)``).  Inside products, ``0 * inf`` is taken to be
``inf``; in ratios ``0 / 0`` means the set is skipped.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import CUBES, Basis, BasisSet, SetUnion, as_rng
from .grid import CellSet, GridFunction, as_gridfunction, format_float
from .operators import ARITHMETIC, maximal

__all__ = [
    "ConstantReport",
    "set_averages",
    "ap_constant",
    "ainfty_constant",
    "doubling_constant",
    "condition_a_estimate",
    "condition_a_ratio",
    "joint_harmonic_constant",
    "bump_harmonic_constant",
    "bump_arithmetic_constant",
    "twoweight_ainfty_constant",
]

EXHAUSTIVE_MAX_CELLS = 16


def _jsonable(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(format_float(x))
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "to_json"):
        return x.to_json()
    return x


@dataclass
class ConstantReport:
    value: float
    witness: BasisSet | SetUnion | CellSet | None
    basis: str
    params: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def to_json(self) -> dict:
        return {
            "value": _jsonable(float(self.value)),
            "witness": None if self.witness is None else self.witness.to_json(),
            "basis": self.basis,
            "params": _jsonable(self.params),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ------------------------------------------------------------------ helpers
def set_averages(basis: Basis, values) -> np.ndarray:
    """Lebesgue averages of a cell array over every basis set (enumeration order).

    ``values`` may contain +inf or -inf (not both in one set): any infinite
    cell makes the average infinite with the same sign.
    """
    v = np.asarray(values, dtype=float).reshape(basis.domain.shape)
    t = basis.table
    pinf, ninf = v == np.inf, v == -np.inf
    finite = np.where(pinf | ninf, 0.0, v)
    avg = t.flatten(t.sums(finite)) / t.flatten(t.counts)
    if pinf.any():
        avg = np.where(t.flatten(t.sums(pinf.astype(float))) > 0, np.inf, avg)
    if ninf.any():
        avg = np.where(t.flatten(t.sums(ninf.astype(float))) > 0, -np.inf, avg)
    return avg


def _mul(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    degenerate = ((a == 0) & np.isinf(b)) | (np.isinf(a) & (b == 0))
    with np.errstate(invalid="ignore"):
        return np.where(degenerate, np.inf, a * b)


def _ratio(num, den):
    """num/den with x/0 = inf for x > 0 and 0/0 = nan (skip)."""
    num, den = np.broadcast_arrays(np.asarray(num, float), np.asarray(den, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / np.where(den == 0, 1.0, den)
    out = np.where(den == 0, np.where(num > 0, np.inf, np.nan), out)
    return np.where(np.isinf(den) & np.isinf(num), np.nan, out)


def _best(basis: Basis, values: np.ndarray, name: str, params: dict) -> ConstantReport:
    vals = np.where(np.isnan(values), -np.inf, values)
    top = vals.max()
    if top == -np.inf:
        return ConstantReport(0.0, None, basis.kind, params)
    idx = np.flatnonzero(vals == top)
    lower, size = basis.arrays()
    keys = [tuple(lower[i]) + tuple(size[i]) for i in idx.tolist()]
    k = idx[min(range(len(idx)), key=keys.__getitem__)]
    return ConstantReport(float(top), basis.set_at(int(k)), basis.kind, dict(params, constant=name))


def _weight(w, basis: Basis, name: str) -> np.ndarray:
    return as_gridfunction(w, basis.domain).check_weight(name).values


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


# ------------------------------------------------------------ one weight
def ap_constant(w, basis: Basis, p: float) -> ConstantReport:
    """``sup_B (avg_B w) (avg_B w^(-1/(p-1)))^(p-1)``."""
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    wv = _weight(w, basis, "w")
    with np.errstate(divide="ignore"):
        dual = np.where(wv == 0, np.inf, wv ** (-1.0 / (p - 1)))
    a = set_averages(basis, wv)
    b = set_averages(basis, dual) ** (p - 1)
    return _best(basis, _mul(a, b), "ap", {"p": p})


def ainfty_constant(w, basis: Basis) -> ConstantReport:
    """``sup_B (avg_B w) exp(-avg_B log w)``."""
    wv = _weight(w, basis, "w")
    a = set_averages(basis, wv)
    g = np.exp(-set_averages(basis, _log(wv)))
    return _best(basis, _mul(a, g), "ainfty", {})


def doubling_constant(mu, max_scale: int | None = None) -> ConstantReport:
    """``max mu(2Q)/mu(Q)`` over lattice cubes Q whose concentric double fits.

    Only even side lengths are used: the concentric double of an odd-sided
    lattice cube is not a lattice cube.
    """
    mu = as_gridfunction(mu).check_weight("mu")
    basis = Basis(CUBES, mu.domain)
    t = basis.table
    sums = t.sums(mu.values)
    smax = t.smax // 2 if max_scale is None else min(int(max_scale), t.smax // 2)
    best, wit = -np.inf, None
    for s in range(2, smax + 1, 2):
        half = s // 2
        inner = sums[s - 1]
        outer = sums[2 * s - 1]
        # Q at lower a needs 2Q at a - s/2, inside the domain
        sl = tuple(slice(half, half + n) for n in outer.shape)
        q = inner[sl]
        r = _ratio(outer, q)
        r = np.where(np.isnan(r), -np.inf, r)
        top = r.max()
        if top > best:
            best = float(top)
            a = np.unravel_index(int(np.argmax(r)), r.shape)
            wit = BasisSet(tuple(int(i) + half for i in a), (s,) * mu.domain.dim)
    if wit is None:
        return ConstantReport(0.0, None, CUBES, {"max_scale": max_scale, "constant": "doubling"})
    return ConstantReport(best, wit, CUBES, {"max_scale": max_scale, "constant": "doubling"})


# ----------------------------------------------------------- condition A
def condition_a_ratio(w, basis: Basis, E, alpha: float) -> float:
    """``w({M 1_E > alpha}) / w(E)``; nan when ``w(E) = 0``."""
    wv = _weight(w, basis, "w")
    mask = E.mask if isinstance(E, CellSet) else np.asarray(E, dtype=bool).reshape(wv.shape)
    wE = float(np.sum(wv[mask]))
    if wE == 0:
        return math.nan
    ind = GridFunction(basis.domain, mask.astype(float))
    level = maximal(ARITHMETIC, basis, ind).values > alpha
    return float(np.sum(wv[level])) / wE


def _sample_set(kind: str, basis: Basis, rng) -> np.ndarray:
    shape = basis.domain.shape
    if kind == "cells":
        return rng.random(shape) < rng.uniform(0.02, 0.5)
    if kind == "levels":
        fld = rng.lognormal(0.0, 1.0, size=shape)
        return fld > np.quantile(fld, rng.uniform(0.5, 0.98))
    if kind == "unions":
        return basis.random_union(int(rng.integers(1, 5)), rng).cells.mask
    raise ValueError(f"unknown sampler {kind!r}")


def condition_a_estimate(w, basis: Basis, alpha: float, sampler: str = "mixed",
                         trials: int = 200, rng=None, exhaustive: bool = False) -> ConstantReport:
    """Lower bound for ``c(alpha) = sup_E w({M 1_E > alpha}) / w(E)``.

    Sampled sets come from random cell subsets, super-level sets of random
    fields and random unions of basis sets.  ``exhaustive=True`` runs over
    all ``2^cells`` subsets and is limited to 16 cells.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if exhaustive:
        return _condition_a_exhaustive(w, basis, alpha)
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = as_rng(rng)
    kinds = ["cells", "levels", "unions"] if sampler == "mixed" else [sampler]
    best, wit = -np.inf, None
    for i in range(trials):
        E = _sample_set(kinds[i % len(kinds)], basis, rng)
        r = condition_a_ratio(w, basis, E, alpha)
        if math.isnan(r):
            continue
        if r > best:
            best, wit = r, E
    params = {"alpha": alpha, "sampler": sampler, "trials": trials, "constant": "cond-a"}
    if wit is None:
        return ConstantReport(0.0, None, basis.kind, params)
    return ConstantReport(best, CellSet(basis.domain, wit), basis.kind, params)


def _condition_a_exhaustive(w, basis: Basis, alpha: float) -> ConstantReport:
    wv = _weight(w, basis, "w").reshape(-1)
    n = wv.size
    if n > EXHAUSTIVE_MAX_CELLS:
        raise ValueError(f"exhaustive condition A is limited to {EXHAUSTIVE_MAX_CELLS} cells")
    lower, size = basis.arrays()
    inc = np.stack([b.cellset(basis.domain).mask.reshape(-1) for b in basis.enumerate_all()])
    inc_f = inc.astype(np.float64)
    sizes = inc.sum(axis=1).astype(np.float64)
    bits = 1 << np.arange(n, dtype=np.int64)
    best, best_code = -np.inf, None
    chunk = 1 << 12
    for start in range(1, 1 << n, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        E = ((codes[:, None] & bits) != 0).astype(np.float64)
        counts = E @ inc_f.T
        hit = (counts > alpha * sizes).astype(np.float64)
        level = (hit @ inc_f) > 0
        wE = E @ wv
        ok = wE > 0
        ratio = np.full(codes.shape, -np.inf)
        ratio[ok] = (level[ok] @ wv) / wE[ok]
        j = int(np.argmax(ratio))
        if ratio[j] > best:
            best, best_code = float(ratio[j]), int(codes[j])
    params = {"alpha": alpha, "sampler": "exhaustive", "trials": (1 << n) - 1, "constant": "cond-a"}
    mask = ((best_code & bits) != 0).reshape(basis.domain.shape)
    return ConstantReport(best, CellSet(basis.domain, mask), basis.kind, params)


# ----------------------------------------------------------- two weights
def joint_harmonic_constant(u, sigma, basis: Basis, p: float) -> ConstantReport:
    """``sup_B (avg_B u) / (avg_B sigma)^(p+1)``."""
    if not p > 0:
        raise ValueError("p must be positive")
    uv, sv = _weight(u, basis, "u"), _weight(sigma, basis, "sigma")
    vals = _ratio(set_averages(basis, uv), set_averages(basis, sv) ** (p + 1))
    return _best(basis, vals, "joint", {"p": p})


def bump_harmonic_constant(u, sigma, basis: Basis, p: float, r: float) -> ConstantReport:
    """``sup_B (avg_B u) / (avg_B sigma^r)^((p+1)/r)`` for ``0 < r < 1``."""
    if not p > 0:
        raise ValueError("p must be positive")
    if not 0 < r < 1:
        raise ValueError("the harmonic bump needs 0 < r < 1")
    uv, sv = _weight(u, basis, "u"), _weight(sigma, basis, "sigma")
    vals = _ratio(set_averages(basis, uv), set_averages(basis, sv ** r) ** ((p + 1) / r))
    return _best(basis, vals, "bump-harmonic", {"p": p, "r": r})


def bump_arithmetic_constant(u, sigma, basis: Basis, p: float, r: float) -> ConstantReport:
    """``sup_B (avg_B u)^(1/p) (avg_B sigma^r)^(1/(r p'))`` for ``p > 1``, ``r >= 1``."""
    if not p > 1:
        raise ValueError("the arithmetic bump needs p > 1")
    if not r >= 1:
        raise ValueError("the arithmetic bump needs r >= 1")
    uv, sv = _weight(u, basis, "u"), _weight(sigma, basis, "sigma")
    pp = p / (p - 1)
    a = set_averages(basis, uv) ** (1 / p)
    b = set_averages(basis, sv ** r) ** (1 / (r * pp))
    return _best(basis, _mul(a, b), "bump-arith", {"p": p, "r": r})


def twoweight_ainfty_constant(u, v, basis: Basis) -> ConstantReport:
    """``sup_B (avg_B u) exp(-avg_B log v)``."""
    uv, vv = _weight(u, basis, "u"), _weight(v, basis, "v")
    vals = _mul(set_averages(basis, uv), np.exp(-set_averages(basis, _log(vv))))
    return _best(basis, vals, "tw-ainfty", {})
