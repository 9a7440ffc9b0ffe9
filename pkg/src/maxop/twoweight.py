"""Two-weight testing constants, empirical operator norms and the sparse
selection used to tame overlapping families of basis sets.

Norm estimates are lower bounds: they maximise a Rayleigh-type ratio over a
finite candidate family.  With every single-set indicator in the family, the
strong ratio dominates the single-set testing constant and the weak ratio
dominates the joint harmonic constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._tables import get_table
from .basis import Basis, BasisSet, SetUnion, as_rng
from .grid import GridFunction, as_gridfunction, reciprocal
from .operators import GEOMETRIC, HARMONIC, MeanKind, field_values

__all__ = [
    "TestingReport",
    "NormEstimate",
    "SelectionResult",
    "testing_constant_harmonic",
    "testing_constant_geometric",
    "estimate_operator_norm",
    "select_sparse_subfamily",
    "chain_inequality_ratio",
]

DEFAULT_MAX_SINGLE = 1024


@dataclass
class TestingReport:
    """Largest testing ratio found, with the set that produced it.

    ``exact`` is True when every single basis set was evaluated, in which
    case the constant is the exact single-set supremum.
    """

    __test__ = False  # keep pytest from collecting this class

    constant: float
    tried: int
    skipped: int
    worst: SetUnion | None
    kind: str
    p: float
    basis: str
    exact: bool
    unions_tried: int = 0

    def to_json(self) -> dict:
        val = self.constant
        return {
            "constant": "inf" if math.isinf(val) else val,
            "tried": self.tried,
            "skipped": self.skipped,
            "worst": None if self.worst is None else self.worst.to_json(),
            "kind": self.kind,
            "p": self.p,
            "basis": self.basis,
            "exact": self.exact,
        }


@dataclass
class NormEstimate:
    """Best strong and weak ratios over the candidate family."""

    strong_ratio: float
    weak_ratio: float
    strong_witness: np.ndarray | None = field(repr=False)
    weak_witness: tuple[np.ndarray, float] | None = field(repr=False)
    trials: int
    skipped: int
    p: float
    kind: str

    @property
    def strong_norm(self) -> float:
        """``strong_ratio^(1/p)``: the ratio of norms rather than p-th powers."""
        return self.strong_ratio ** (1.0 / self.p)


@dataclass
class SelectionResult:
    selected: list[int]
    alpha: float
    certificates: list[dict]


# ------------------------------------------------------------- arithmetic
def _pow_times(field_vals: np.ndarray, p: float, u: np.ndarray) -> np.ndarray:
    """``field^p * u`` with ``inf * 0 = 0``."""
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.power(field_vals, p) * u
    return np.where(u == 0, 0.0, out)


def _tuck(f: np.ndarray, tuck: np.ndarray | None) -> np.ndarray:
    if tuck is None:
        return f
    with np.errstate(invalid="ignore"):
        out = f * tuck
    return np.where(f == 0, 0.0, out)


def _weak_sup(field_vals: np.ndarray, u: np.ndarray, p: float) -> tuple[float, float]:
    """``sup_lambda lambda^p u({field > lambda})`` and a near-attaining lambda.

    The supremum is approached as lambda rises to one of the field values,
    so scanning the sorted values gives it exactly.
    """
    keep = (u > 0) & (field_vals > 0)
    if not keep.any():
        return 0.0, 0.0
    g = field_vals[keep]
    w = u[keep]
    order = np.argsort(-g, kind="stable")
    g, w = g[order], w[order]
    if np.isinf(g[0]):
        return math.inf, math.inf
    cum = np.cumsum(w)
    # last index of each run of equal values
    last = np.flatnonzero(np.append(g[1:] != g[:-1], True))
    vals = np.power(g[last], p) * cum[last]
    k = int(np.argmax(vals))
    return float(vals[k]), float(g[last[k]])


def _single_sets(basis: Basis, cap: int | None):
    """Indices of single sets to evaluate: all of them, or an evenly spaced
    deterministic subset of size ``cap``."""
    n = len(basis)
    if cap is None or n <= cap:
        return np.arange(n), True
    return np.unique(np.linspace(0, n - 1, cap).round().astype(np.int64)), False


def _subbox_field(kind: MeanKind, basis_kind: str, B: BasisSet, g_sub: np.ndarray) -> np.ndarray:
    """Operator applied to ``g 1_B`` restricted to ``B``, for means that
    vanish on every set meeting a zero (t <= 0): only sets inside ``B``
    matter there, and those form the same basis kind on the sub-box."""
    return field_values(kind, get_table(basis_kind, B.size), g_sub)


# -------------------------------------------------------- testing constants
def _testing(kind, u, g, basis, p, denom, union_budget, rng, max_single, name):
    """Shared driver: ``ratio(F) = int_F M(g 1_F)^p u / denom(F)``."""
    best, worst, tried, skipped = -math.inf, None, 0, 0
    idx, exact = _single_sets(basis, max_single)
    for k in idx.tolist():
        B = basis.set_at(k)
        d = denom(B.slices)
        tried += 1
        if d == 0:
            skipped += 1
            continue
        fld = _subbox_field(kind, basis.kind, B, g[B.slices])
        val = float(np.sum(_pow_times(fld, p, u[B.slices]))) / d
        if val > best:
            best, worst = val, SetUnion(basis.domain, (B,))
    rng = as_rng(rng)
    for _ in range(int(union_budget)):
        F = basis.random_union(int(rng.integers(2, 6)), rng)
        mask = F.cells.mask
        d = denom(mask)
        tried += 1
        if d == 0:
            skipped += 1
            continue
        fld = field_values(kind, basis.table, np.where(mask, g, 0.0))
        val = float(np.sum(_pow_times(fld[mask], p, u[mask]))) / d
        if val > best:
            best, worst = val, F
    if best == -math.inf:
        best = 0.0
    return TestingReport(best, tried, skipped, worst, name, float(p), basis.kind,
                         exact, int(union_budget))


def testing_constant_harmonic(u, sigma, basis: Basis, p: float, union_budget: int = 0,
                              rng=None, max_single: int | None = DEFAULT_MAX_SINGLE) -> TestingReport:
    """Largest ``int_F M_{-1}(sigma^{-1} 1_F)^p u / sigma(F)`` over single basis
    sets and ``union_budget`` random finite unions.

    Sets with ``sigma(F) = 0`` are skipped and counted.  For the dyadic basis
    single cubes already characterise boundedness, so ``union_budget=0``
    gives the exact constant.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    uv = as_gridfunction(u, basis.domain).check_weight("u").values
    sv = as_gridfunction(sigma, basis.domain).check_weight("sigma").values
    return _testing(HARMONIC, uv, reciprocal(sv), basis, p,
                    lambda sel: float(np.sum(sv[sel])), union_budget, rng, max_single, "harmonic")


def testing_constant_geometric(u, v, basis: Basis, p: float = 1.0, union_budget: int = 0,
                               rng=None, max_single: int | None = DEFAULT_MAX_SINGLE) -> TestingReport:
    """Largest ``int_F M_0(v^{-1} 1_F)^p u / |F|`` over single sets and random unions."""
    if not p > 0:
        raise ValueError("p must be positive")
    uv = as_gridfunction(u, basis.domain).check_weight("u").values
    vv = as_gridfunction(v, basis.domain).check_weight("v").values
    return _testing(GEOMETRIC, uv, reciprocal(vv), basis, p,
                    lambda sel: float(uv[sel].size),
                    union_budget, rng, max_single, "geometric")


# -------------------------------------------------------- norm estimation
class _Rayleigh:
    """Evaluates ``int M(f tuck)^p u / int f^p sigma`` and its weak analogue."""

    def __init__(self, kind, u, sigma, basis, p, tuck, avg_weight):
        self.kind, self.u, self.sigma, self.basis, self.p = kind, u, sigma, basis, p
        self.tuck, self.avg_weight = tuck, avg_weight
        self.best = (-math.inf, None)
        self.best_weak = (-math.inf, None)
        self.evals = 0
        self.skipped = 0

    def denom(self, f):
        return float(np.sum(_pow_times(f, self.p, self.sigma)))

    def record(self, f, num, fld, d):
        ratio = num / d
        if ratio > self.best[0]:
            self.best = (ratio, f)
        wk, lam = _weak_sup(fld, self.u, self.p)
        wk /= d
        if wk > self.best_weak[0]:
            self.best_weak = (wk, (f, lam))
        return ratio

    def __call__(self, f):
        self.evals += 1
        d = self.denom(f)
        if d == 0 or not math.isfinite(d):
            self.skipped += 1
            return -math.inf
        fld = field_values(self.kind, self.basis.table, _tuck(f, self.tuck), self.avg_weight)
        num = float(np.sum(_pow_times(fld, self.p, self.u)))
        return self.record(f, num, fld, d)

    def indicator(self, B: BasisSet):
        """Fast path for ``f = 1_B`` when the mean kills sets leaving ``B``."""
        if self.avg_weight is not None or self.kind.t > 0:
            f = np.zeros(self.u.shape)
            f[B.slices] = 1.0
            return self(f)
        self.evals += 1
        sl = B.slices
        d = float(np.sum(self.sigma[sl]))
        if d == 0:
            self.skipped += 1
            return -math.inf
        g = np.ones(B.size) if self.tuck is None else self.tuck[sl]
        sub = _subbox_field(self.kind, self.basis.kind, B, g)
        fld = np.zeros(self.u.shape)
        fld[sl] = sub
        num = float(np.sum(_pow_times(sub, self.p, self.u[sl])))
        f = np.zeros(self.u.shape)
        f[sl] = 1.0
        return self.record(f, num, fld, d)


def estimate_operator_norm(kind: MeanKind, u, sigma, basis: Basis, p: float, trials: int = 32,
                           rng=None, tuck=None, avg_weight=None, indicators: bool = True,
                           max_indicators: int | None = DEFAULT_MAX_SINGLE,
                           tilts=(0.25, 0.5, 1.0), sweeps: int = 3,
                           greedy_cells: int | None = 256) -> NormEstimate:
    """Lower bounds for the strong and weak norms of ``f -> M(f * tuck)``
    from ``L^p(sigma)`` to ``L^p(u)``.

    ``tuck`` defaults to ``1/sigma`` (the tucked two-weight form); pass an
    array of ones for the plain operator.  ``avg_weight`` switches to
    weighted averages inside the operator.  Candidates, in order: the
    constant function, every single-set indicator (or an evenly spaced
    subset of ``max_indicators``), tilted functions ``sigma^{-s}`` on the
    whole domain and on random unions, ``trials`` random log-normal fields
    and indicators of random unions; then ``sweeps`` rounds of greedy
    cellwise ascent (multiply one cell by 2 or 1/2, keep improvements)
    starting from the best candidate.  The weak ratio is the exact supremum
    over lambda for each evaluated candidate.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    dom = basis.domain
    uv = as_gridfunction(u, dom).check_weight("u").values
    sv = as_gridfunction(sigma, dom).check_weight("sigma").values
    tv = reciprocal(sv) if tuck is None else as_gridfunction(tuck, dom).values
    if np.all(tv == 1.0):
        tv = None
    aw = None if avg_weight is None else as_gridfunction(avg_weight, dom).check_weight("avg_weight").values
    rng = as_rng(rng)
    R = _Rayleigh(kind, uv, sv, basis, float(p), tv, aw)
    support = sv > 0

    R(support.astype(float))
    if indicators:
        idx, _ = _single_sets(basis, max_indicators)
        for k in idx.tolist():
            R.indicator(basis.set_at(k))
    unions = [basis.random_union(int(rng.integers(1, 6)), rng).cells.mask for _ in range(trials)]
    for s in tilts:
        base = np.where(support, np.power(np.where(support, sv, 1.0), -s), 0.0)
        R(base)
        R(np.where(unions[0], base, 0.0))
    for i in range(trials):
        R(np.where(support, rng.lognormal(0.0, 1.5, size=dom.shape), 0.0))
        R(np.where(unions[i] & support, 1.0, 0.0))

    if sweeps > 0 and R.best[1] is not None:
        f = np.array(R.best[1], dtype=float)
        cur = R.best[0]
        cells = np.flatnonzero(support.reshape(-1))
        for _ in range(sweeps):
            pick = cells
            if greedy_cells is not None and cells.size > greedy_cells:
                pick = np.sort(rng.choice(cells, size=greedy_cells, replace=False))
            flat = f.reshape(-1)
            for c in pick.tolist():
                old = flat[c]
                for factor in (2.0, 0.5):
                    flat[c] = old * factor if old > 0 else factor
                    val = R(f.copy())
                    if val > cur:
                        cur = val
                        break
                    flat[c] = old
    strong, sw = R.best
    weak, ww = R.best_weak
    if strong == -math.inf:
        strong, weak = 0.0, 0.0
    return NormEstimate(float(strong), float(max(weak, 0.0)), sw, ww, R.evals, R.skipped,
                        float(p), kind.name)


# ----------------------------------------------------- sparse selection
def _extent(sets) -> tuple[int, ...]:
    dim = len(sets[0].lower)
    return tuple(max(b.lower[i] + b.size[i] for b in sets) for i in range(dim))


def select_sparse_subfamily(sets, alpha: float, shape=None) -> SelectionResult:
    """Greedy scan keeping a set iff its overlap with the union of the sets
    kept so far is at most ``alpha`` times its own measure.

    The comparison is exact (integer cell counts against the exact rational
    value of ``alpha``).
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    sets = list(sets)
    if not sets:
        return SelectionResult([], float(alpha), [])
    covered = np.zeros(shape or _extent(sets), dtype=bool)
    a = Fraction(alpha)
    selected, certs = [], []
    for i, B in enumerate(sets):
        overlap = int(np.count_nonzero(covered[B.slices]))
        if overlap <= a * B.count:
            selected.append(i)
            certs.append({"index": i, "overlap": overlap, "measure": B.count})
            covered[B.slices] = True
    return SelectionResult(selected, float(alpha), certs)


def chain_inequality_ratio(u, sets, selection: SelectionResult) -> float:
    """Smallest ``c`` making the u-measure chain inequality hold for this
    family: ``u(U_{s<j} A_s) <= c [u(U_{s<i} A_s) + u(U_{s in I, i<=s<j} A_s)]``
    over all ``i < j``.  Pairs with a zero right side and zero left side
    are ignored; a zero right side under a positive left side gives inf.
    """
    sets = list(sets)
    uv = np.asarray(u.values if isinstance(u, GridFunction) else u, dtype=float)
    M = len(sets)
    chosen = set(selection.selected)
    prefix = [0.0]
    mask = np.zeros(uv.shape, dtype=bool)
    for B in sets:
        mask[B.slices] = True
        prefix.append(float(uv[mask].sum()))
    worst = 0.0
    for i in range(M):
        sel_mask = np.zeros(uv.shape, dtype=bool)
        for j in range(i + 1, M + 1):
            s = j - 1
            if s in chosen:
                sel_mask[sets[s].slices] = True
            lhs = prefix[j]
            rhs = prefix[i] + float(uv[sel_mask].sum())
            if rhs == 0:
                if lhs > 0:
                    return math.inf
                continue
            worst = max(worst, lhs / rhs)
    return worst
