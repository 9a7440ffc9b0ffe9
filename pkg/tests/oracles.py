"""Independent reference implementations for the tests.

Nothing here touches the package's tables or mean kernels: boxes are
enumerated with itertools and means are evaluated per set in mpmath (or
exact Fractions where the answer is rational).
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 40
INF = mpmath.inf


def boxes(kind, shape):
    """All (lower, size) boxes of a basis kind, by brute force."""
    dim = len(shape)
    if kind == "dyadic":
        top = min(int(math.log2(n)) for n in shape)
        out = []
        for l in range(top + 1):
            s = 2 ** l
            for lo in itertools.product(*[range(0, n, s) for n in shape]):
                out.append((lo, (s,) * dim))
        return out
    if kind == "cubes":
        out = []
        for s in range(1, min(shape) + 1):
            for lo in itertools.product(*[range(n - s + 1) for n in shape]):
                out.append((lo, (s,) * dim))
        return out
    if kind == "rects":
        axes = [[(a, b - a) for a in range(n) for b in range(a + 1, n + 1)] for n in shape]
        return [(tuple(p[0] for p in combo), tuple(p[1] for p in combo))
                for combo in itertools.product(*axes)]
    raise ValueError(kind)


def cells(lo, sz):
    return list(itertools.product(*[range(a, a + s) for a, s in zip(lo, sz)]))


def power_mean(t, vals, weights=None):
    """Weighted power mean in mpmath; None when the weights vanish.

    Cells with zero weight are ignored.  t = 0 is the geometric mean.
    """
    if weights is None:
        weights = [1] * len(vals)
    pairs = [(mpmath.mpf(float(v)), mpmath.mpf(float(w))) for v, w in zip(vals, weights) if w > 0]
    if not pairs:
        return None
    W = mpmath.fsum(w for _, w in pairs)
    if t == 0:
        if any(v == 0 for v, _ in pairs):
            return mpmath.mpf(0)
        return mpmath.exp(mpmath.fsum(w * mpmath.log(v) for v, w in pairs) / W)
    if t < 0 and any(v == 0 for v, _ in pairs):
        return mpmath.mpf(0)
    t = mpmath.mpf(t)
    return (mpmath.fsum(w * v ** t for v, w in pairs) / W) ** (1 / t)


def maximal(t, kind, f, sigma=None):
    """sup over boxes containing each cell of the power mean; 0 if none."""
    f = np.asarray(f, dtype=float)
    out = np.zeros(f.shape)
    best = {}
    for lo, sz in boxes(kind, f.shape):
        cs = cells(lo, sz)
        m = power_mean(t, [f[c] for c in cs], None if sigma is None else [sigma[c] for c in cs])
        if m is None:
            continue
        for c in cs:
            if c not in best or m > best[c]:
                best[c] = m
    for c, m in best.items():
        out[c] = float(m)
    return out


def minimal(kind, f):
    f = np.asarray(f, dtype=float)
    out = np.full(f.shape, np.inf)
    for lo, sz in boxes(kind, f.shape):
        cs = cells(lo, sz)
        m = math.fsum(f[c] for c in cs) / len(cs)
        for c in cs:
            out[c] = min(out[c], m)
    return out


def frac_avg(vals):
    return sum(Fraction(v) for v in vals) / len(vals)


def ap_exact(w, kind, p):
    """A_p for integer p with Fractions: max of avg(w) * avg(w^{-1/(p-1)})^{p-1}."""
    assert p == 2
    best, arg = None, None
    for lo, sz in boxes(kind, (len(w),)):
        vals = w[lo[0]:lo[0] + sz[0]]
        val = frac_avg(vals) * frac_avg([Fraction(1, 1) / Fraction(v) for v in vals])
        if best is None or val > best:
            best, arg = val, (lo, sz)
    return best, arg


def doubling_pairs(w):
    """Exhaustive (Q, 2Q) pairs in 1-D with even sides: max w(2Q)/w(Q)."""
    n = len(w)
    best = 0.0
    for s in range(2, n + 1, 2):
        for a in range(n - s + 1):
            lo, hi = a - s // 2, a + s + s // 2
            if lo < 0 or hi > n:
                continue
            best = max(best, Fraction(sum(w[lo:hi])) / Fraction(sum(w[a:a + s])))
    return best


def condition_a_all_subsets(w, kind, alpha):
    """max over nonempty E of w({M 1_E > alpha}) / w(E), by enumeration."""
    n = len(w)
    bxs = boxes(kind, (n,))
    best = Fraction(0)
    for code in range(1, 1 << n):
        E = [(code >> i) & 1 for i in range(n)]
        wE = sum(Fraction(w[i]) for i in range(n) if E[i])
        if wE == 0:
            continue
        level = [False] * n
        for (a,), (s,) in bxs:
            if Fraction(sum(E[a:a + s]), s) > Fraction(alpha):
                for i in range(a, a + s):
                    level[i] = True
        r = sum(Fraction(w[i]) for i in range(n) if level[i]) / wE
        best = max(best, r)
    return best


def testing_ratios(t, kind, u, g, denom):
    """{(lower, size): int_F M_t(g 1_F) u / denom(F)} over single boxes, in mpmath."""
    u = np.asarray(u, dtype=float)
    g = np.asarray(g, dtype=float)
    out = {}
    for lo, sz in boxes(kind, u.shape):
        cs = cells(lo, sz)
        d = denom(cs)
        if d == 0:
            continue
        h = np.zeros(u.shape)
        for c in cs:
            h[c] = g[c]
        fld = maximal(t, kind, h)
        out[(lo, sz)] = math.fsum(float(fld[c]) * float(u[c]) for c in cs) / d
    return out


def selection_is_valid(sets, alpha, selected):
    """Replay a greedy selection with exact cell sets: every selected set
    meets the earlier selected union in at most alpha of its cells, and
    every rejected set exceeds that."""
    a = Fraction(alpha)
    covered = set()
    chosen = set(selected)
    for i, B in enumerate(sets):
        cs = set(cells(B.lower, B.size))
        overlap = len(cs & covered)
        if i in chosen:
            if overlap > a * len(cs):
                return False
            covered |= cs
        elif overlap <= a * len(cs):
            return False
    return True
