"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line shown in the terminal summary.  The
experiment runs are cached so the determinism check can re-run each one
with a different thread count and compare CSV bytes.
"""
import functools
import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE
from maxop.basis import Basis, BasisSet
from maxop.experiments import EXPERIMENTS, run_experiment
from maxop.grid import Domain
from maxop.operators import ARITHMETIC, GEOMETRIC, HARMONIC, MeanKind, maximal
from maxop.twoweight import select_sparse_subfamily
from maxop.weights import condition_a_estimate

SEED = 20240611


def record(key, ok, text):
    ACCEPTANCE[key] = (bool(ok), text)
    assert ok, text


@functools.lru_cache(maxsize=None)
def _run(name, threads):
    return run_experiment(name, {"seed": SEED}, threads=threads)


def _failed(res):
    return sorted(k for k, v in res.verdicts.items() if not v)


def test_1_pointwise_ordering():
    t0 = time.perf_counter()
    res = run_experiment("ordering", {"seed": SEED, "ladder": [256], "fields": 100, "rect_side": 32},
                         threads=1)
    dt = time.perf_counter() - t0
    worst = max(max(res.values(f"{k}.harmonic_over_geometric") + res.values(f"{k}.geometric_over_arithmetic"))
                for k in ("dyadic", "cubes", "rects"))
    fields = res.values("dyadic.fields") + res.values("cubes.fields") + res.values("rects.fields")
    ok = res.passed and fields == [100, 100, 100] and dt < 60
    record(1, ok, f"ordering M_-1 <= M_0 <= M: 3 bases x 100 fields, worst relative excess "
                  f"{worst:.2e} (tol 1e-12), {dt:.2f}s (< 60s)")


KINDS = [ARITHMETIC, HARMONIC, GEOMETRIC, MeanKind.power(-0.5), MeanKind.power(-1e-3),
         MeanKind.power(1e-3), MeanKind.power(2.0)]


def test_2_fast_equals_brute():
    rng = np.random.default_rng(SEED)
    shapes = [(2 ** k,) for k in range(9)] + [(2, 2), (4, 4), (8, 8), (16, 16), (4, 16), (2, 2, 2), (4, 4, 4)]
    worst, cases = 0.0, 0
    for shape in shapes:
        b = Basis("dyadic", Domain(shape))
        f = rng.lognormal(0.0, 2.0, size=shape)
        f[rng.random(shape) < 0.1] = 0.0
        sigma = rng.lognormal(size=shape)
        sigma[rng.random(shape) < 0.1] = 0.0
        small = np.prod(shape) <= 16
        for kind in KINDS:
            for s in (None, sigma):
                fast = maximal(kind, b, f, s).values
                refs = [maximal(kind, b, f, s, method="brute").values]
                if small:
                    refs.append(oracles.maximal(kind.t, "dyadic", f, s))
                for ref in refs:
                    both = (fast == ref)
                    rel = np.abs(fast - ref) / np.maximum(np.abs(ref), 1e-300)
                    worst = max(worst, float(np.max(np.where(both, 0.0, rel))))
                    cases += 1
    record(2, worst <= 1e-9, f"fast dyadic = brute force (library enumeration and mpmath oracle): "
                             f"{cases} comparisons, 1-D N<=256 and 2-D/3-D up to 16x16, "
                             f"{len(KINDS)} mean kinds, weighted+unweighted, worst rel {worst:.2e} (tol 1e-9)")


def test_3_limit_geometric():
    t0 = time.perf_counter()
    res = _run("limit-geometric", 1)
    dt = time.perf_counter() - t0
    gaps = [res.values(f"sup_gap.r={r}")[0] for r in ("1", "0.10000000000000001", "0.001")]
    ok = res.passed and res.values("monotone_fields") == [20] and dt < 30
    record(3, ok, f"M_-r -> M_0 on 20 fields N=256: monotone, sup gap at r=1e-3 = {gaps[-1]:.2e} "
                  f"(<= 1e-2(1+max f) per field), {dt:.2f}s (< 30s)")


def test_4_weighted_geometric_bound():
    res = _run("weighted-geometric-bound", 1)
    parts, ok = [], res.passed
    for p in ("0.5", "1", "2"):
        worst = res.values(f"max_norm_ratio.p={p}")[0]
        n = res.values(f"candidates.p={p}")[0]
        ok &= n >= 50 and worst <= math.exp(1 / float(p)) + 1e-6
        parts.append(f"p={p}: {worst:.4f} <= {math.exp(1 / float(p)):.4f} ({int(n)} candidates)")
    record(4, ok, "weighted M_{r,sigma}, r=1e-3, N=256: " + "; ".join(parts))


def test_5_dyadic_equivalence():
    res = _run("dyadic-equivalence", 1)
    pairs = {q.split(".")[0] for _, _, q, _ in res.rows if q.endswith(".joint")}
    growth = res.values("designed-non-ainfty.strong_growth")[0]
    joints = res.values("designed-non-ainfty.joint")
    ok = res.passed and len(pairs) == 10
    record(5, ok, f"four-way dyadic equivalence on {len(pairs)} pairs, N=64..512: testing <= strong, "
                  f"joint <= weak, all finite on gallery; designed pair joint {joints[0]:.3g} -> "
                  f"{joints[-1]:.3g}, strong grows {growth:.2f}x (>= 4); failed: {_failed(res) or 'none'}")


def test_6_bump_sufficiency():
    res = _run("bump-sufficiency", 1)
    drifts = {q[:-6]: v for _, _, q, v in res.rows if q.endswith(".drift")}
    control = drifts.pop("control-non-ainfty")
    ok = res.passed and len(drifts) == 5
    record(6, ok, f"bump r=1/2 pairs: max drift {max(drifts.values()):.3f} (<= 2) over "
                  f"{len(drifts)} pairs, control drift {control:.2f} (> 4); failed: {_failed(res) or 'none'}")


def _random_sets(rng):
    dim = int(rng.integers(1, 3))
    n = int(rng.integers(1, 20))
    out = []
    for _ in range(n):
        if dim == 1:
            out.append(BasisSet((int(rng.integers(0, 16)),), (int(rng.integers(1, 9)),)))
        else:
            lo = tuple(int(x) for x in rng.integers(0, 8, size=2))
            out.append(BasisSet(lo, tuple(int(x) for x in rng.integers(1, 5, size=2))))
    return out


def test_7_selection_lemma():
    rng = np.random.default_rng(SEED)
    bad = 0
    for i in range(1000):
        sets = _random_sets(rng)
        alpha = (0.25, 0.5, 0.75)[i % 3]
        res = select_sparse_subfamily(sets, alpha)
        cert_ok = all(c["overlap"] <= alpha * c["measure"] for c in res.certificates)
        bad += not (cert_ok and oracles.selection_is_valid(sets, alpha, res.selected))
    record(7, bad == 0, f"sparse selection property on 1000 random set lists, alpha in "
                        f"{{0.25, 0.5, 0.75}}: {bad} violations")


def test_8_condition_a_exhaustive():
    t0 = time.perf_counter()
    vals = {}
    for alpha in (0.25, 0.5):
        vals[alpha] = condition_a_estimate(np.ones(16), Basis("dyadic", Domain((16,))), alpha,
                                           exhaustive=True).value
    dt = time.perf_counter() - t0
    ok = all(v <= 1 / a for a, v in vals.items()) and dt < 120
    record(8, ok, f"condition A, w=1, dyadic N=16, all 2^16 subsets: c(0.25)={vals[0.25]:.4f} <= 4, "
                  f"c(0.5)={vals[0.5]:.4f} <= 2, {dt:.2f}s (< 120s)")


def test_9_determinism():
    same = {}
    for name in sorted(EXPERIMENTS):
        cfg = {"seed": SEED}
        if name == "ordering":
            cfg.update(fields=10)
        a = _run(name, 1) if name != "ordering" else run_experiment(name, cfg, threads=1)
        b = run_experiment(name, cfg, threads=4)
        same[name] = a.to_csv() == b.to_csv()
    diff = sorted(k for k, v in same.items() if not v)
    record(9, not diff, f"CSV byte-identical for all {len(same)} experiments, 1 vs 4 threads; "
                        f"differing: {diff or 'none'}")


@pytest.mark.parametrize("name", ["geometric-dyadic", "one-weight-ainfty"])
def test_other_experiment_verdicts(name):
    res = _run(name, 1)
    ACCEPTANCE[name] = (res.passed, f"experiment {name} verdicts; failed: {_failed(res) or 'none'}")
    assert res.passed
