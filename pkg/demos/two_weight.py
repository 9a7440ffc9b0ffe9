# # Two-weight quantities for the harmonic maximal operator
#
# The joint constant, the testing constant and empirical weak/strong norm
# ratios for a tame pair and for a pair whose sigma degenerates with N.

# +
import numpy as np

from maxop import HARMONIC, Basis, Domain, gallery
from maxop.twoweight import (estimate_operator_norm, select_sparse_subfamily,
                             testing_constant_harmonic)
from maxop.weights import joint_harmonic_constant

p = 1.0
for N in (64, 128, 256):
    dom = Domain((N,), h=1 / N)
    b = Basis("dyadic", dom)
    u = gallery.constant(dom)
    for name, s in (("step", gallery.step(dom, 1, 4)), ("non-ainfty", gallery.non_ainfty(dom))):
        joint = joint_harmonic_constant(u, s, b, p).value
        test = testing_constant_harmonic(u, s, b, p, max_single=None).constant
        est = estimate_operator_norm(HARMONIC, u, s, b, p, trials=16, rng=0, sweeps=1, greedy_cells=64)
        print(f"N={N:4d} {name:10s} joint={joint:10.2f} testing={test:8.2f}"
              f"  weak>={est.weak_ratio:10.2f} strong>={est.strong_ratio:10.2f}")

# -
# greedy sparse selection from a family of overlapping intervals
rng = np.random.default_rng(3)
dom = Domain((64,))
sets = [Basis("cubes", dom).set_at(int(k)) for k in rng.integers(0, len(Basis("cubes", dom)), 12)]
res = select_sparse_subfamily(sets, 0.5)
for c in res.certificates:
    print(sets[c["index"]], "overlap", c["overlap"], "of", c["measure"])
