# # Weight constants
#
# A_p, A_inf and doubling constants for a few gallery weights, showing how
# a weight that vanishes faster under refinement loses the A_inf property.

# +
import numpy as np

from maxop import Basis, Domain, gallery
from maxop.weights import ainfty_constant, ap_constant, condition_a_estimate, doubling_constant

for N in (16, 64, 256):
    dom = Domain((N,), h=1 / N)
    b = Basis("dyadic", dom)
    rows = {
        "power a=0.5": gallery.power(dom, 0.5),
        "power a=-0.5": gallery.power(dom, -0.5),
        "step 1/8": gallery.step(dom, 1, 8),
        "non-ainfty": gallery.non_ainfty(dom),
    }
    for name, w in rows.items():
        print(f"N={N:4d} {name:13s} A2={ap_constant(w, b, 2).value:9.3f}"
              f"  Ainf={ainfty_constant(w, b).value:8.3f}  doubling={doubling_constant(w).value:7.3f}")

# -
# condition A: sampled at N=64, exhaustive at N=16
w = gallery.power(Domain((64,), h=1 / 64), 1.0)
print("sampled c(1/2):", condition_a_estimate(w, Basis("cubes", w.domain), 0.5, trials=300, rng=1).value)
rep = condition_a_estimate(np.ones(16), Basis("dyadic", Domain((16,))), 0.5, exhaustive=True)
print("exhaustive c(1/2), Lebesgue:", rep.value, "on", rep.witness.mask.astype(int))
