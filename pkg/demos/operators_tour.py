# # Maximal operators on a grid
#
# Arithmetic, geometric and harmonic maximal functions of one field, on
# three bases, plus the slow approach of M_{-r} to M_0 as r shrinks.

# +
import numpy as np

from maxop import ARITHMETIC, GEOMETRIC, HARMONIC, Basis, Domain, MeanKind, maximal
from maxop.operators import limit_harmonic_to_geometric

rng = np.random.default_rng(0)
dom = Domain((64,), h=1 / 64)
f = rng.lognormal(0.0, 1.5, size=64)
f[::9] = 0.0  # a few zeros: harmonic and geometric means drop to 0 on sets holding them

# -
for kind in ("dyadic", "cubes", "rects"):
    b = Basis(kind, dom)
    h, g, a = (maximal(k, b, f).values for k in (HARMONIC, GEOMETRIC, ARITHMETIC))
    print(f"{kind:7s} sets={len(b):5d}  mean M_-1={h.mean():7.3f}  M_0={g.mean():7.3f}  M={a.mean():7.3f}"
          f"  ordered={bool(np.all(h <= g) and np.all(g <= a))}")

# +
# witnesses: the box realising the supremum at a cell
out = maximal(ARITHMETIC, Basis("cubes", dom), f, witness=True)
print("cell 10 value", out.values[10], "attained on", out.witness[10])

# -
rep = limit_harmonic_to_geometric(Basis("dyadic", dom), rng.lognormal(size=64), [1, 0.1, 0.01, 0.001])
print(rep.to_csv())

# power means in between
for t in (-2, -1, -0.5, 0.5, 1, 2):
    print(f"t={t:5}", round(float(maximal(MeanKind(t), Basis("dyadic", dom), f).values.mean()), 4))
