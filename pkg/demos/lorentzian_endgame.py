"""Lorentzian charts: causal relations, convexity, and rebuilding a diamond from extremal points."""
import numpy as np

from einkit.causal import (
    CausalPoint,
    causal_convexity_check,
    causal_diamond,
    chronological_relation,
    lorentzian_chart,
    rebuild_diamond,
)

ch = lorentzian_chart(3)
pt = lambda *c: CausalPoint(np.r_[c, np.zeros(3 - len(c))], ch)
o = pt(0)
for v in [(1, 0), (-1, 0.2), (1, 1), (0.1, 1)]:
    print(v, chronological_relation(o, pt(*v)))

rng = np.random.default_rng(2)
D = causal_diamond(pt(-1), pt(1, 0.2, 0.1))
print("causally convex:", causal_convexity_check(D, budget=256, rng=rng).ok)
r = rebuild_diamond(D, pt(0.1, 0.05), rng=rng)
print("past vertex", np.round(r.past.point.m, 6), r.past_class)
print("future vertex", np.round(r.future.point.m, 6), r.future_class)
