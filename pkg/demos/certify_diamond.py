"""Recognise a hidden diamond from its membership oracle, and refuse a non-diamond."""
import numpy as np

from einkit.causal import CausalPoint, causal_diamond, lorentzian_chart, truncated_causal_diamond
from einkit.domains import diamond_oracle, standard_diamond, union_domain
from einkit.dynamics import random_element
from einkit.rigidity import certify_diamond, subspace_angle

rng = np.random.default_rng(1)
spec = standard_diamond(2, 2)
spec = spec.transform(random_element(spec.space, rng, 0.7).mat)
rep = certify_diamond(diamond_oracle(spec), rng=rng, cloud_size=4000)
print("hidden diamond:", rep.verdict, rep.signatures)
print("  angle to true V0", subspace_angle(rep.diamond.V0, spec.V0))

ch = lorentzian_chart(3)
pt = lambda *c: CausalPoint(np.r_[c, np.zeros(3 - len(c))], ch)
T = truncated_causal_diamond(pt(0), pt(2), pt(1.2, 0.1))
print("truncated diamond:", certify_diamond(T, rng=rng, cloud_size=4000).verdict)
U = union_domain([causal_diamond(pt(-1), pt(1)), causal_diamond(pt(-0.5, 0.9), pt(0.5, 0.9))])
print("union of two diamonds:", certify_diamond(U, rng=rng, cloud_size=4000).verdict)
