"""Distance on a random diamond: closed form squeezed between a chain and a cross-ratio bound."""
import numpy as np

from einkit.domains import diamond_K_samples, diamond_midpoint, diamond_oracle, diamond_sample, standard_diamond
from einkit.dynamics import random_element
from einkit.markowitz import distance_report, factor_distances

rng = np.random.default_rng(0)
spec = standard_diamond(2, 2)
spec = spec.transform(random_element(spec.space, rng, 0.5).mat)
dom = diamond_oracle(spec)

for x, y in zip(diamond_sample(spec, 5, rng), diamond_sample(spec, 5, rng)):
    K = diamond_K_samples(spec, 1000, rng, center=diamond_midpoint(spec, x, y))
    r = distance_report(dom, x, y, kset=K, spec=spec, rng=rng)
    d0, d1 = factor_distances(spec, x, y)
    print(f"factors {d0:.4f} {d1:.4f}  lower {r.lower:.6f}  exact {r.exact:.6f}  upper {r.upper:.6f}")
