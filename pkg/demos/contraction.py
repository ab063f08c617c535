"""Cartan projections of a divergent sequence and where it sends a compact set."""
import numpy as np

from einkit.dynamics import cartan_decompose, diagonal_element, is_contracting, transport_compact
from einkit.einstein import AffineChart
from einkit.forms import FormSpace

sp = FormSpace.ein(1, 2, "split")
seq = [diagonal_element(sp, [np.exp(k), 1.0]) for k in range(1, 26)]
c = cartan_decompose(seq[-1])
print("lambdas", c.lambdas, "reconstruction error", c.error)
r = is_contracting(seq)
print("contracting:", r.contracting, "final ratio", r.ratios[-1, 0])

rng = np.random.default_rng(4)
ch = AffineChart.standard(sp)
t = transport_compact(seq, ch.embed_lift(0.1 * rng.uniform(-1, 1, (50, ch.dim))), eps=1e-6)
print("converged:", t.converged, "limit", np.round(t.limit, 6))
