"""Planes in R^4 as null points of the wedge form, and the B22 domain."""
import numpy as np

from einkit.exceptional import (
    b22_oracle,
    family_proper,
    gr2_proper_correspondence,
    transversality_tests,
    incident_pairs,
    plucker_lifts,
    random_planes,
    tau_matrix,
    wedge_space,
)
from einkit.forms import inertia

rng = np.random.default_rng(3)
sp = wedge_space()
P = random_planes(1000, rng)
X = plucker_lifts(P)
print("wedge form inertia", inertia(sp.gram)[:2], "max |q|", np.abs(np.einsum("ij,jk,ik->i", X, sp.gram, X)).max())

g = rng.normal(size=(4, 4))
M, sgn = tau_matrix(g)
print("det sign", sgn, "compound preserves form up to sign:", np.allclose(M.T @ sp.gram @ M, sgn * sp.gram))

W = random_planes(1, rng)[0]
rank, om = transversality_tests(P, W)
print("random planes transverse to W:", rank.mean(), "rank and wedge tests agree:", gr2_proper_correspondence(P, W))
V, Wi = incident_pairs(1, rng)
print("incident pair (rank test, wedge test):", *(t[0] for t in transversality_tests(V, Wi[0])))

dom = b22_oracle()
S = dom.sampler(500, rng)
print("B22 samples inside:", dom.member(S).all())
