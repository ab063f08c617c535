"""Gr_2(R^4) as Ein^{2,2}: Plücker coordinates, the induced group map and B_{2,2} domains."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .domains import DomainOracle
from .dynamics import GroupElement
from .einstein import EinPoint, canonical
from .forms import FormSpace, GeometryError, Signature, inertia

PAIRS = list(combinations(range(4), 2))  # 12, 13, 14, 23, 24, 34
LABELS = [f"e{i + 1}{j + 1}" for i, j in PAIRS]


@dataclass(eq=False)
class Plane2:
    basis: np.ndarray  # 2 x 4 rows

    def __post_init__(self):
        B = np.asarray(self.basis, float)
        if B.shape != (2, 4):
            raise GeometryError("a plane needs two vectors of length 4")
        s = np.linalg.svd(B, compute_uv=False)
        if s[1] <= 1e-10 * s[0]:
            raise GeometryError("plane basis is rank deficient")
        self.basis = B

    def orthonormal(self):
        return np.linalg.qr(self.basis.T)[0].T

    def transverse(self, other: "Plane2", tol=1e-10):
        """V ∩ W = {0}: the stacked orthonormal bases have rank 4."""
        s = np.linalg.svd(np.vstack([self.orthonormal(), other.orthonormal()]), compute_uv=False)
        return bool(s[-1] > tol)


def _omega_gram():
    # x ∧ y = (x12 y34 - x13 y24 + x14 y23 + x23 y14 - x24 y13 + x34 y12) e1∧e2∧e3∧e4
    G = np.zeros((6, 6))
    for (a, b), s in (((0, 5), 1.0), ((1, 4), -1.0), ((2, 3), 1.0)):
        G[a, b] = G[b, a] = s
    return G


def wedge_space(tol=1e-9) -> FormSpace:
    """Λ²R^4 with ω(x, y) = x ∧ y / (e1∧e2∧e3∧e4), in the basis e12, e13, e14, e23, e24, e34."""
    G = _omega_gram()
    ine = inertia(G)
    return FormSpace(G, Signature(ine.p, ine.q), tol, "wedge")


WedgeSpace = wedge_space


def wedge(u, v):
    """Coordinates of u ∧ v (row-wise)."""
    u, v = np.asarray(u, float), np.asarray(v, float)
    return np.stack([u[..., i] * v[..., j] - u[..., j] * v[..., i] for i, j in PAIRS], axis=-1)


def plucker(v: Plane2, space: FormSpace | None = None) -> EinPoint:
    if not isinstance(v, Plane2):
        v = Plane2(v)
    space = space or wedge_space()
    B = v.orthonormal()
    return EinPoint(space, wedge(B[0], B[1]))


def plucker_lifts(bases):
    """Unnormalized wedge lifts for a stack of (2, 4) bases."""
    B = np.asarray(bases, float)
    return wedge(B[..., 0, :], B[..., 1, :])


def skew_of(x):
    """The 4x4 skew matrix with entries x_ij above the diagonal."""
    x = np.asarray(x, float)
    X = np.zeros(x.shape[:-1] + (4, 4))
    for k, (i, j) in enumerate(PAIRS):
        X[..., i, j] = x[..., k]
        X[..., j, i] = -x[..., k]
    return X


def plane_of(x):
    """Orthonormal (2, 4) basis of the plane of a decomposable wedge (the range of its skew matrix)."""
    u, s, _ = np.linalg.svd(skew_of(x))
    return np.swapaxes(u[..., :, :2], -1, -2)


def second_compound(g):
    g = np.asarray(g, float)
    C = np.empty((6, 6))
    for r, (i, j) in enumerate(PAIRS):
        for c, (k, l) in enumerate(PAIRS):
            C[r, c] = g[i, k] * g[j, l] - g[i, l] * g[j, k]
    return C


def tau_matrix(g):
    """Second compound of g scaled by |det g|^{-1/2}; preserves ω up to the sign of det g."""
    g = np.asarray(g, float)
    if g.shape != (4, 4):
        raise GeometryError("expected a 4x4 matrix")
    d = np.linalg.det(g)
    s = np.linalg.svd(g, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise GeometryError("singular matrix")
    return second_compound(g) / np.sqrt(abs(d)), float(np.sign(d))


def tau(g, space: FormSpace | None = None) -> GroupElement:
    """The induced ω-isometry of Λ²R^4.  Orientation-reversing g send ω to -ω and are
    rejected here; use tau_matrix for them."""
    M, sgn = tau_matrix(g)
    if sgn < 0:
        raise GeometryError("det g < 0: the induced map sends ω to -ω")
    return GroupElement(M, space or wedge_space(), tol=1e-9)


def transversality_tests(planes, w, tol=1e-10):
    """(rank-4 test, ω test) for each plane against w."""
    w = w if isinstance(w, Plane2) else Plane2(w)
    sp = wedge_space()
    W = w.orthonormal()
    xw = wedge(W[0], W[1])
    rank, om = [], []
    for v in planes:
        v = v if isinstance(v, Plane2) else Plane2(v)
        rank.append(v.transverse(w, tol))
        B = v.orthonormal()
        om.append(abs(float(sp.b(wedge(B[0], B[1]), xw))) > tol)
    return np.array(rank, bool), np.array(om, bool)


def gr2_proper_correspondence(planes, w, tol=1e-10) -> bool:
    """True when V ∩ W = {0} and ω(ι(V), ι(W)) ≠ 0 agree for every plane V."""
    rank, om = transversality_tests(planes, w, tol)
    return bool(np.all(rank == om))


def _beta_gram(beta):
    G = beta.gram if isinstance(beta, FormSpace) else np.asarray(beta, float)
    ine = inertia(G)
    if (ine.p, ine.q, ine.degeneracy) != (2, 2, 0):
        raise GeometryError("beta must have signature (2,2)")
    return G


def b22_member(beta, v) -> bool:
    """β restricted to V is positive definite (both leading minors of the 2x2 Gram > 0)."""
    B = v.basis if isinstance(v, Plane2) else np.asarray(v, float)
    M = B @ _beta_gram(beta) @ B.T
    return bool(M[0, 0] > 0 and np.linalg.det(M) > 0)


def b22_members(beta, bases):
    B = np.asarray(bases, float)
    M = B @ _beta_gram(beta) @ np.swapaxes(B, -1, -2)
    return (M[..., 0, 0] > 0) & (M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] ** 2 > 0)


def _beta_frame(G):
    """Columns f1, f2 (β = -1) and f3, f4 (β = +1)."""
    ev, vec = np.linalg.eigh(G)
    return vec / np.sqrt(np.abs(ev))


def b22_sample(beta, n, rng):
    """Planes graph(K) over the positive part, ||K|| < 1, as (n, 2, 4) bases."""
    F = _beta_frame(_beta_gram(beta))
    K = rng.standard_normal((n, 2, 2))
    nrm = np.linalg.norm(K, 2, axis=(1, 2))
    K *= (rng.uniform(0, 1, n) ** 0.5 / nrm)[:, None, None]
    coords = np.concatenate([K, np.broadcast_to(np.eye(2), (n, 2, 2))], axis=2)
    return coords @ F.T


def b22_oracle(beta=None) -> DomainOracle:
    """ι(B_{2,2}(β)) as a domain of Ein(Λ²R^4, ω)."""
    beta = np.diag([-1.0, -1.0, 1.0, 1.0]) if beta is None else beta
    G = _beta_gram(beta)
    sp = wedge_space()
    F = _beta_frame(G)
    base = wedge(F[:, 2], F[:, 3])

    def member(L):
        return b22_members(G, plane_of(L))

    def sampler(n, rng):
        return canonical(plucker_lifts(b22_sample(G, n, rng)))

    return DomainOracle(sp, member, base, "b22", sampler=sampler,
                        spec={"beta": np.asarray(G).tolist()})


def random_planes(n, rng):
    return rng.standard_normal((n, 2, 4))


def incident_pairs(n, rng):
    """n pairs of planes sharing a line (never transverse)."""
    shared = rng.standard_normal((n, 4))
    V = np.stack([shared, rng.standard_normal((n, 4))], axis=1)
    W = np.stack([shared, rng.standard_normal((n, 4))], axis=1)
    mix = rng.standard_normal((n, 2, 2))
    return mix @ V, W


class ProperResult(NamedTuple):
    found: bool
    witness: np.ndarray | None  # plane basis (Gr side) or wedge lift (Ein side)
    margin: float


def family_proper(bases, rng=None, candidates=2048, gap=0.02):
    """Search random planes W with V ∩ W = {0} for the whole family, scored by the
    smallest singular value of the stacked bases."""
    rng = rng if rng is not None else np.random.default_rng(0)
    V = np.linalg.qr(np.swapaxes(np.asarray(bases, float), -1, -2))[0]
    W = np.linalg.qr(np.swapaxes(random_planes(candidates, rng), -1, -2))[0]
    best, arg = -1.0, None
    for k in range(candidates):
        stack = np.concatenate([V, np.broadcast_to(W[k], V.shape)], axis=2)
        m = np.linalg.svd(stack, compute_uv=False)[:, -1].min()
        if m > best:
            best, arg = m, W[k].T
    return ProperResult(bool(best > gap), arg, float(best))


def image_proper(bases, rng=None, candidates=2048, gap=0.02):
    """Search points of Ein(Λ²R^4) whose lightcone misses the Plücker image, scored by
    min |ω| on unit lifts."""
    from .einstein import random_points

    rng = rng if rng is not None else np.random.default_rng(0)
    sp = wedge_space()
    L = canonical(plucker_lifts(bases))
    C = random_points(sp, candidates, rng)
    margin = np.abs(C @ sp.gram @ L.T).min(axis=1)
    k = int(np.argmax(margin))
    return ProperResult(bool(margin[k] > gap), C[k], float(margin[k]))


def read_planes_csv(path):
    """Planes stored as consecutive pairs of rows with 4 numbers each."""
    with open(path, newline="") as fh:
        rows = [[float(t) for t in r] for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if len(rows) % 2 or any(len(r) != 4 for r in rows):
        raise GeometryError("plane CSV needs an even number of rows of 4 numbers")
    return [Plane2(np.array(rows[i:i + 2])) for i in range(0, len(rows), 2)]


def write_planes_csv(planes, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for v in planes:
            B = v.basis if isinstance(v, Plane2) else np.asarray(v)
            for r in B:
                w.writerow([repr(float(t)) for t in r])
