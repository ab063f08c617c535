"""Projective model of Ein^{p,q}: points, photons, charts and cross-ratios."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .forms import FormSpace, GeometryError, Signature, b_complement


def canonical(v):
    """Unit Euclidean norm, first nonzero coordinate positive. Works row-wise."""
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise GeometryError("zero vector has no projective class")
    v = v / nrm
    idx = np.argmax(np.abs(v) > 1e-12, axis=-1)
    lead = np.take_along_axis(v, idx[..., None], axis=-1)
    return v * np.where(lead < 0, -1.0, 1.0)


def lift_of(x):
    return x.lift if isinstance(x, EinPoint) else np.asarray(x, dtype=float)


def same_point(u, v, tol=1e-9):
    u, v = canonical(lift_of(u)), canonical(lift_of(v))
    return abs(1 - abs(float(u @ v))) < tol


def round_sig(x, digits=12):
    """Round floats to `digits` significant digits (recursively for lists)."""
    if isinstance(x, (list, tuple)):
        return [round_sig(y, digits) for y in x]
    if isinstance(x, np.ndarray):
        return round_sig(x.tolist(), digits)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0 or not np.isfinite(x):
            return x
        return float(f"{x:.{digits - 1}e}")
    return x


class EinPoint:
    """A null line P(v) with its canonical unit lift."""

    __slots__ = ("lift", "space")

    def __init__(self, space: FormSpace, lift, check=True):
        lift = canonical(lift)
        if check and not space.is_null(lift, max(space.tol, 1e-9)):
            raise GeometryError("lift is not isotropic")
        self.space = space
        self.lift = lift

    def __eq__(self, other):
        return isinstance(other, EinPoint) and same_point(self.lift, other.lift, self.space.tol)

    def __hash__(self):
        return hash(tuple(np.round(self.lift, 8)))

    def __repr__(self):
        return f"EinPoint({np.array2string(self.lift, precision=4)})"

    def to_json(self):
        return {"sig": list(self.space.sig), "lift": round_sig(self.lift)}

    @classmethod
    def from_json(cls, space, data):
        if tuple(data["sig"]) != tuple(space.sig):
            raise GeometryError("signature mismatch")
        return cls(space, data["lift"])


@dataclass(frozen=True, eq=False)
class Photon:
    space: FormSpace
    span: np.ndarray  # 2 x n

    def __post_init__(self):
        S = np.asarray(self.span, dtype=float)
        if S.shape != (2, self.space.dim):
            raise GeometryError("photon needs two spanning vectors")
        if np.linalg.matrix_rank(S, tol=1e-10 * np.abs(S).max()) < 2:
            raise GeometryError("spanning vectors are dependent")
        M = S @ self.space.gram @ S.T
        scale = self.space.scale * (S * S).sum(axis=1).max()
        if np.abs(M).max() > 1e-8 * scale:
            raise GeometryError("plane is not totally isotropic")
        object.__setattr__(self, "span", S)

    def point(self, s):
        """P(span[0] + s span[1]); s=np.inf gives span[1]."""
        if np.isinf(s):
            return EinPoint(self.space, self.span[1], check=False)
        return EinPoint(self.space, self.span[0] + s * self.span[1], check=False)

    def contains(self, x, tol=1e-9):
        v = canonical(lift_of(x))
        Q = np.linalg.qr(self.span.T)[0]
        return np.linalg.norm(v - Q @ (Q.T @ v)) < tol


def on_common_photon(x, y, tol=None):
    """True iff y lies in the lightcone of x.  x == y counts as True."""
    space = x.space if isinstance(x, EinPoint) else None
    u, v = canonical(lift_of(x)), canonical(lift_of(y))
    if space is None:
        raise GeometryError("on_common_photon needs EinPoint arguments")
    tol = space.tol if tol is None else tol
    return bool(abs(space.b(u, v)) <= tol * space.scale)


def photon_through(x: EinPoint, y: EinPoint):
    if x == y:
        raise GeometryError("points coincide")
    if not on_common_photon(x, y):
        raise GeometryError("points are not on a common photon")
    return Photon(x.space, np.stack([x.lift, y.lift]))


def photon_param(ph: Photon, anchor: EinPoint, direction: EinPoint):
    """s -> P(anchor + s*direction) along the photon."""
    if anchor == direction:
        raise GeometryError("anchor and direction coincide")
    for pt in (anchor, direction):
        if not ph.contains(pt, 1e-7):
            raise GeometryError("point not on photon")
    a, d = anchor.lift, direction.lift

    def alpha(s):
        if np.isinf(s):
            return EinPoint(ph.space, d, check=False)
        return EinPoint(ph.space, a + s * d, check=False)

    return alpha


def cross_ratio_modulus(xi1, x, y, xi2, space: FormSpace | None = None, tol=1e-10):
    """|b(v1,u) b(v2,v) / (b(v2,u) b(v1,v))| for lifts v1,u,v,v2."""
    if space is None:
        space = next(p.space for p in (xi1, x, y, xi2) if isinstance(p, EinPoint))
    v1, u, v, v2 = (canonical(lift_of(z)) for z in (xi1, x, y, xi2))
    num1, num2 = space.b(v1, u), space.b(v2, v)
    den1, den2 = space.b(v2, u), space.b(v1, v)
    if min(abs(num1), abs(num2), abs(den1), abs(den2)) <= tol * space.scale:
        raise GeometryError("cross-ratio undefined: incident points")
    return float(abs(num1 * num2 / (den1 * den2)))


class AffineChart:
    """Stereographic chart Ein minus C(xi0) -> R^{p,q}.

    embed(m) = xi_inf + sum m_i c_i - q(m)/2 xi0 with b(xi0, xi_inf) = 1 and the
    c_i b-orthonormal (timelike ones first), so chart coordinates carry the form
    diag(-I_p, I_q).
    """

    def __init__(self, space: FormSpace, xi0, xi_inf, comp_basis=None):
        xi0 = np.asarray(lift_of(xi0), dtype=float)
        xi_inf = np.asarray(lift_of(xi_inf), dtype=float)
        for w in (xi0, xi_inf):
            if not space.is_null(w, 1e-8):
                raise GeometryError("chart points must be isotropic")
        pair = space.b(xi0, xi_inf)
        if abs(pair) < 1e-12:
            raise GeometryError("xi_inf lies on the lightcone of xi0")
        xi_inf = xi_inf / pair
        if comp_basis is None:
            comp_basis = _orthonormal_rows(space, b_complement(space, np.stack([xi0, xi_inf])))
        comp_basis = np.atleast_2d(np.asarray(comp_basis, dtype=float))
        self.space = space
        self.xi0 = xi0
        self.xi_inf = xi_inf
        self.comp = comp_basis
        G = comp_basis @ space.gram @ comp_basis.T
        if np.abs(comp_basis @ space.gram @ np.stack([xi0, xi_inf]).T).max() > 1e-8:
            raise GeometryError("comp_basis must be orthogonal to xi0 and xi_inf")
        self.sig = space.ein_sig
        self.metric = np.diag([-1.0] * self.sig.p + [1.0] * self.sig.q)
        if not np.allclose(G, self.metric, atol=1e-8):
            raise GeometryError("comp_basis must be b-orthonormal with timelike vectors first")
        # rows: xi0, xi_inf, comp...; used by project
        self._dual = np.linalg.inv(np.vstack([xi0, xi_inf, comp_basis]) @ space.gram)

    @classmethod
    def standard(cls, space: FormSpace):
        """Chart built from the b-orthonormal frame: xi0=(t0+s0)/2, xi_inf=s0-t0."""
        F = space.frame().T
        p1 = space.sig.p
        t0, s0 = F[0], F[p1]
        comp = np.vstack([F[1:p1], F[p1 + 1:]])
        return cls(space, (t0 + s0) / 2, s0 - t0, comp)

    @property
    def dim(self):
        return self.comp.shape[0]

    def qm(self, m):
        m = np.asarray(m, dtype=float)
        return np.einsum("...i,ij,...j->...", m, self.metric, m)

    def bm(self, m1, m2):
        return np.einsum("...i,ij,...j->...", np.asarray(m1, float), self.metric, np.asarray(m2, float))

    def embed_lift(self, m):
        """Unnormalized lift with b(lift, xi0) = 1; vectorized over rows."""
        m = np.asarray(m, dtype=float)
        if m.shape[-1] != self.dim:
            raise GeometryError(f"chart coordinates have length {self.dim}")
        return self.xi_inf + m @ self.comp - 0.5 * self.qm(m)[..., None] * self.xi0

    def normalize(self, lift):
        """Rescale lifts so that b(lift, xi0) = 1 (NaN rows on C(xi0))."""
        lift = np.asarray(lift_of(lift), dtype=float)
        lam = self.space.b(lift, self.xi0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return lift / lam[..., None] if lift.ndim > 1 else lift / lam

    def project_lift(self, lift, tol=1e-12):
        """Chart coordinates of lifts; rows on C(xi0) come back as NaN."""
        lift = np.asarray(lift, dtype=float)
        coef = lift @ self.space.gram @ self._dual  # coordinates in (xi0, xi_inf, comp)
        # coef[...,1] is b(lift, xi0)
        lam = coef[..., 1]
        scale = np.linalg.norm(lift, axis=-1)
        bad = np.abs(lam) <= tol * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            m = coef[..., 2:] / lam[..., None]
        m[bad] = np.nan
        return m

    def to_json(self):
        return {
            "sig": list(self.space.sig),
            "xi0": round_sig(self.xi0),
            "xi_inf": round_sig(self.xi_inf),
            "comp_basis": round_sig(self.comp),
        }

    @classmethod
    def from_json(cls, space, data):
        return cls(space, data["xi0"], data["xi_inf"], data["comp_basis"])


def _orthonormal_rows(space, rows):
    """b-orthonormalize rows spanning a nondegenerate subspace, timelike first."""
    rows = np.atleast_2d(rows)
    M = rows @ space.gram @ rows.T
    ev, vec = np.linalg.eigh((M + M.T) / 2)
    if np.abs(ev).min() < 1e-12:
        raise GeometryError("subspace is degenerate")
    order = np.argsort(ev)
    ev, vec = ev[order], vec[:, order]
    return (vec / np.sqrt(np.abs(ev))).T @ rows


def chart_embed(chart: AffineChart, m):
    return EinPoint(chart.space, chart.embed_lift(m), check=False)


def chart_project(chart: AffineChart, x):
    m = chart.project_lift(lift_of(x)[None, :])[0]
    if np.any(np.isnan(m)):
        raise GeometryError("point at infinity for this chart")
    return m


def random_points(space: FormSpace, n, rng):
    """Points of Ein spread over the whole quadric (uniform on S^p x S^q cover)."""
    P, Q = space.sig
    u = rng.standard_normal((n, P))
    v = rng.standard_normal((n, Q))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return np.hstack([u, v]) @ space.frame().T


def null_directions(space: FormSpace, x, n, rng=None, sobol=True, seed=0):
    """Null vectors in x^perp, one per photon through P(x), transverse to x.

    Photons through x are parametrized by the null cone of x^perp / x, which has
    signature (p, q) for Ein^{p,q}.  We pick a complementary null vector y with
    b(x, y) = 1 and sample the null cone of {x, y}^perp.
    """
    x = np.asarray(x, dtype=float)
    W = _complement_frame(space, x)
    p, q = space.ein_sig
    if sobol:
        from scipy.stats import qmc

        z = qmc.Sobol(d=p + q, scramble=True, seed=seed).random(_pow2(n))[:n]
        from scipy.special import ndtri

        g = ndtri(np.clip(z, 1e-12, 1 - 1e-12))
    else:
        g = rng.standard_normal((n, p + q))
    a, c = g[:, :p], g[:, p:]
    if p:
        a /= np.linalg.norm(a, axis=1, keepdims=True)
    if q:
        c /= np.linalg.norm(c, axis=1, keepdims=True)
    return np.hstack([a, c]) @ W


def _pow2(n):
    k = 1
    while k < n:
        k *= 2
    return k


def _complement_frame(space, x):
    """b-orthonormal rows spanning {x, y}^perp for a null partner y of x."""
    F = space.frame().T
    # a partner: reflect x's timelike part
    P = space.sig.p
    coords = np.linalg.solve(space.frame(), x)
    yc = coords.copy()
    yc[:P] *= -1  # b(x, y) = -(-|t|^2) + |s|^2 > 0 for nonzero null x
    y = yc @ F
    y = y / space.b(x, y)
    return _orthonormal_rows(space, b_complement(space, np.stack([x, y])))
