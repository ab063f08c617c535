"""Domains of Ein^{p,q}: oracles, diamonds, norm balls, convexity and extremality tools."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import linprog

from .einstein import (
    _pow2,
    AffineChart,
    EinPoint,
    _complement_frame,
    canonical,
    lift_of,
    null_directions,
    random_points,
    round_sig,
)
from .forms import FormSpace, GeometryError, Signature, b_complement, signature_of_subspace


class DomainOracle:
    """Open domain given by a vectorized membership predicate on lifts.

    arc_solver(a, d) -> (lo, hi): for rows a (members) and null d orthogonal to a,
    the angles bounding the component of {phi : P(cos(phi) a + sin(phi) d) in the
    domain} that contains phi = 0.  Families with closed forms supply it; otherwise
    it is found by marching and bisection.
    """

    def __init__(self, space: FormSpace, member_fn: Callable, basepoint, family_tag="custom",
                 arc_solver=None, chart: AffineChart | None = None, radius=None,
                 k_sampler=None, support=None, spec=None, sampler=None, chain_seed=None,
                 diamond=None):
        self.space = space
        self._member = member_fn
        self.basepoint = canonical(lift_of(basepoint))
        self.family_tag = family_tag
        self.arc_solver = arc_solver
        self.chart = chart if chart is not None else default_chart(space, self.basepoint)
        self.radius = radius  # chart-norm bound of the domain, if known
        self.k_sampler = k_sampler
        self.support = support
        self.spec = spec or {}
        self.sampler = sampler
        self.chain_seed = chain_seed  # (x, y) -> interior waypoints of a known good chain
        self.diamond = diamond  # DiamondSpec when the domain is known to be a diamond
        if not self.member(self.basepoint):
            raise GeometryError("basepoint is not a member")

    def member(self, x):
        v = lift_of(x)
        single = v.ndim == 1
        out = np.asarray(self._member(np.atleast_2d(v)), dtype=bool)
        return bool(out[0]) if single else out

    def member_chart(self, m, chart=None):
        chart = chart or self.chart
        return self.member(chart.embed_lift(np.atleast_2d(m)))

    def photon_arc(self, a, d):
        a, d = np.atleast_2d(a), np.atleast_2d(d)
        if self.arc_solver is not None:
            return self.arc_solver(a, d)
        return generic_arc(self.member, a, d)

    def to_json(self):
        return {"family": self.family_tag, "sig": list(self.space.sig), **self.spec}


def default_chart(space, x):
    """Chart with xi_inf = x and xi0 its reflected null partner."""
    x = np.asarray(x, float)
    coords = np.linalg.solve(space.frame(), x)
    yc = coords.copy()
    yc[: space.sig.p] *= -1
    y = space.frame() @ yc
    return AffineChart(space, y, x)


def hyperplane_arc(W, member, a, d):
    """Arc for domains whose membership along a photon can only change where the
    photon crosses a hyperplane w^perp (w a row of W, given G-multiplied).

    The candidate zeros of phi -> b(cos phi a + sin phi d, w) split the photon
    into intervals; the arc runs through zeros until an interval midpoint fails."""
    A = a @ W.T  # (k, m)
    B = d @ W.T
    th = np.where(np.hypot(A, B) > 0, np.arctan2(B, A), np.nan)
    z = np.concatenate([th + np.pi / 2 + k * np.pi for k in (-3, -2, -1, 0, 1, 2)], axis=1)
    ok = member(a)
    lo = np.full(len(a), np.nan)
    hi = np.full(len(a), np.nan)
    for sign, out in ((1.0, hi), (-1.0, lo)):
        with np.errstate(invalid="ignore"):
            zz = np.where(sign * z > 1e-15, sign * z, np.inf)
        zz = np.minimum(np.sort(zz, axis=1), np.pi)
        zz = np.concatenate([zz, np.full((len(a), 1), np.pi)], axis=1)
        end = zz[:, 0].copy()
        alive = ok.copy()
        for j in range(zz.shape[1] - 1):
            nxt = zz[:, j + 1]
            step = alive & (nxt > zz[:, j])
            if not step.any():
                break
            mid = (zz[:, j] + nxt) / 2
            pts = np.cos(mid)[:, None] * a + np.sin(sign * mid)[:, None] * d
            inside = np.zeros(len(a), bool)
            inside[step] = member(pts[step])
            end = np.where(inside, nxt, end)
            alive = alive & (inside | (nxt <= zz[:, j]))
            alive &= zz[:, j] < np.pi
        out[:] = np.where(ok, sign * end, np.nan)
    return lo, hi


def generic_arc(member, a, d, steps=96, iters=55):
    """Component of the domain along P(cos t a + sin t d) around t=0, by march + bisection."""
    n = a.shape[0]
    lo = np.full(n, np.nan)
    hi = np.full(n, np.nan)
    ok = member(a)
    grid = np.linspace(0, np.pi, steps + 1)[1:]
    for sign, out in ((1.0, hi), (-1.0, lo)):
        inside = ok.copy()
        last_in = np.zeros(n)
        first_out = np.full(n, np.nan)
        for t in grid:
            pts = np.cos(t) * a + np.sin(sign * t) * d
            m = member(pts) & inside
            newly_out = inside & ~m
            first_out[newly_out] = t
            last_in[m] = t
            inside = m
            if not inside.any():
                break
        l, r = last_in.copy(), first_out.copy()
        todo = ~np.isnan(r)
        for _ in range(iters):
            if not todo.any():
                break
            mid = (l + r) / 2
            pts = np.cos(mid)[:, None] * a + np.sin(sign * mid)[:, None] * d
            m = member(pts)
            l = np.where(todo & m, mid, l)
            r = np.where(todo & ~m, mid, r)
        val = np.where(todo, (l + r) / 2, np.pi)  # never left: whole photon (minus a point)
        out[:] = np.where(ok, sign * val, np.nan)
    return lo, hi


# ---------------------------------------------------------------- sampling

def sample_members(dom: DomainOracle, n, rng, chart=None, radius=None, max_rounds=200):
    """n member lifts.  Uses the family sampler if any, else rejection in a chart box."""
    if dom.sampler is not None and chart is None:
        return dom.sampler(n, rng)
    chart = chart or dom.chart
    radius = radius or dom.radius
    out = []
    got = 0
    for _ in range(max_rounds):
        if radius is not None:
            m = rng.uniform(-radius, radius, size=(4 * n, chart.dim))
            L = chart.embed_lift(m)
        else:
            L = np.vstack([random_points(dom.space, 2 * n, rng),
                           chart.embed_lift(rng.standard_normal((2 * n, chart.dim)) * 2.0)])
        keep = L[dom.member(L)]
        out.append(keep)
        got += len(keep)
        if got >= n:
            break
    if got == 0:
        raise GeometryError("could not sample any member points")
    return np.vstack(out)[:n]


def boundary_points(dom: DomainOracle, n, rng, chart=None, radius=None, directions=None,
                    iters=60, grow=0):
    """Boundary points from chart rays out of the basepoint (first exit, then bisection).

    Returns (lifts normalized in the chart, chart coordinates, ray directions)."""
    chart = chart or dom.chart
    radius = radius or dom.radius or 50.0
    m0 = chart.project_lift(dom.basepoint[None])[0]
    if directions is None:
        directions = rng.standard_normal((n, chart.dim))
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    rho = ray_exit(dom, chart, m0, directions, 4 * radius, iters, grow=grow)
    good = np.isfinite(rho)
    M = m0 + rho[good, None] * directions[good]
    return chart.embed_lift(M), M, directions[good]


def ray_exit(dom, chart, m0, directions, tmax, iters=60, steps=64, grow=0, guess=None, rel=0.05):
    """First exit parameter of m0 + t*dir (NaN if no exit before tmax * 2**grow).

    Rays still inside at tmax are marched on over doubled ranges up to `grow` times.
    With `guess`, rays that are inside at guess*(1-rel) and outside at guess*(1+rel)
    are bisected in that bracket only (the domain is assumed star-shaped there)."""
    k = len(directions)
    lo = np.zeros(k)
    hi = np.full(k, np.nan)
    alive = np.ones(k, bool)
    if guess is not None:
        g = np.broadcast_to(np.asarray(guess, float), (k,))
        fin = np.isfinite(g) & (g > 0)
        both = np.concatenate([m0 + (g * (1 - rel))[:, None] * directions,
                               m0 + (g * (1 + rel))[:, None] * directions])
        inside = dom.member(chart.embed_lift(np.where(np.isfinite(both), both, 0.0)))
        warm = fin & inside[:k] & ~inside[k:]
        lo[warm] = g[warm] * (1 - rel)
        hi[warm] = g[warm] * (1 + rel)
        alive &= ~warm
        if warm.all():
            iters = min(iters, 52)  # 2 * rel / 2**52 is below double resolution
    start, end = 0.0, float(tmax)
    for _ in range(grow + 1):
        if not alive.any():
            break
        for t in np.linspace(start, end, steps + 1)[1:]:
            idx = np.flatnonzero(alive)
            inside = dom.member(chart.embed_lift(m0 + t * directions[idx]))
            hi[idx[~inside]] = t
            alive[idx[~inside]] = False
            lo[idx[inside]] = t
            if not alive.any():
                break
        if not alive.any():
            break
        start, end = end, 2 * end
    todo = ~np.isnan(hi)
    l, r = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = (l + r) / 2
        inside = dom.member(chart.embed_lift(m0 + np.where(todo, mid, 0)[:, None] * directions))
        l = np.where(todo & inside, mid, l)
        r = np.where(todo & ~inside, mid, r)
    return np.where(todo, (l + r) / 2, np.nan)


def export_cloud_csv(space: FormSpace, lifts, path):
    """One homogeneous lift per row under a signature header."""
    with open(path, "w") as fh:
        fh.write(f"# sig {space.sig.p} {space.sig.q}\n")
        for row in np.atleast_2d(lifts):
            fh.write(",".join(repr(float(v)) for v in round_sig(row)) + "\n")


# ---------------------------------------------------------------- diamonds

@dataclass(eq=False)
class DiamondSpec:
    space: FormSpace
    V0: np.ndarray  # rows, signature (1, q)
    V1: np.ndarray  # rows, signature (p, 1)
    e0: np.ndarray  # in V0, q = -1
    e1: np.ndarray  # in V1, q = +1
    P0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sp = self.space
        self.V0 = np.atleast_2d(np.asarray(self.V0, float))
        self.V1 = np.atleast_2d(np.asarray(self.V1, float))
        self.e0 = np.asarray(self.e0, float)
        self.e1 = np.asarray(self.e1, float)
        p, q = sp.ein_sig
        if self.V0.shape[0] + self.V1.shape[0] != sp.dim:
            raise GeometryError("V0 and V1 are not complementary")
        cross = self.V0 @ sp.gram @ self.V1.T
        scale = np.abs(self.V0).max() * np.abs(self.V1).max() * sp.scale
        if np.abs(cross).max() > 1e-7 * scale:
            raise GeometryError("V0 and V1 are not orthogonal")
        s0 = signature_of_subspace(sp, self.V0)
        s1 = signature_of_subspace(sp, self.V1)
        if (s0.p, s0.q, s0.degeneracy) != (1, q, 0) or (s1.p, s1.q, s1.degeneracy) != (p, 1, 0):
            raise GeometryError(f"splitting signatures {tuple(s0)}, {tuple(s1)} are not (1,q), (p,1)")
        if abs(sp.q(self.e0) + 1) > 1e-8 or abs(sp.q(self.e1) - 1) > 1e-8:
            raise GeometryError("e0, e1 must have q = -1, +1")
        G0 = self.V0 @ sp.gram @ self.V0.T
        # P0 v = V0^T G0^{-1} V0 G v : b-orthogonal projection onto V0
        self.P0 = self.V0.T @ np.linalg.solve(G0, self.V0 @ sp.gram)
        for e, P, name in ((self.e0, self.P0, "e0"), (self.e1, np.eye(sp.dim) - self.P0, "e1")):
            if np.linalg.norm(P @ e - e) > 1e-8 * max(1, np.linalg.norm(e)):
                raise GeometryError(f"{name} is not in its factor")

    def split(self, x):
        x = np.asarray(lift_of(x), float)
        w0 = x @ self.P0.T
        return w0, x - w0

    def dual(self):
        return DiamondSpec(self.space, self.V0, self.V1, self.e0, -self.e1)

    def basepoint(self):
        return self.e0 - self.e1

    def factors(self, x):
        """Normalized factor points (x0 on the e0 sheet of q=-1 in V0, x1 with q=+1 in V1)."""
        w0, w1 = self.split(x)
        s = np.sqrt(np.maximum(self.space.q(w1), 0.0))
        if np.any(s <= 0):
            raise GeometryError("point is not in the open diamond region")
        sgn = -np.sign(self.space.b(w0, self.e0))
        c = (sgn / s)[..., None] if np.ndim(s) else sgn / s
        return w0 * c, w1 * c

    def to_json(self):
        return {"V0": round_sig(self.V0), "V1": round_sig(self.V1),
                "e0": round_sig(self.e0), "e1": round_sig(self.e1)}

    @classmethod
    def from_json(cls, space, data):
        return cls(space, data["V0"], data["V1"], data["e0"], data["e1"])

    def transform(self, g):
        """Image under a form-preserving matrix g."""
        g = np.asarray(g, float)
        return DiamondSpec(self.space, self.V0 @ g.T, self.V1 @ g.T, g @ self.e0, g @ self.e1)


def diamond_member(spec: DiamondSpec, x):
    """P(w0 + w1) is in the diamond iff q(w1) > 0 and b(w0,e0) b(w1,e1) > 0."""
    v = lift_of(x)
    w0, w1 = spec.split(v)
    sp = spec.space
    # on null lifts q(w1) = -q(w0); evaluate it on the smaller factor, where
    # rounding does not swamp the (second order) value near F0 and F1
    small1 = np.linalg.norm(w1, axis=-1) <= np.linalg.norm(w0, axis=-1)
    s = np.where(small1, sp.q(w1), -sp.q(w0))
    res = (s > 0) & (sp.b(w0, spec.e0) * sp.b(w1, spec.e1) > 0)
    return bool(res) if np.ndim(res) == 0 else res


def standard_diamond(p, q, space: FormSpace | None = None):
    """Diamond of Ein^{p,q} in the orthonormal frame: V0 = <t0, s1..sq>, V1 = <t1..tp, s0>."""
    space = space or FormSpace.ein(p, q)
    F = space.frame().T
    t, s = F[: p + 1], F[p + 1:]
    V0 = np.vstack([t[:1], s[1:]])
    V1 = np.vstack([t[1:], s[:1]])
    return DiamondSpec(space, V0, V1, t[0], s[0])


def diamond_from_splitting(space, V0, V1, basepoint):
    """DiamondSpec on a splitting, picking the component that contains basepoint."""
    V0 = np.atleast_2d(V0)
    V1 = np.atleast_2d(V1)
    e0 = _unit_in(space, V0, -1)
    e1 = _unit_in(space, V1, +1)
    spec = DiamondSpec(space, V0, V1, e0, e1)
    x = lift_of(basepoint)
    w0, w1 = spec.split(x)
    if space.q(w1) <= 0:
        raise GeometryError("basepoint is not in the open orbit U_0 of this splitting")
    if space.b(w0, e0) * space.b(w1, e1) < 0:
        spec = spec.dual()
    return spec


def _unit_in(space, V, sign):
    """A vector of span(V) with q = sign (the extreme eigen-direction of the restricted form)."""
    G = V @ space.gram @ V.T
    ev, vec = np.linalg.eigh(G)
    k = 0 if sign < 0 else len(ev) - 1
    v = vec[:, k] @ V
    val = space.q(v)
    if val * sign <= 0:
        raise GeometryError("subspace has no vector of the requested sign")
    return v / np.sqrt(abs(val))


def diamond_oracle(spec: DiamondSpec, chart=None, radius=None, tag="diamond"):
    sp = spec.space
    if chart is None:
        # xi_inf at the basepoint, xi0 at the dual basepoint: the diamond is bounded there
        base = spec.e0 - spec.e1
        dual = spec.e0 + spec.e1
        chart = AffineChart(sp, dual, base)
        if radius is None:
            radius = _diamond_radius(spec, chart)

    def arc(a, d):
        return diamond_arc(spec, a, d)

    def ksamp(n, rng):
        return diamond_K_samples(spec, n, rng)

    def supp(a):
        return diamond_support(spec, a)

    def samp(n, rng):
        return diamond_sample(spec, n, rng)

    def seed(x, y):
        from .markowitz import two_segment_chain

        return two_segment_chain(spec, x, y).nodes[1:-1]

    return DomainOracle(sp, lambda L: diamond_member(spec, L), spec.e0 - spec.e1, tag,
                        arc_solver=arc, chart=chart, radius=radius, k_sampler=ksamp,
                        support=supp, spec={"diamond": spec.to_json()}, sampler=samp,
                        chain_seed=seed, diamond=spec)


def _diamond_radius(spec, chart, n=4000):
    rng = np.random.default_rng(0)
    F = np.vstack([diamond_F_points(spec, 0, n, rng), diamond_F_points(spec, 1, n, rng)])
    m = chart.project_lift(F)
    return float(np.nanmax(np.abs(m))) * 1.05


def _factor_frame(space, V, e):
    """e followed by a b-orthonormal basis of e^perp inside span(V)."""
    rest = V - np.outer(space.b(V, e) / space.q(e), e)
    # orthonormalize rest within e^perp
    U, s, Vt = np.linalg.svd(rest, full_matrices=False)
    rows = Vt[s > 1e-10 * s.max()]
    G = rows @ space.gram @ rows.T
    ev, vec = np.linalg.eigh(G)
    return e, (vec / np.sqrt(np.abs(ev))).T @ rows


def sphere_points(k, n, rng=None):
    """n quasi-uniform unit vectors of S^k in R^{k+1} (S^0 has just two points)."""
    if k == 0:
        return np.array([[1.0], [-1.0]])
    if k == 1:
        t = (np.arange(n) + 0.5) * 2 * np.pi / n
        U = np.stack([np.cos(t), np.sin(t)], axis=1)
    elif k == 2:
        # Fibonacci lattice
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        r = np.sqrt(1 - z * z)
        t = np.pi * (1 + 5 ** 0.5) * i
        U = np.stack([r * np.cos(t), r * np.sin(t), z], axis=1)
    else:
        from scipy.special import ndtri
        from scipy.stats import qmc

        z = qmc.Sobol(d=k + 1, scramble=True, seed=0).random(_pow2(n))[:n]
        U = ndtri(np.clip(z, 1e-12, 1 - 1e-12))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
    if rng is not None:
        Q, R = np.linalg.qr(rng.standard_normal((k + 1, k + 1)))
        U = U @ (Q * np.sign(np.diag(R)))
    return U


def diamond_F_points(spec: DiamondSpec, which, n, rng, quasi=False):
    """Points of F_0 = Ein n P(V0) (which=0) or F_1 = Ein n P(V1)."""
    sp = spec.space
    if which == 0:
        e, K = _factor_frame(sp, spec.V0, spec.e0)
    else:
        e, K = _factor_frame(sp, spec.V1, spec.e1)
    if quasi:
        u = sphere_points(K.shape[0] - 1, n, rng)
    else:
        u = rng.standard_normal((n, K.shape[0]))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    return e + u @ K


def hyperboloid_sample(space, V, e, n, rng, spread=1.0):
    """Points cosh(t) e + sinh(t) u on the sheet of e inside span(V)."""
    e, K = _factor_frame(space, V, e)
    u = rng.standard_normal((n, K.shape[0]))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    t = np.abs(rng.standard_normal(n)) * spread
    return np.cosh(t)[:, None] * e + np.sinh(t)[:, None] * (u @ K)


def diamond_sample(spec: DiamondSpec, n, rng, spread=1.0, which=0):
    """Members of D_0 (which=0) or of the dual D_1: x0 - x1 or x0 + x1 with sheet points."""
    x0 = hyperboloid_sample(spec.space, spec.V0, spec.e0, n, rng, spread)
    x1 = hyperboloid_sample(spec.space, spec.V1, spec.e1, n, rng, spread)
    return x0 - x1 if which == 0 else x0 + x1


def diamond_K_samples(spec: DiamondSpec, n, rng, center=None):
    """Points of the closed dual diamond: mostly on its extreme sets F_0, F_1.

    The cross-ratio sup is attained on F_0 u F_1, so those get quasi-uniform
    coverage sized by sphere dimension; a tenth goes to dual interior points.
    With `center` (a member lift) the set is moved by the diamond automorphism
    taking the basepoint to center, so coverage is uniform as seen from there."""
    p, q = spec.space.ein_sig
    n_in = n // 10
    m = n - n_in
    dims = {0: q - 1, 1: p - 1}
    alloc = {w: 2 for w, k in dims.items() if k == 0}
    rest = m - sum(alloc.values())
    circ = [w for w, k in dims.items() if k == 1]
    high = [w for w, k in dims.items() if k >= 2]
    for w in circ:
        alloc[w] = min(256, rest // (len(circ) + len(high))) if high else rest // len(circ)
    rest = m - sum(alloc.values())
    for w in high:
        alloc[w] = rest // len(high)
    n_in = n - sum(alloc.values())
    parts = [diamond_F_points(spec, w, alloc[w], rng, quasi=True) for w in (0, 1)]
    parts.append(diamond_sample(spec, n_in, rng, spread=1.5, which=1))
    K = np.vstack(parts)
    if center is not None:
        K = K @ diamond_recenter(spec, center).T
    return K


def _swap_reflection(space, e, m):
    """Reflection in e - m: maps e to m (both on the same sheet q = q(e))."""
    u = e - m
    qu = space.q(u)
    if abs(qu) < 1e-14:
        return np.eye(space.dim)
    return np.eye(space.dim) - 2 * np.outer(u, space.gram @ u) / qu


def diamond_recenter(spec: DiamondSpec, center):
    """Form-preserving map preserving the diamond and sending its basepoint to center."""
    sp = spec.space
    X0, X1 = spec.factors(center)
    # basepoint e0 - e1 has factors (e0, -e1)
    return _swap_reflection(sp, spec.e0, X0) @ _swap_reflection(sp, -spec.e1, X1)


def diamond_midpoint(spec: DiamondSpec, x, y):
    """Member whose factors are the hyperbolic midpoints of those of x and y."""
    sp = spec.space
    X0, X1 = spec.factors(x)
    Y0, Y1 = spec.factors(y)
    m0, m1 = X0 + Y0, X1 + Y1
    return m0 / np.sqrt(-sp.q(m0)) + m1 / np.sqrt(sp.q(m1))


def diamond_support(spec: DiamondSpec, a):
    """Supporting vertices at a boundary point P(w0 + w1) (w0, w1 null): P(w0), P(w1)."""
    w0, w1 = spec.split(lift_of(a))
    out = [w for w in (w0, w1) if np.linalg.norm(w) > 1e-9 * np.linalg.norm(lift_of(a))]
    return np.array(out)


def diamond_arc(spec: DiamondSpec, a, d):
    """Exact photon arc: q(w1(phi)) = al + be cos 2phi + ga sin 2phi stays positive."""
    sp = spec.space
    A0, A1 = spec.split(a)
    D0, D1 = spec.split(d)
    qa, qd, bad = sp.q(A1), sp.q(D1), sp.b(A1, D1)
    al, be, ga = (qa + qd) / 2, (qa - qd) / 2, bad
    rho = np.hypot(be, ga)
    th = np.arctan2(ga, be)
    ok = diamond_member(spec, a)
    lo = np.full(len(a), np.nan)
    hi = np.full(len(a), np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = -al / rho
        never = (c <= -1) | (rho == 0)  # q(w1) > 0 on the whole photon
        acc = np.arccos(np.clip(c, -1, 1))
    # zeros of cos(2phi - th) = c: 2phi = th +- acc (mod 2pi); phi = 0 is inside (value qa > 0)
    roots = np.stack([(th + acc) / 2, (th - acc) / 2], axis=1)
    roots = np.concatenate([roots + k * np.pi for k in (-2, -1, 0, 1, 2)], axis=1)
    pos = np.where(roots > 1e-15, roots, np.inf).min(axis=1)
    neg = np.where(roots < -1e-15, roots, -np.inf).max(axis=1)
    hi[ok] = np.where(never, np.pi / 2, pos)[ok]
    lo[ok] = np.where(never, -np.pi / 2, neg)[ok]
    return lo, hi


# ---------------------------------------------------------------- norm balls

@dataclass(eq=False)
class NormBallSpec:
    chart: AffineChart
    Hp: np.ndarray  # rows: negative definite factor (chart coordinates)
    Hq: np.ndarray  # rows: positive definite factor
    c: np.ndarray
    r: float

    def __post_init__(self):
        ch = self.chart
        self.Hp = np.atleast_2d(np.asarray(self.Hp, float)).reshape(-1, ch.dim)
        self.Hq = np.atleast_2d(np.asarray(self.Hq, float)).reshape(-1, ch.dim)
        self.c = np.asarray(self.c, float)
        if self.r <= 0:
            raise GeometryError("radius must be positive")
        if np.abs(self.Hp @ ch.metric @ self.Hq.T).max(initial=0) > 1e-9:
            raise GeometryError("factors are not orthogonal")
        if np.linalg.eigvalsh(self.Hp @ ch.metric @ self.Hp.T).max(initial=-1) >= 0:
            raise GeometryError("Hp is not negative definite")
        if np.linalg.eigvalsh(self.Hq @ ch.metric @ self.Hq.T).min(initial=1) <= 0:
            raise GeometryError("Hq is not positive definite")

    def _parts(self, v):
        """Coordinates of v along Hp and Hq (b-orthogonal decomposition)."""
        M = self.chart.metric
        Gp = self.Hp @ M @ self.Hp.T
        Gq = self.Hq @ M @ self.Hq.T
        ap = np.linalg.solve(Gp, self.Hp @ M @ np.asarray(v, float).T).T
        aq = np.linalg.solve(Gq, self.Hq @ M @ np.asarray(v, float).T).T
        return ap @ self.Hp, aq @ self.Hq

    def norm(self, v):
        vp, vq = self._parts(v)
        ch = self.chart
        return np.sqrt(np.maximum(-ch.qm(vp), 0)) + np.sqrt(np.maximum(ch.qm(vq), 0))


def norm_ball_member(spec: NormBallSpec, m):
    res = spec.norm(np.asarray(m, float) - spec.c) < spec.r
    return bool(res) if np.ndim(res) == 0 else res


def norm_ball_to_diamond(spec: NormBallSpec) -> DiamondSpec:
    """The splitting whose diamond is the norm ball, read off from its two spheres.

    F_1 = S_{p-1} spans V1 = <xi_inf + c - (q(c) - r^2)/2 xi0, h - b(c,h) xi0>;
    F_0 = S_{q-1} spans V0 = <xi_inf + c - (q(c) + r^2)/2 xi0, k - b(c,k) xi0>.
    """
    ch = spec.chart
    sp = ch.space
    c, r = spec.c, spec.r
    qc = ch.qm(c)
    base = ch.xi_inf + c @ ch.comp
    P = base - (qc - r * r) / 2 * ch.xi0
    Q = base - (qc + r * r) / 2 * ch.xi0
    lift_dir = lambda H: H @ ch.comp - np.outer(ch.bm(H, c), ch.xi0)
    V1 = np.vstack([lift_dir(spec.Hp), P])
    V0 = np.vstack([Q, lift_dir(spec.Hq)])
    center = ch.embed_lift(c)
    return diamond_from_splitting(sp, V0, V1, center)


def norm_ball_oracle(spec: NormBallSpec):
    ch = spec.chart

    def member(L):
        m = ch.project_lift(L)
        ok = ~np.isnan(m).any(axis=1)
        out = np.zeros(len(L), bool)
        out[ok] = norm_ball_member(spec, m[ok])
        return out

    rad = float(np.linalg.norm(spec.c)) + spec.r * 2
    return DomainOracle(ch.space, member, ch.embed_lift(spec.c), "chart-body", chart=ch,
                        radius=rad, spec={"center": round_sig(spec.c), "r": spec.r})


# ---------------------------------------------------------------- other families

def chart_domain(space, chart: AffineChart | None = None):
    """Ein minus C(xi0): the whole affine chart (not proper)."""
    chart = chart or AffineChart.standard(space)

    def member(L):
        return np.abs(space.b(L, chart.xi0)) > 1e-12 * np.linalg.norm(L, axis=1)

    return DomainOracle(space, member, chart.xi_inf, "chart-body", chart=chart, radius=None)


def truncated_diamond(outer: DomainOracle, y_lift, cone_future):
    """Omega = outer minus J^+(y) with J^+ given by a chart predicate `cone_future`."""
    ch = outer.chart

    def member(L):
        out = outer.member(L)
        m = ch.project_lift(L)
        hit = cone_future(m)
        return out & ~hit

    base = outer.basepoint
    if not member(base[None])[0]:
        raise GeometryError("basepoint of the outer domain lies in the removed cone")
    return DomainOracle(outer.space, member, base, "truncated-diamond", chart=ch,
                        radius=outer.radius, spec={"outer": outer.to_json(), "y": round_sig(y_lift)})


def union_domain(doms, basepoint=None):
    first = doms[0]

    def member(L):
        out = np.zeros(len(L), bool)
        for d in doms:
            out |= d.member(L)
        return out

    rad = max((d.radius or 0) for d in doms) or None
    return DomainOracle(first.space, member, first.basepoint if basepoint is None else basepoint,
                        "custom", chart=first.chart, radius=rad, spec={"union": len(doms)})


def misner_domain(space, chart: AffineChart | None = None):
    """Future of two transverse degenerate hyperplanes in a Lorentzian chart:
    {m : m_0 - m_1 > 0 and m_0 + m_1 > 0} (time coordinate first).  Not proper."""
    chart = chart or AffineChart.standard(space)
    if space.ein_sig.p != 1:
        raise GeometryError("Misner domain needs a Lorentzian chart")

    def member(L):
        m = chart.project_lift(L)
        ok = ~np.isnan(m).any(axis=1)
        res = np.zeros(len(L), bool)
        mm = m[ok]
        res[ok] = (mm[:, 0] - mm[:, 1] > 0) & (mm[:, 0] + mm[:, 1] > 0)
        return res

    def arc(a, d):
        # along a photon the two conditions are linear fractional in tan(phi)
        return generic_arc(member, a, d)

    e = np.zeros(chart.dim)
    e[0] = 1.0
    return DomainOracle(space, member, chart.embed_lift(e), "misner", arc_solver=arc, chart=chart)


# ---------------------------------------------------------------- properness and K(Omega)

class Witness(NamedTuple):
    point: np.ndarray | None
    margin: float
    message: str


def _omega_cloud(dom, n, rng, chart=None):
    pts = [sample_members(dom, n, rng, chart=chart)]
    if dom.radius is not None:
        pts.append(boundary_points(dom, n // 4, rng, chart=chart)[0])
    else:
        # unbounded presentations: add far members spread over Ein
        far = random_points(dom.space, 8 * n, rng)
        pts.append(far[dom.member(far)][:n])
    L = np.vstack(pts)
    return canonical(L)


def properness_witness(dom: DomainOracle, samples=4096, rng=None, gap=1e-3, candidates=None):
    """Search a point xi with |b(xi, y)| >= gap (unit lifts) on sampled y in the closure."""
    rng = rng or np.random.default_rng(0)
    cloud = _omega_cloud(dom, samples, rng)
    cands = []
    if candidates is not None:
        cands.append(np.atleast_2d(candidates))
    cands.append(dom.chart.xi0[None])
    if dom.k_sampler is not None:
        cands.append(dom.k_sampler(64, rng))
    cands.append(random_points(dom.space, 256, rng))
    C = canonical(np.vstack(cands))
    vals = C @ dom.space.gram @ cloud.T
    # lifts are only projective, so the margin is on |b|
    margin = np.abs(vals).min(axis=1)
    k = int(np.argmax(margin))
    if margin[k] >= gap:
        xi, m = _refine_witness(dom.space, C[k], cloud, rng)
        return Witness(xi, m, "ok")
    return Witness(None, float(margin[k]), "no witness found")


def _refine_witness(sp, xi, cloud, rng, iters=200, lam=16):
    """Local search on Ein (S^p x S^q cover) increasing min |b(xi, y)| over the cloud.

    A larger margin keeps the domain well inside the witness chart."""
    F = sp.frame()
    P = sp.sig[0]
    G = cloud @ sp.gram

    def margin(c):
        X = canonical(c @ F.T)
        return np.abs(X @ G.T).min(axis=1)

    def renorm(c):
        u, v = c[..., :P], c[..., P:]
        return np.concatenate([u / np.linalg.norm(u, axis=-1, keepdims=True),
                               v / np.linalg.norm(v, axis=-1, keepdims=True)], axis=-1)

    c = renorm(np.linalg.solve(F, xi))
    best = margin(c[None])[0]
    step = 0.1
    for _ in range(iters):
        trial = renorm(c + step * rng.standard_normal((lam, len(c))))
        m = margin(trial)
        j = int(np.argmax(m))
        if m[j] > best:
            c, best, step = trial[j], m[j], min(step * 1.5, 0.5)
        else:
            step *= 0.7
        if step < 1e-4:
            break
    return canonical(c @ F.T), float(best)


def witness_chart(dom: DomainOracle, witness):
    """Chart with xi0 = witness and xi_inf = basepoint; the domain is bounded in it."""
    return AffineChart(dom.space, witness, dom.basepoint)


def sample_K(dom: DomainOracle, budget, rng=None, cloud=None, chart=None):
    """Points whose lightcones miss the sampled domain, with constant sign on it."""
    rng = rng or np.random.default_rng(0)
    if cloud is None:
        cloud = sample_members(dom, 1024, rng)
        if dom.radius is not None:
            cloud = np.vstack([cloud, boundary_points(dom, 256, rng)[0]])
    if chart is None:
        chart = dom.chart
    ref = chart.normalize(cloud)
    ref = ref[np.all(np.isfinite(ref), axis=1)]
    ref = ref / np.linalg.norm(ref, axis=1, keepdims=True)
    if dom.k_sampler is not None:
        cand = dom.k_sampler(budget, rng)
    else:
        cand = random_points(dom.space, 4 * budget, rng)
    cand = canonical(cand)
    vals = cand @ dom.space.gram @ ref.T
    good = (vals > 0).all(axis=1) | (vals < 0).all(axis=1)
    return cand[good][:budget]


# ---------------------------------------------------------------- convexity and extremality

class SupportResult(NamedTuple):
    vertex: np.ndarray | None
    margin: float
    message: str


def _is_boundary(dom, a, chart, rel=1e-6):
    """Non-member with members arbitrarily close along the segment to the basepoint."""
    if dom.member(a):
        return False
    m = chart.project_lift(np.atleast_2d(a))[0]
    if np.isnan(m).any():
        return False
    mb = chart.project_lift(dom.basepoint[None])[0]
    for tau in (rel, 10 * rel, 100 * rel):
        if dom.member_chart(m + tau * (mb - m), chart)[0]:
            return True
    return False


def near_member(dom, L, chart, tau):
    """Closure test: the point nudged toward the basepoint (chart segment) is a member."""
    m = chart.project_lift(np.atleast_2d(L))
    mb = chart.project_lift(dom.basepoint[None])[0]
    ok = ~np.isnan(m).any(axis=1)
    out = np.zeros(len(m), bool)
    mm = m[ok]
    out[ok] = dom.member_chart(mm + tau * (mb - mm), chart) | dom.member_chart(mm, chart)
    return out


def dual_convexity_check(dom: DomainOracle, boundary_pt, budget=512, rng=None, cloud=None):
    """Search b with a in C(b) and C(b) missing the sampled domain."""
    rng = rng or np.random.default_rng(0)
    sp = dom.space
    a = canonical(lift_of(boundary_pt))
    if not _is_boundary(dom, a, dom.chart):
        raise GeometryError("point is not on the boundary")
    if cloud is None:
        cloud = sample_members(dom, 2048, rng)
    ref = canonical(cloud)
    ref = ref * np.sign(sp.b(ref, dom.chart.xi0))[:, None]
    cands = [a[None]]  # for p = 0 the lightcone of a is {a}
    if dom.support is not None:
        cands.append(np.atleast_2d(dom.support(a)))
    if sp.ein_sig.p > 0:
        n = null_directions(sp, a, max(budget // 8, 8), seed=int(rng.integers(1 << 30)))
        svals = np.tan(np.linspace(-1.5, 1.5, 7))
        cands.append(n)
        cands.append((a[None, None, :] + svals[None, :, None] * n[:, None, :]).reshape(-1, sp.dim))
    C = canonical(np.vstack(cands))
    C = C[np.abs(C @ sp.gram @ a) <= 1e-8]  # incidence with a
    # strict signs: support vertices may sit on the domain's own boundary, where
    # membership is noisy, so they are judged by their cones alone
    vals = C @ sp.gram @ ref.T
    pos = (vals > 0).all(axis=1)
    neg = (vals < 0).all(axis=1)
    ok = pos | neg
    if not ok.any():
        return SupportResult(None, 0.0, "no supporting lightcone found")
    marg = np.abs(vals).min(axis=1)
    k = np.flatnonzero(ok)[np.argmax(marg[ok])]
    return SupportResult(C[k], float(marg[k]), "ok")


def boundary_generator(dom: DomainOracle, chart, m, eps=1e-6, rng=None):
    """Chart direction of the null generator of the boundary at chart point m.

    The tangent hyperplane is fitted from radially projected neighbours; on a
    null hypersurface its q-dual normal is the generator.  Meaningless at kinks."""
    rng = rng or np.random.default_rng(0)
    m0 = chart.project_lift(dom.basepoint[None])[0]
    n = chart.dim
    r = np.linalg.norm(m - m0)
    u = (m - m0) / r
    U = rng.standard_normal((2 * n, n))
    U -= (U @ u)[:, None] * u
    nb, _ = _radial_project(dom, chart, m0, m + eps * r * U, 2 * r)
    D = nb - m
    D = D[np.isfinite(D).all(axis=1)]
    if len(D) < n - 1:
        return None
    nu = np.linalg.svd(D)[2][-1]
    ell = np.linalg.solve(chart.metric, nu)
    return ell / np.linalg.norm(ell)


def extremality_check(dom: DomainOracle, a, photon_budget=256, h=1e-4, chart=None, seed=0, rel_tol=1e-3,
                      generator=False):
    """True iff no sampled photon through a has closure points on both sides of a.

    h may be a sequence of resolutions; closure is tested by nudging toward the
    basepoint by rel_tol * h (a larger rel_tol also catches photons only nearly
    aligned with a boundary segment).  With generator=True the photon along the
    fitted boundary generator is tested too (random photons rarely hit it)."""
    sp = dom.space
    chart = chart or dom.chart
    a = canonical(lift_of(a))
    if not _is_boundary(dom, a, chart):
        raise GeometryError("point is not on the boundary")
    n = null_directions(sp, a, photon_budget, seed=seed)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    ma = chart.project_lift(a[None])[0]
    ells = []
    if generator and np.isfinite(ma).all():
        rng = np.random.default_rng(seed)
        for eps in (1e-5, 1e-7):
            ell = boundary_generator(dom, chart, ma, eps, rng)
            if ell is not None:
                ells.append(ell)
    for hh in np.atleast_1d(h):
        tau = rel_tol * hh
        both = near_member(dom, a + hh * n, chart, tau) & near_member(dom, a - hh * n, chart, tau)
        if both.any():
            return False
        for ell in ells:
            step = hh * np.linalg.norm(ma) * ell
            pm = chart.embed_lift(np.stack([ma + step, ma - step]))
            if near_member(dom, pm, chart, tau).all():
                return False
    return True


def classify_extremal(dom: DomainOracle, a, chart=None, cloud=None, rng=None, tol=1e-9):
    """'timelike' if b(a, x) > 0 on all sampled x (chart-normalized lifts), 'spacelike' if < 0."""
    rng = rng or np.random.default_rng(1)
    chart = chart or dom.chart
    if cloud is None:
        cloud = sample_members(dom, 2048, rng, chart=chart)
    A = chart.normalize(lift_of(a))
    X = chart.normalize(cloud)
    X = X[np.isfinite(X).all(axis=1)]
    vals = X @ dom.space.gram @ A
    scale = np.linalg.norm(X, axis=1) * np.linalg.norm(A) * dom.space.scale
    big = np.abs(vals) > tol * scale
    if (vals[big] > 0).all():
        return "timelike"
    if (vals[big] < 0).all():
        return "spacelike"
    raise GeometryError("C(a) meets the domain: mixed signs")


class HullResult(NamedTuple):
    extreme: np.ndarray  # refined extremal lifts (chart normalized)
    functional: np.ndarray  # xi used to cut the cone (b(xi, .) = 1 section)
    section: np.ndarray  # sampled lifts in the section
    chart: AffineChart


def projective_hull(dom: DomainOracle, budget=64, rng=None, witness=None, rounds=180,
                    ascent=(1e-5, 1e-6, 1e-7, 1e-8, 1e-9)):
    """Extreme points of the convex hull of the lifted domain, cut by b(witness, .) = 1.

    Each extreme point maximizes a linear functional over the closure; we maximize
    random functionals over boundary points parametrized by chart rays, with an
    adaptive random search, then slide along null generators of the boundary
    (maximizers sit on creases, and whole boundary photon segments can tie)."""
    rng = rng or np.random.default_rng(0)
    if witness is None:
        w = properness_witness(dom, rng=rng)
        if w.point is None:
            raise GeometryError("domain not liftable: no properness witness")
        witness = w.point
    chart = witness_chart(dom, witness)
    L, M, dirs = boundary_points(dom, 1024, rng, chart=chart, radius=_chart_radius(dom, chart, rng), grow=20)
    if len(M) == 0:
        raise GeometryError("no boundary samples")
    m0 = chart.project_lift(dom.basepoint[None])[0]
    rad = float(np.linalg.norm(M - m0, axis=1).max()) * 1.2
    k = budget
    psi = rng.standard_normal((k, dom.space.dim))
    vals = L @ psi.T  # section values, since lifts satisfy b(lift, xi0) = 1
    best = np.argmax(vals, axis=0)
    theta = dirs[best].copy()
    score = vals[best, np.arange(k)]
    theta, score = _ridge_search(dom, chart, m0, theta, score, psi, rad, rng, rounds)
    for eps in ascent:
        th2, sc2 = _generator_ascent(dom, chart, m0, theta, psi, rad, rng, eps=eps)
        up = sc2 >= score - 1e-13 * np.abs(score)
        theta[up], score[up] = th2[up], np.maximum(sc2[up], score[up])
    # sharpen points sitting at cone tips, where sliding along generators cannot help
    theta, score = _ridge_search(dom, chart, m0, theta, score, psi, rad, rng, rounds // 2, restarts=1, step0=1e-4)
    rho = ray_exit(dom, chart, m0, theta, rad, iters=80, steps=24, grow=20)
    ext = chart.embed_lift(m0 + rho[:, None] * theta)
    ext = ext[np.isfinite(ext).all(axis=1)]
    return HullResult(ext, witness, L, chart)


def _ray_scores(dom, chart, m0, dirs, psi_rep, rad):
    rho = ray_exit(dom, chart, m0, dirs, rad, iters=60, steps=24, grow=20)
    lv = chart.embed_lift(m0 + rho[:, None] * dirs)
    sv = np.einsum("ij,ij->i", lv, psi_rep)
    return np.where(np.isfinite(sv), sv, -np.inf)


def _ridge_search(dom, chart, m0, theta, score, psi, rad, rng, iters, lam=8, restarts=3, step0=0.3):
    """Isotropic adaptive random search over ray directions, restarted from the
    incumbents with a large step (stalls on boundary creases are common)."""
    k, n = theta.shape
    psi_rep = np.repeat(psi, lam, axis=0)
    for _ in range(restarts):
        step = np.full(k, step0)
        for _ in range(iters // restarts):
            trial = theta[:, None, :] + step[:, None, None] * rng.standard_normal((k, lam, n))
            trial /= np.linalg.norm(trial, axis=2, keepdims=True)
            sv = _ray_scores(dom, chart, m0, trial.reshape(-1, n), psi_rep, rad).reshape(k, lam)
            j = np.argmax(sv, axis=1)
            better = sv[np.arange(k), j] > score
            theta[better] = trial[better, j[better]]
            score[better] = sv[better, j[better]]
            step = np.minimum(np.where(better, step * 1.5, step * 0.6), 0.5)
            if step.max() < 1e-13:
                break
    return theta, score


def local_sign_ratio(dom: DomainOracle, a, chart, scale, n=4000, rng=None):
    """min/max of b(a, x) over members x within chart distance ~scale of a (unit lifts).

    Near a genuinely extremal a the sign is constant up to O(scale); on a ruled
    boundary piece both signs appear at every scale."""
    rng = rng or np.random.default_rng(0)
    a = lift_of(a)
    m = chart.project_lift(a[None])[0]
    X = chart.embed_lift(m + scale * rng.standard_normal((n, len(m))))
    X = X[dom.member(X)]
    if len(X) == 0:
        return float("nan")
    v = (X @ dom.space.gram @ a) / np.linalg.norm(X, axis=1)
    big = np.abs(v).max()
    if big == 0:
        return float("nan")
    return float(v.min() / big) if v.max() > 0 else float(-v.max() / big)


def _radial_project(dom, chart, m0, pts, rad, guess=None):
    u = pts - m0
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    if guess is not None:
        guess = np.broadcast_to(guess, u.shape[:-1]).reshape(-1)
    rho = ray_exit(dom, chart, m0, u.reshape(-1, u.shape[-1]), rad, iters=60, steps=24, grow=20,
                   guess=guess).reshape(u.shape[:-1])
    return m0 + rho[..., None] * u, u


def _generator_ascent(dom, chart, m0, theta, psi, rad, rng, eps=1e-6, grid=48, golden=60, flat_tol=1e-13):
    """Slide each boundary point along its null generator while psi increases.

    Away from the extremal set the boundary of a ruled domain is a null hypersurface;
    its tangent hyperplane (fitted from nearby ray exits) has normal nu whose
    q-dual Q^{-1} nu is the generator.  psi is monotone along photons, so the
    maximum along the re-projected generator is its endpoint."""
    k, n = theta.shape
    base, _ = _radial_project(dom, chart, m0, m0 + theta, rad)
    U = rng.standard_normal((k, 2 * n, n))
    U -= np.einsum("kmi,ki->km", U, theta)[..., None] * theta[:, None, :]
    nb, _ = _radial_project(dom, chart, m0, m0 + theta[:, None, :] + eps * U, rad,
                            guess=np.linalg.norm(base - m0, axis=1)[:, None])
    D = nb - base[:, None, :]
    D[~np.isfinite(D)] = 0.0
    nu = np.linalg.svd(D)[2][:, -1, :]
    ell = nu @ np.linalg.inv(chart.metric)
    ell /= np.linalg.norm(ell, axis=1, keepdims=True)

    def value(t):
        p = base[:, None, :] + t[..., None] * ell[:, None, :]
        pts, u = _radial_project(dom, chart, m0, p, rad, guess=np.linalg.norm(p - m0, axis=-1))
        sv = np.einsum("kmi,ki->km", chart.embed_lift(pts.reshape(-1, n)).reshape(k, -1, psi.shape[1]), psi)
        return np.where(np.isfinite(sv), sv, -np.inf), u

    ts = rad * np.concatenate([-(2.0 ** -np.arange(grid)), [0.0], 2.0 ** -np.arange(grid)[::-1]])
    T = np.broadcast_to(ts, (k, len(ts))).copy()
    V, _ = value(T)
    j = np.argmax(V, axis=1)
    lo = T[np.arange(k), np.maximum(j - 1, 0)]
    hi = T[np.arange(k), np.minimum(j + 1, len(ts) - 1)]
    top = V.max(axis=1)
    # if psi is flat along the generator, the whole segment maximizes it: go to an end
    thr = top - flat_tol * np.abs(top)
    ok = V >= thr[:, None]
    inn, out = [], []
    for idx in (np.arange(grid, len(ts)), np.arange(grid, -1, -1)):
        run = np.cumprod(ok[:, idx], axis=1).astype(bool)
        last = run.sum(axis=1) - 1
        inn.append(np.where(last >= 0, T[np.arange(k), idx[np.maximum(last, 0)]], 0.0))
        out.append(T[np.arange(k), idx[np.minimum(last + 1, len(idx) - 1)]])
    inn, out = np.stack(inn, 1), np.stack(out, 1)
    g = (np.sqrt(5) - 1) / 2
    for _ in range(golden):
        # golden section for the peak and bisection for both flat ends, in one batch
        a = hi - g * (hi - lo)
        b = lo + g * (hi - lo)
        mid = (inn + out) / 2
        vv, _ = value(np.column_stack([a, b, mid]))
        left = vv[:, 0] >= vv[:, 1]
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        good = vv[:, 2:] >= thr[:, None]
        inn = np.where(good, mid, inn)
        out = np.where(good, out, mid)
    cand = np.column_stack([inn, (lo + hi) / 2, T[np.arange(k), j], np.zeros(k)])
    vc, uc = value(cand)
    # prefer segment ends among near-ties
    pri = np.where(vc >= thr[:, None], 0, 1) * 10 + np.arange(cand.shape[1])[None, :]
    pri = np.where(np.isfinite(vc), pri, 99)
    i = np.argmin(pri, axis=1)
    return uc[np.arange(k), i], vc[np.arange(k), i]


def _chart_radius(dom, chart, rng):
    """Rough chart-norm bound from member samples (expanded)."""
    if dom.sampler is not None:
        pts = dom.sampler(512, rng)
    else:
        pts = sample_members(dom, 512, rng)
    m = chart.project_lift(pts)
    m = m[np.isfinite(m).all(axis=1)]
    return float(np.abs(m).max()) * 3 + 1e-9


def hull_contains(points, x, margin=1e-9):
    """LP test: x is a convex combination of points with all weights >= margin."""
    P = np.atleast_2d(points)
    k = len(P)
    A_eq = np.vstack([P.T, np.ones(k)])
    b_eq = np.concatenate([np.asarray(x, float), [1.0]])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(margin, None)] * k, method="highs")
    return res.status == 0


# ---------------------------------------------------------------- splitting table

class ComponentInfo(NamedTuple):
    count: int
    proper: tuple
    description: str


def classify_splitting_components(sig0, sig1, sig=None):
    p0, q0 = sig0
    p1, q1 = sig1
    if min(p0, q0, p1, q1) < 0:
        raise GeometryError("negative signature")
    if sig is not None and (p0 + p1, q0 + q1) != (sig[0] + 1, sig[1] + 1):
        raise GeometryError("signatures do not add up to (p+1, q+1)")
    if min(p0, q0, p1, q1) == 0:
        return ComponentInfo(1, (False,), "connected, symmetric and dense")
    if p0 == p1 == q0 == q1 == 1:
        return ComponentInfo(4, (True,) * 4, "four Lorentzian diamonds")
    a, b = p0 * q1, p1 * q0
    if (a == 1 and b >= 2) or (a >= 2 and b == 1):
        return ComponentInfo(3, (True, True, False), "two proper diamonds and one nonproper component")
    return ComponentInfo(2, (False, False), "two symmetric nonproper components")
