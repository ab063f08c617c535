"""Lorentzian causal structure in affine charts of Ein^{1,n-1}.

Chart coordinates put time first; a vector w is future directed when
b(w, e1) < 0 for the unit timelike basis vector e1, i.e. when w_0 > 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .domains import (
    DiamondSpec,
    DomainOracle,
    _chart_radius,
    _diamond_radius,
    classify_extremal,
    diamond_K_samples,
    diamond_from_splitting,
    diamond_member,
    extremality_check,
    hyperplane_arc,
    sample_members,
)
from .einstein import AffineChart, canonical, lift_of, round_sig
from .forms import FormSpace, GeometryError, b_complement


def lorentzian_chart(n):
    """Standard chart of Ein^{1,n-1} (coordinates (t, x_1, ..., x_{n-1}))."""
    if n < 2:
        raise GeometryError("need n >= 2")
    return AffineChart.standard(FormSpace.ein(1, n - 1))


def _same_chart(c1, c2):
    if c1 is c2:
        return True
    return (c1.space.dim == c2.space.dim and np.allclose(c1.xi0, c2.xi0)
            and np.allclose(c1.xi_inf, c2.xi_inf) and np.allclose(c1.comp, c2.comp))


@dataclass
class CausalPoint:
    m: np.ndarray
    chart: AffineChart = field(repr=False)

    def __post_init__(self):
        self.m = np.asarray(self.m, float)
        if self.chart.sig.p != 1:
            raise GeometryError("causal structure needs a Lorentzian chart (p = 1)")
        if self.m.shape != (self.chart.dim,):
            raise GeometryError(f"expected {self.chart.dim} chart coordinates")

    @property
    def lift(self):
        return self.chart.embed_lift(self.m)

    @classmethod
    def from_lift(cls, chart, lift):
        m = chart.project_lift(np.atleast_2d(lift_of(lift)))[0]
        if np.isnan(m).any():
            raise GeometryError("point lies at infinity of the chart")
        return cls(m, chart)

    def to_json(self):
        return {"m": round_sig(self.m)}


RELATIONS = ("future", "past", "lightlike-future", "lightlike-past", "spacelike", "equal")


def chronological_relation(a: CausalPoint, b: CausalPoint, tol=1e-12):
    """Where b sits relative to a."""
    if not _same_chart(a.chart, b.chart):
        raise GeometryError("points live in different charts")
    v = b.m - a.m
    n2 = float(v @ v)
    if n2 <= (tol ** 2) * max(1.0, float(a.m @ a.m)):
        return "equal"
    qv = float(a.chart.qm(v))
    if abs(qv) <= tol * n2:
        return "lightlike-future" if v[0] > 0 else "lightlike-past"
    if qv > 0:
        return "spacelike"
    return "future" if v[0] > 0 else "past"


def lift_relation(chart: AffineChart, la, lb, tol=1e-12):
    """The same classification read off chart-normalized lifts.

    b(a, b) = -q(b - a)/2 decides timelike/lightlike/spacelike, and the sign of
    b(b - a, e1) with e1 the timelike chart direction gives the time orientation."""
    A = chart.normalize(np.asarray(la, float))
    B = chart.normalize(np.asarray(lb, float))
    D = B - A
    e1 = chart.comp[0]
    sp = chart.space
    val = float(sp.b(A, B))
    orient = float(sp.b(D, e1))
    size = float(np.linalg.norm(D) ** 2)
    if size <= tol ** 2 * max(1.0, float(A @ A)):
        return "equal"
    if abs(val) <= tol * size:
        return "lightlike-future" if orient < 0 else "lightlike-past"
    if val < 0:
        return "spacelike"
    return "future" if orient < 0 else "past"


# ---------------------------------------------------------------- causal diamonds

def _rest_frame(chart, x, y):
    """T and Lorentz-orthonormal (e_t, E) with e_t future along y - x."""
    v = y - x
    T = np.sqrt(-chart.qm(v))
    et = v / T
    rows = []
    for i in range(1, chart.dim):
        w = np.eye(chart.dim)[i]
        w = w + chart.bm(w, et) * et
        for r in rows:
            w = w - chart.bm(w, r) * r
        rows.append(w / np.sqrt(chart.qm(w)))
    return T, et, np.array(rows).reshape(-1, chart.dim)


def causal_diamond_sample(x: CausalPoint, y: CausalPoint, n, rng, margin=1e-3):
    """Chart points of D(x, y), drawn in the rest frame of y - x."""
    ch = x.chart
    T, et, E = _rest_frame(ch, x.m, y.m)
    t = rng.uniform(margin, 1 - margin, n) * T
    k = E.shape[0]
    u = rng.standard_normal((n, k))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = np.minimum(t, T - t) * (1 - margin) * rng.uniform(0, 1, n) ** (1 / max(k, 1))
    return x.m + t[:, None] * et + (r[:, None] * u) @ E


def causal_diamond_spec(x: CausalPoint, y: CausalPoint) -> DiamondSpec:
    """The diamond D(x, y) as a splitting: V1 = <x, y> of signature (1,1), V0 its complement."""
    sp = x.chart.space
    V1 = np.stack([x.lift, y.lift])
    V0 = b_complement(sp, V1)
    mid = x.chart.embed_lift((x.m + y.m) / 2)
    return diamond_from_splitting(sp, V0, V1, mid)


def causal_diamond(x: CausalPoint, y: CausalPoint) -> DomainOracle:
    """I^+(x) n I^-(y) with an exact photon arc solver."""
    if chronological_relation(x, y) != "future":
        raise GeometryError("y is not in the chronological future of x")
    ch = x.chart
    sp = ch.space
    xm, ym = x.m.copy(), y.m.copy()

    def member(L):
        m = ch.project_lift(L)
        ok = ~np.isnan(m).any(axis=1)
        res = np.zeros(len(L), bool)
        u = m[ok] - xm
        w = ym - m[ok]
        res[ok] = (ch.qm(u) < 0) & (u[:, 0] > 0) & (ch.qm(w) < 0) & (w[:, 0] > 0)
        return res

    # membership along a photon can only change on C(x), C(y) or at infinity
    W = np.stack([x.lift, y.lift, ch.xi0]) @ sp.gram

    def arc(a, d):
        return hyperplane_arc(W, member, a, d)

    spec = causal_diamond_spec(x, y)
    verts = np.stack([x.lift, y.lift])

    def support(a):
        a = ch.normalize(lift_of(a))
        v = np.abs(verts @ sp.gram @ a) / (np.linalg.norm(verts, axis=1) * np.linalg.norm(a))
        return verts[np.argmin(v)][None]

    def sampler(n, rng):
        return ch.embed_lift(causal_diamond_sample(x, y, n, rng))

    def seed(a, b):
        from .markowitz import two_segment_chain

        return two_segment_chain(spec, a, b).nodes[1:-1]

    return DomainOracle(sp, member, ch.embed_lift((xm + ym) / 2), "causal-diamond",
                        arc_solver=arc, chart=ch, radius=_diamond_radius(spec, ch),
                        k_sampler=lambda n, rng: diamond_K_samples(spec, n, rng),
                        support=support, sampler=sampler, chain_seed=seed, diamond=spec,
                        spec={"x": round_sig(xm), "y": round_sig(ym)})


def truncated_causal_diamond(x: CausalPoint, z: CausalPoint, y: CausalPoint) -> DomainOracle:
    """D(x, z) minus the causal future J^+(y) of an interior point y."""
    D = causal_diamond(x, z)
    if not D.member(y.lift):
        raise GeometryError("y must lie in the diamond")
    ch = x.chart
    sp = ch.space
    ym = y.m.copy()

    def member(L):
        res = D.member(L)
        m = ch.project_lift(L[res])
        u = m - ym
        cut = (ch.qm(u) <= 0) & (u[:, 0] >= 0)
        res[np.flatnonzero(res)[cut]] = False
        return res

    W = np.stack([x.lift, z.lift, ch.xi0, y.lift]) @ sp.gram

    def arc(a, d):
        return hyperplane_arc(W, member, a, d)

    base = ch.embed_lift((x.m + y.m) / 2)
    return DomainOracle(sp, member, base, "truncated-diamond", arc_solver=arc, chart=ch,
                        radius=D.radius, k_sampler=D.k_sampler,
                        spec={"x": round_sig(x.m), "z": round_sig(z.m), "y": round_sig(ym)})


# ---------------------------------------------------------------- causal convexity

class ConvexityResult(NamedTuple):
    ok: bool
    witness: tuple | None  # (a, b, z) chart points with z in I(a, b) outside the domain
    pairs_tested: int
    message: str


def causal_convexity_check(dom: DomainOracle, budget=512, rng=None, per_pair=16, cloud=None):
    """Sampled test that every open diamond I^+(a) n I^-(b) between members stays inside."""
    rng = rng if rng is not None else np.random.default_rng(0)
    ch = dom.chart
    if ch.sig.p != 1:
        raise GeometryError("causal convexity needs a Lorentzian chart")
    if cloud is None:
        cloud = sample_members(dom, budget, rng)
    M = ch.project_lift(cloud)
    M = M[np.isfinite(M).all(axis=1)]
    if len(M) < len(cloud):
        raise GeometryError("domain is not contained in the chart")
    tested = 0
    idx = rng.permutation(len(M))
    for i, j in zip(idx, np.roll(idx, 1)):
        a, b = M[i], M[j]
        v = b - a
        if ch.qm(v) >= 0:
            continue
        if v[0] < 0:
            a, b = b, a
        tested += 1
        Z = causal_diamond_sample(CausalPoint(a, ch), CausalPoint(b, ch), per_pair, rng, 1e-6)
        inside = dom.member(ch.embed_lift(Z))
        if not inside.all():
            return ConvexityResult(False, (a, b, Z[np.argmin(inside)]), tested, "counterexample")
    if tested == 0:
        return ConvexityResult(True, None, 0, "inconclusive: no timelike pairs sampled")
    return ConvexityResult(True, None, tested, "ok")


# ---------------------------------------------------------------- Lipschitz graphs

@dataclass(eq=False)
class LipschitzDomainSpec:
    """Omega = {(t, x) : x in V, f_minus(x) < t < f_plus(x)} in a Lorentzian chart.

    H = {t = 0}; V is given by a vectorized predicate, with sample points of its
    boundary for the matching condition and `radius` bounding V."""
    chart: AffineChart
    in_V: Callable
    f_minus: Callable
    f_plus: Callable
    boundary: np.ndarray
    radius: float
    center: np.ndarray
    data: dict = field(default_factory=dict)
    annotations: dict = field(default_factory=dict)  # e.g. {"eikonal": true}, recorded only


def validate_lipschitz(spec: LipschitzDomainSpec, rng=None, n=2000, tol=1e-9):
    """Raise GeometryError unless f_- < f_+ on V, both 1-Lipschitz, equal on boundary samples."""
    rng = rng if rng is not None else np.random.default_rng(0)
    k = spec.chart.dim - 1
    P = rng.uniform(-spec.radius, spec.radius, (4 * n, k))
    P = P[spec.in_V(P)][:n]
    if len(P) == 0:
        raise GeometryError("V looks empty")
    fm, fp = spec.f_minus(P), spec.f_plus(P)
    if np.any(fm >= fp):
        raise GeometryError("f_minus must be strictly below f_plus on V")
    Q = np.vstack([P, spec.boundary])
    for f in (spec.f_minus, spec.f_plus):
        vals = f(Q)
        i, j = rng.integers(len(Q), size=(2, 20 * n))
        dist = np.linalg.norm(Q[i] - Q[j], axis=1)
        if np.any(np.abs(vals[i] - vals[j]) > dist * (1 + 1e-9) + tol):
            raise GeometryError("a graph function is not 1-Lipschitz")
    if np.abs(spec.f_minus(spec.boundary) - spec.f_plus(spec.boundary)).max() > 1e-7:
        raise GeometryError("f_minus and f_plus must agree on the boundary of V")
    return True


def cone_lipschitz_spec(chart, r=1.0, center=None, t0=0.0):
    """f_pm = t0 +- (r - |x - c|) over the ball of radius r: the causal diamond."""
    k = chart.dim - 1
    c = np.zeros(k) if center is None else np.asarray(center, float)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((256, k))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return LipschitzDomainSpec(
        chart,
        lambda X: np.linalg.norm(np.atleast_2d(X) - c, axis=1) < r,
        lambda X: t0 - (r - np.linalg.norm(np.atleast_2d(X) - c, axis=1)),
        lambda X: t0 + (r - np.linalg.norm(np.atleast_2d(X) - c, axis=1)),
        c + r * u, float(r + np.abs(c).max()), c,
        data={"kind": "cone", "r": r, "center": round_sig(c), "t0": t0})


def polytope_lipschitz_spec(chart, vertices, nodes, f_minus_vals, f_plus_vals, annotations=None):
    """Piecewise-linear f_pm over the Delaunay triangulation of `nodes`.

    V is the convex hull of `vertices`; nodes must contain the vertices (listed
    first) so both functions are defined on all of V."""
    from scipy.interpolate import LinearNDInterpolator
    from scipy.spatial import Delaunay

    vertices = np.atleast_2d(np.asarray(vertices, float))
    nodes = np.atleast_2d(np.asarray(nodes, float))
    fm = np.asarray(f_minus_vals, float)
    fp = np.asarray(f_plus_vals, float)
    if len(fm) != len(nodes) or len(fp) != len(nodes):
        raise GeometryError("one value per node is required")
    hull = Delaunay(vertices)
    tri = Delaunay(nodes)
    im = LinearNDInterpolator(tri, fm)
    ip = LinearNDInterpolator(tri, fp)

    def in_V(X):
        return hull.find_simplex(np.atleast_2d(X)) >= 0

    # boundary samples on hull facets
    from scipy.spatial import ConvexHull

    ch = ConvexHull(vertices)
    rng = np.random.default_rng(0)
    bpts = []
    for simplex in ch.simplices:
        w = rng.dirichlet(np.ones(len(simplex)), 16)
        bpts.append(w @ vertices[simplex])
    bpts = np.vstack(bpts + [vertices])
    data = {"kind": "polytope", "vertices": round_sig(vertices), "nodes": round_sig(nodes),
            "f_minus": round_sig(fm), "f_plus": round_sig(fp)}
    return LipschitzDomainSpec(chart, in_V, lambda X: im(np.atleast_2d(X)),
                               lambda X: ip(np.atleast_2d(X)), bpts,
                               float(np.abs(vertices).max()), vertices.mean(axis=0), data,
                               dict(annotations or {}))


def lipschitz_spec_from_json(chart, text):
    d = json.loads(text) if isinstance(text, str) else text
    kind = d.get("kind", "polytope")
    if kind == "cone":
        return cone_lipschitz_spec(chart, d["r"], d.get("center"), d.get("t0", 0.0))
    return polytope_lipschitz_spec(chart, d["vertices"], d["nodes"], d["f_minus"], d["f_plus"],
                                   d.get("annotations"))


def lipschitz_domain(spec: LipschitzDomainSpec, validate=True) -> DomainOracle:
    if validate:
        validate_lipschitz(spec)
    ch = spec.chart

    def member(L):
        m = ch.project_lift(L)
        ok = ~np.isnan(m).any(axis=1)
        res = np.zeros(len(L), bool)
        mm = m[ok]
        x, t = mm[:, 1:], mm[:, 0]
        inV = spec.in_V(x)
        r = np.zeros(len(mm), bool)
        if inV.any():
            r[inV] = (spec.f_minus(x[inV]) < t[inV]) & (t[inV] < spec.f_plus(x[inV]))
        res[ok] = r
        return res

    c = spec.center
    t = (spec.f_minus(c[None]) + spec.f_plus(c[None]))[0] / 2
    base = ch.embed_lift(np.concatenate([[t], c]))
    tb = max(abs(float(spec.f_minus(c[None])[0])), abs(float(spec.f_plus(c[None])[0])))
    return DomainOracle(ch.space, member, base, "lipschitz", chart=ch,
                        radius=spec.radius + tb + 2 * spec.radius,
                        spec={"lipschitz": spec.data, "annotations": spec.annotations})


# ---------------------------------------------------------------- extremal sheet search

class SheetResult(NamedTuple):
    point: CausalPoint
    lam: float
    velocity: np.ndarray  # unit timelike direction from x to the point


def _velocity(W, sgn):
    g = 1.0 / np.sqrt(1.0 - (W * W).sum(axis=1))
    return sgn * np.hstack([g[:, None], W * g[:, None]])


def _last_member(dom, ch, x, V, tmax, steps=64, iters=60):
    """sup{t in (0, tmax] : x + t v in dom}, sampled then bisected."""
    fr = np.linspace(0, 1, steps + 1)[1:]
    T = tmax[:, None] * fr[None, :]  # (k, steps)
    P = x + T[..., None] * V[:, None, :]
    ins = dom.member(ch.embed_lift(P.reshape(-1, len(x)))).reshape(T.shape)
    any_in = ins.any(axis=1)
    j = steps - 1 - np.argmax(ins[:, ::-1], axis=1)  # last sampled member
    lo = np.where(any_in, T[np.arange(len(V)), j], 0.0)
    todo = any_in & (j < steps - 1)
    hi = np.where(todo, T[np.arange(len(V)), np.minimum(j + 1, steps - 1)], np.nan)
    # nothing sampled inside: exit lies before the first step
    first = ~any_in
    hi = np.where(first, T[:, 0], hi)
    todo |= first
    for _ in range(iters):
        mid = (lo + hi) / 2
        inside = dom.member(ch.embed_lift(x + np.where(todo, mid, 0)[:, None] * V))
        lo = np.where(todo & inside, mid, lo)
        hi = np.where(todo & ~inside, mid, hi)
    # the outer end of the bracket: a non-member within bisection resolution
    return np.where(todo, hi, lo)


def extremal_sheet_search(dom: DomainOracle, x: CausalPoint, direction="past", budget=1024,
                          rng=None, tol=1e-12, chart_radius=None):
    """Boundary point a0 where the sheets {q(z - x) = -lam^2} of the past (or future)
    of x last meet the closure of dom.

    lam0 = sup over unit timelike directions v of the largest lam with x + lam v in
    dom; a deterministic Sobol grid of velocities seeds a compass search."""
    if direction not in ("past", "future"):
        raise GeometryError("direction must be 'past' or 'future'")
    ch = x.chart
    if not dom.member(x.lift):
        raise GeometryError("x is not a member")
    rng = rng if rng is not None else np.random.default_rng(0)
    sgn = -1.0 if direction == "past" else 1.0
    k = ch.dim - 1
    R = chart_radius
    if R is None:
        R = dom.radius if (dom.radius and _same_chart(dom.chart, ch)) else _chart_radius(dom, ch, rng)
    span = 2 * np.sqrt(ch.dim) * R + float(np.linalg.norm(x.m))

    def lam(W):
        V = _velocity(W, sgn)
        return _last_member(dom, ch, x.m, V, span / np.linalg.norm(V, axis=1))

    from scipy.stats import qmc

    n = 1
    while n < budget:
        n *= 2
    G = (qmc.Sobol(d=k, scramble=False).random(n) * 2 - 1) * 0.98
    G = G[(G * G).sum(axis=1) < 0.98 ** 2]
    vals = lam(G)
    w = G[np.argmax(vals)]
    best = float(vals.max())
    if best <= 0:
        raise GeometryError("no member found in the requested cone")
    dirs = np.vstack([np.eye(k), -np.eye(k)])
    step = 1.0 / max(len(G), 2) ** (1 / k)
    evals = 0
    while step > tol and evals < 4000:
        extra = rng.standard_normal((2, k))
        D = np.vstack([dirs, extra / np.linalg.norm(extra, axis=1, keepdims=True)])
        C = w + step * D
        C = C[(C * C).sum(axis=1) < 1 - 1e-9]
        if len(C) == 0:
            step /= 2
            continue
        cv = lam(C)
        evals += len(C)
        j = int(np.argmax(cv))
        if cv[j] > best:
            best, w = float(cv[j]), C[j]
            step *= 1.5
        else:
            step /= 2
    v = _velocity(w[None], sgn)[0]
    # a hair outside, so rounding cannot turn the boundary point into a member
    return SheetResult(CausalPoint(x.m + best * (1 + 1e-12) * v, ch), best, v)


class EndgameResult(NamedTuple):
    past: SheetResult
    future: SheetResult
    diamond: DomainOracle
    past_class: str
    future_class: str
    extremal: tuple


def rebuild_diamond(dom: DomainOracle, x: CausalPoint, budget=1024, rng=None, check=True):
    """Extremal points a0 in the past and b0 in the future of x, and D(a0, b0)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    a0 = extremal_sheet_search(dom, x, "past", budget, rng)
    b0 = extremal_sheet_search(dom, x, "future", budget, rng)
    D = causal_diamond(a0.point, b0.point)
    classes = ("", "")
    ext = (None, None)
    if check:
        cloud = sample_members(dom, 2048, rng)
        classes = tuple(_classify_or_mixed(dom, r.point.lift, cloud) for r in (a0, b0))
        ext = tuple(_extremal_or_none(dom, r.point.lift) for r in (a0, b0))
    return EndgameResult(a0, b0, D, classes[0], classes[1], ext)


def _classify_or_mixed(dom, a, cloud):
    try:
        return classify_extremal(dom, a, cloud=cloud)
    except GeometryError:
        return "mixed"


def _extremal_or_none(dom, a):
    try:
        return extremality_check(dom, a)
    except GeometryError:
        return None
