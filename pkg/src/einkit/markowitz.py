"""Markowitz pseudodistance: photon segment lengths, chains, two-sided bounds."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .domains import DiamondSpec, DomainOracle, diamond_member
from .einstein import Photon, canonical, lift_of, round_sig
from .forms import GeometryError, hyperboloid_distance


def dhyp_interval(s, t):
    """Distance on (-1, 1) for the metric 4dx^2/(1-x^2)^2."""
    s, t = float(s), float(t)
    if not (-1 < s < 1 and -1 < t < 1):
        raise GeometryError("parameters must lie in (-1, 1)")
    return abs(np.log(((1 + t) * (1 - s)) / ((1 - t) * (1 + s))))


def _photon_frame(x, y):
    """Unit lift a of x and null d orthogonal to a with P(y) = P(cos t a + sin t d)."""
    a = canonical(x)
    y = canonical(y)
    c = float(a @ y)
    d = y - c * a
    s = np.linalg.norm(d)
    if s < 1e-14:
        return a, None, 0.0
    d /= s
    return a, d, float(np.arctan2(s, c))


def _angle_in_arc(t, lo, hi):
    """Representative of t mod pi inside (lo, hi), or None."""
    for k in (0, -1, 1, -2, 2):
        tt = t + k * np.pi
        if lo < tt < hi:
            return tt
    return None


def _log_cr(lo, tx, ty, hi):
    # projective cross-ratio of angle parameters: [sin] brackets of 2x2 determinants
    cr = np.sin(tx - lo) * np.sin(ty - hi) / (np.sin(tx - hi) * np.sin(ty - lo))
    return float(abs(np.log(abs(cr))))


def segment_length(dom: DomainOracle, x, y, ph: Photon | None = None, tol=1e-9):
    """|log CR(a, x, y, b)| with a, b the ends of the component of ph n dom through x."""
    sp = dom.space
    xl, yl = canonical(lift_of(x)), canonical(lift_of(y))
    if abs(1 - abs(xl @ yl)) < 1e-14:
        return 0.0
    if abs(sp.b(xl, yl)) > tol * sp.scale:
        raise GeometryError("points are not on a common photon")
    if ph is not None and not (ph.contains(xl, 1e-7) and ph.contains(yl, 1e-7)):
        raise GeometryError("points are not on the given photon")
    a, d, t = _photon_frame(xl, yl)
    lo, hi = dom.photon_arc(a, d)
    lo, hi = float(lo[0]), float(hi[0])
    if not np.isfinite(lo):
        raise GeometryError("x is not in the domain")
    ty = _angle_in_arc(t, lo, hi)
    if ty is None:
        raise GeometryError("x and y lie in different components of the photon")
    return _log_cr(lo, 0.0, ty, hi)


def _angles_in_arcs(t, lo, hi):
    """Vectorized _angle_in_arc; NaN where no representative fits."""
    ks = np.array([0, -1, 1, -2, 2])
    cand = t[:, None] + ks[None, :] * np.pi
    ok = (cand > lo[:, None]) & (cand < hi[:, None])
    first = np.argmax(ok, axis=1)
    out = cand[np.arange(len(t)), first]
    return np.where(ok.any(axis=1), out, np.nan)


def segment_lengths(dom: DomainOracle, X, Y, check_points=32):
    """Vectorized segment lengths for incident pairs; inf when the segment leaves dom.

    Segments are also sampled at check_points interior points, unless the
    domain has a closed-form arc solver (then the arc already decides it)."""
    if dom.arc_solver is not None:
        check_points = 0
    X = canonical(np.atleast_2d(X))
    Y = canonical(np.atleast_2d(Y))
    c = np.einsum("ij,ij->i", X, Y)
    D = Y - c[:, None] * X
    s = np.linalg.norm(D, axis=1)
    same = s < 1e-14
    D[~same] /= s[~same, None]
    D[same] = 0
    t = np.arctan2(s, c)
    out = np.full(len(X), np.inf)
    out[same] = 0.0
    idx = np.flatnonzero(~same)
    if len(idx) == 0:
        return out
    lo, hi = dom.photon_arc(X[idx], D[idx])
    with np.errstate(invalid="ignore"):
        ty = _angles_in_arcs(t[idx], lo, hi)
        good = np.isfinite(ty)
        l, h, tt = lo[good], hi[good], ty[good]
        cr = np.sin(tt - h) * np.sin(-l) / (np.sin(-h) * np.sin(tt - l))
    idx, ty = idx[good], tt
    out[idx] = np.abs(np.log(np.abs(cr)))
    if check_points and len(idx):
        # sampled containment along the segment
        fr = np.linspace(0, 1, check_points + 2)[1:-1]
        ang = ty[:, None] * fr[None, :]
        P = np.cos(ang)[..., None] * X[idx, None, :] + np.sin(ang)[..., None] * D[idx, None, :]
        inside = dom.member(P.reshape(-1, X.shape[1])).reshape(len(idx), -1).all(axis=1)
        out[idx[~inside]] = np.inf
    return out


@dataclass
class Chain:
    """Photon chain x_0, ..., x_N; consecutive nodes share a photon."""
    nodes: np.ndarray

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, float))

    @property
    def index(self):
        return len(self.nodes) - 1

    def reversed(self):
        return Chain(self.nodes[::-1].copy())

    def concat(self, other):
        if abs(1 - abs(canonical(self.nodes[-1]) @ canonical(other.nodes[0]))) > 1e-10:
            raise GeometryError("chains do not share an endpoint")
        return Chain(np.vstack([self.nodes, other.nodes[1:]]))

    def check(self, space, tol=1e-8):
        N = canonical(self.nodes)
        inc = np.abs(np.einsum("ij,jk,ik->i", N[:-1], space.gram, N[1:]))
        if np.any(inc > tol * space.scale):
            raise GeometryError("consecutive nodes are not on a common photon")

    def to_csv(self, chart):
        m = chart.project_lift(self.nodes)
        return "\n".join(",".join(repr(float(v)) for v in round_sig(row)) for row in m) + "\n"


def chain_length(dom: DomainOracle, chain: Chain):
    chain.check(dom.space)
    if chain.index == 0:
        return 0.0
    L = segment_lengths(dom, chain.nodes[:-1], chain.nodes[1:])
    if not np.all(np.isfinite(L)):
        raise GeometryError("a chain segment leaves the domain")
    return float(L.sum())


def lower_bound(dom: DomainOracle, x, y, kset):
    """max over sampled xi1, xi2 of log|[xi1 : x : y : xi2]|."""
    K = np.atleast_2d(np.asarray(kset, float))
    if K.size == 0:
        raise GeometryError("empty K sample set")
    sp = dom.space
    xl, yl = canonical(lift_of(x)), canonical(lift_of(y))
    bx = K @ sp.gram @ xl
    by = K @ sp.gram @ yl
    ok = (np.abs(bx) > 1e-300) & (np.abs(by) > 1e-300)
    if not ok.any():
        raise GeometryError("all K samples are incident to x or y")
    f = np.log(np.abs(bx[ok])) - np.log(np.abs(by[ok]))
    return float(f.max() - f.min())


def photon_end_supports(dom: DomainOracle, x, y, budget=512, rng=None):
    """Supporting vertices (points of K) at the two ends of the photon segment through x, y.

    Any such vertex xi has b(xi, end) = 0, which makes the cross-ratio sup over K
    attain |log CR| on that photon."""
    from .domains import dual_convexity_check

    xl, yl = canonical(lift_of(x)), canonical(lift_of(y))
    a, d, _ = _photon_frame(xl, yl)
    if d is None:
        raise GeometryError("points coincide")
    lo, hi = dom.photon_arc(a, d)
    out = []
    for t in (float(lo[0]), float(hi[0])):
        if not np.isfinite(t) or abs(abs(t) - np.pi) < 1e-12:
            continue
        end = np.cos(t) * a + np.sin(t) * d
        if dom.support is not None:
            out.append(np.atleast_2d(dom.support(end)))
            continue
        push = np.cos(t * (1 + 1e-9)) * a + np.sin(t * (1 + 1e-9)) * d
        res = dual_convexity_check(dom, push, budget, rng)
        if res.vertex is not None:
            out.append(res.vertex[None])
    return np.vstack(out) if out else np.empty((0, dom.space.dim))


def closed_form_diamond(spec: DiamondSpec, x, y):
    """2 max(d(x0,y0), d(x1,y1)) with d the unit-hyperboloid distance of each factor.

    The factor 2 converts arccosh distances of the sheets b = -1 into the
    normalization in which a photon segment has length |log CR|."""
    xl, yl = lift_of(x), lift_of(y)
    if not (diamond_member(spec, xl) and diamond_member(spec, yl)):
        raise GeometryError("points must be diamond members")
    d0, d1 = factor_distances(spec, xl, yl)
    return 2.0 * max(d0, d1)


def factor_distances(spec, x, y):
    sp = spec.space
    X0, X1 = spec.factors(x)
    Y0, Y1 = spec.factors(y)
    return hyperboloid_distance(sp, X0, Y0, -1), hyperboloid_distance(sp, X1, Y1, +1)


def _geodesic(space, X, Y, t, fallback=None):
    """Point at signed distance t from X toward Y on the common sheet of X and Y."""
    sgn = space.q(X)  # -1 or +1
    T = Y - sgn * space.b(X, Y) * X
    n = np.sqrt(abs(space.q(T)))  # sinh of the distance
    if n < 1e-14:
        if fallback is None:
            return X.copy()
        T = fallback
    else:
        T = T / n
        T = T - sgn * space.b(X, T) * X  # second pass: T is tiny and noisy for close points
        T = T / np.sqrt(abs(space.q(T)))
    return np.cosh(t) * X + np.sinh(t) * T


def _tangent_at(space, X, V):
    """Some unit tangent vector to the sheet at X inside span(V)."""
    sgn = space.q(X)
    for v in V:
        T = v - space.b(v, X) / sgn * X
        qt = space.q(T)
        if abs(qt) > 1e-8:
            return T / np.sqrt(abs(qt))
    raise GeometryError("factor has no tangent direction")


def two_segment_chain(spec: DiamondSpec, x, y):
    """Chain x -> z -> y in the diamond with both segments on photons.

    In the factor with the smaller separation z moves away from y by
    s = (d_max - d_min)/2; in the other factor it sits on [x, y] at distance s."""
    sp = spec.space
    xl, yl = lift_of(x), lift_of(y)
    if abs(1 - abs(canonical(xl) @ canonical(yl))) < 1e-14:
        raise GeometryError("points coincide")
    X0, X1 = spec.factors(xl)
    Y0, Y1 = spec.factors(yl)
    d0 = hyperboloid_distance(sp, X0, Y0, -1)
    d1 = hyperboloid_distance(sp, X1, Y1, +1)
    if abs(d0 - d1) <= 1e-12 * max(1.0, d0):
        return Chain(np.stack([X0 + X1, Y0 + Y1]))
    s = abs(d0 - d1) / 2
    if d0 < d1:
        fb = _tangent_at(sp, X0, spec.V0) if d0 < 1e-14 else None
        Z0 = _geodesic(sp, X0, Y0, -s, fb)
        Z1 = _geodesic(sp, X1, Y1, s)
    else:
        fb = _tangent_at(sp, X1, spec.V1) if d1 < 1e-14 else None
        Z1 = _geodesic(sp, X1, Y1, -s, fb)
        Z0 = _geodesic(sp, X0, Y0, s)
    # rounding in a tiny factor step leaks across the splitting; put each part back
    # on its own sheet so the midpoint is null
    Z0, Z1 = spec.split(Z0 + Z1)
    Z0, Z1 = Z0 / np.sqrt(-sp.q(Z0)), Z1 / np.sqrt(sp.q(Z1))
    return Chain(np.stack([X0 + X1, Z0 + Z1, Y0 + Y1]))


# ---------------------------------------------------------------- upper bounds

@dataclass
class LengthReport:
    upper: float | None
    lower: float | None
    exact: float | None = None
    chain: Chain | None = None
    message: str = "ok"

    def to_dict(self, chart=None):
        out = {"upper": round_sig(self.upper), "lower": round_sig(self.lower)}
        if self.exact is not None:
            out["exact"] = round_sig(self.exact)
        if self.chain is not None:
            nodes = self.chain.nodes if chart is None else chart.project_lift(self.chain.nodes)
            out["chain"] = round_sig(np.asarray(nodes))
        if self.message != "ok":
            out["message"] = self.message
        return out


def _double_cone_points(space, x, y, n, rng):
    """Points of C(x) n C(y): null vectors of {x, y}^perp."""
    return _double_cone_batch(space, x[None], y, n, rng)


def _double_cone_batch(space, A, y, n, rng):
    """n points of C(a) n C(y) for each row a of A (skipping a incident to y)."""
    A = np.atleast_2d(A)
    G = space.gram
    A = A[np.abs(A @ G @ y) > 1e-12 * space.scale]
    if len(A) == 0:
        return np.empty((0, space.dim))
    M = np.stack([A @ G, np.broadcast_to(y @ G, A.shape)], axis=1)  # (k, 2, dim)
    _, _, vt = np.linalg.svd(M)
    W = vt[:, 2:, :]  # rows spanning {a, y}^perp
    GW = np.einsum("kij,jl,kml->kim", W, G, W)
    ev, vec = np.linalg.eigh(GW)  # ascending: negatives first
    W = np.einsum("kji,kjl->kil", vec / np.sqrt(np.abs(ev))[:, None, :], W)
    p = space.sig.p - 1
    g = rng.standard_normal((len(A), n, W.shape[1]))
    a, c = g[..., :p], g[..., p:]
    a /= np.linalg.norm(a, axis=-1, keepdims=True)
    c /= np.linalg.norm(c, axis=-1, keepdims=True)
    return np.einsum("kni,kil->knl", np.concatenate([a, c], axis=-1), W).reshape(-1, space.dim)


def _photon_points(dom, x, n, rng, per=2):
    """Members on photons through x, at random fractions of each arc."""
    from .einstein import null_directions

    d = null_directions(dom.space, x, n, rng, sobol=False)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    A = np.repeat(x[None], n, axis=0)
    lo, hi = dom.photon_arc(A, d)
    ok = np.isfinite(lo)
    pts = []
    for _ in range(per):
        f = rng.uniform(0.05, 0.95, n)
        side = rng.random(n) < 0.5
        t = np.where(side, hi * f, lo * f)
        pts.append((np.cos(t)[:, None] * A + np.sin(t)[:, None] * d)[ok])
    return np.vstack(pts)


def upper_bound(dom: DomainOracle, x, y, N_max=3, budget=512, rng=None, seeds=None,
                polish=48):
    """Shortest chain of index <= N_max through a sampled waypoint graph.

    Waypoints: points of C(x) n C(y) (index 2), points on photons through x and y,
    and points of C(w) n C(y) for waypoints w on photons through x (index 3).
    Edges join photon-incident pairs whose segment stays in the domain.
    Returns (value, Chain) or (None, None) when no chain is found."""
    rng = rng if rng is not None else np.random.default_rng(0)
    sp = dom.space
    xl, yl = canonical(lift_of(x)), canonical(lift_of(y))
    if abs(1 - abs(xl @ yl)) < 1e-14:
        return 0.0, Chain(xl[None])
    nodes = [xl[None], yl[None]]
    if seeds is None and dom.chain_seed is not None:
        try:
            seeds = dom.chain_seed(xl, yl)
        except GeometryError:
            seeds = None
    if seeds is not None and len(seeds):
        nodes.append(np.atleast_2d(seeds))
    if N_max >= 2:
        nodes.append(_double_cone_points(sp, xl, yl, budget // 2, rng))
    if N_max >= 3:
        k = max(budget // 16, 2)
        A = _photon_points(dom, xl, k, rng, per=1)
        B = _photon_points(dom, yl, k, rng, per=1)
        nodes += [A, B]
        per = max((budget // 2 - 2 * k) // max(len(A), 1), 1)
        nodes.append(_double_cone_batch(sp, canonical(A[: budget // 8]), yl, per, rng))
    V = canonical(np.vstack([v for v in nodes if len(v)]))
    _, keep = np.unique(np.round(V, 9), axis=0, return_index=True)
    keep = np.union1d(keep, [0, 1])
    V = V[np.sort(keep)]
    V = V[np.concatenate([[True, True], dom.member(V[2:])])]
    n = len(V)
    gram = V @ sp.gram @ V.T
    inc = np.abs(gram) <= 1e-9 * sp.scale
    np.fill_diagonal(inc, False)
    I, J = np.nonzero(np.triu(inc))
    W = np.full((n, n), np.inf)
    if len(I):
        L = segment_lengths(dom, V[I], V[J])
        W[I, J] = L
        W[J, I] = L
    # Bellman-Ford limited to N_max edges, from node 0 to node 1
    dist = np.full(n, np.inf)
    dist[0] = 0.0
    pred = []
    for _ in range(N_max):
        cand = dist[:, None] + W
        j = np.argmin(cand, axis=0)
        new = cand[j, np.arange(n)]
        better = new < dist
        pr = np.where(better, j, -1)
        dist = np.where(better, new, dist)
        pred.append(pr)
    if not np.isfinite(dist[1]):
        return None, None
    # rebuild path: walk back through the rounds
    path = [1]
    cur = 1
    for pr in reversed(pred):
        if cur == 0:
            break
        if pr[cur] >= 0:
            cur = pr[cur]
            path.append(cur)
    path = path[::-1]
    if path[0] != 0:
        path = [0] + path
    chain = Chain(V[path])
    val = float(dist[1])
    if polish and chain.index == 2 and seeds is None:
        val, chain = _polish_two(dom, xl, yl, chain, val, polish, rng)
    return val, chain


def _polish_two(dom, x, y, chain, val, rounds, rng):
    """Random local search for the middle node of a 2-chain inside C(x) n C(y)."""
    from .einstein import _orthonormal_rows
    from .forms import b_complement

    sp = dom.space
    W = _orthonormal_rows(sp, b_complement(sp, np.stack([x, y])))
    G = np.einsum("ij,jk,ik->i", W, sp.gram, W)
    p = int((G < 0).sum())
    z = canonical(chain.nodes[1])
    coef = np.linalg.lstsq(W.T, z, rcond=None)[0]
    a, c = coef[:p], coef[p:]
    s = np.linalg.norm(c)
    a, c = a / s, c / s
    step = 0.1
    for _ in range(rounds):
        ta = a + step * rng.standard_normal((16, p))
        tc = c + step * rng.standard_normal((16, len(c)))
        ta /= np.linalg.norm(ta, axis=1, keepdims=True)
        tc /= np.linalg.norm(tc, axis=1, keepdims=True)
        Z = np.hstack([ta, tc]) @ W
        l1 = segment_lengths(dom, np.repeat(x[None], 16, 0), Z)
        l2 = segment_lengths(dom, Z, np.repeat(y[None], 16, 0))
        tot = l1 + l2
        k = int(np.argmin(tot))
        if tot[k] < val:
            val = float(tot[k])
            a, c = ta[k], tc[k]
            step *= 1.3
        else:
            step *= 0.6
        if step < 1e-9:
            break
    z = np.concatenate([a, c]) @ W
    return val, Chain(np.stack([x, z, y]))


def distance_report(dom: DomainOracle, x, y, kset=None, spec: DiamondSpec | None = None,
                    N_max=3, budget=512, rng=None):
    """LengthReport with both bounds (and the closed form for diamonds)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    seeds = None
    exact = None
    if spec is not None:
        exact = closed_form_diamond(spec, x, y)
        if abs(1 - abs(canonical(lift_of(x)) @ canonical(lift_of(y)))) > 1e-14:
            seeds = two_segment_chain(spec, x, y).nodes[1:-1]
    up, ch = upper_bound(dom, x, y, N_max, budget, rng, seeds=seeds)
    lo = lower_bound(dom, x, y, kset) if kset is not None and len(kset) else None
    msg = "ok" if up is not None else "no chain found within budget"
    return LengthReport(up, lo, exact, ch, msg)
