"""Form-preserving group elements, Cartan (KAK) decomposition, contracting sequences."""
from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .domains import DiamondSpec, DomainOracle, sample_members
from .einstein import canonical, lift_of, round_sig
from .forms import FormSpace, GeometryError, lie_algebra_sample


@dataclass(eq=False)
class GroupElement:
    mat: np.ndarray
    space: FormSpace
    tol: float = 1e-8

    def __post_init__(self):
        self.mat = np.asarray(self.mat, float)
        n = self.space.dim
        if self.mat.shape != (n, n):
            raise GeometryError(f"expected a {n}x{n} matrix")
        G = self.space.gram
        err = np.abs(self.mat.T @ G @ self.mat - G).max()
        if err > self.tol * max(1.0, np.abs(self.mat).max() ** 2):
            raise GeometryError(f"matrix does not preserve the form (error {err:.2e})")

    def __matmul__(self, other):
        if isinstance(other, GroupElement):
            return GroupElement(self.mat @ other.mat, self.space, self.tol)
        return NotImplemented

    def act(self, lifts):
        """Images of lifts (rows)."""
        return np.asarray(lifts, float) @ self.mat.T

    def inverse(self):
        G = self.space.gram
        return GroupElement(np.linalg.solve(G, self.mat.T @ G), self.space, self.tol)

    def to_json(self):
        return {"mat": round_sig(self.mat)}


def random_element(space: FormSpace, rng, scale=1.0, max_cond=1e6):
    """exp of a Lie-algebra sample, rescaled so the condition number stays <= max_cond."""
    X = lie_algebra_sample(space, rng, scale)
    # cond(exp X) <= exp(2 |X|)
    lim = np.log(max_cond) / 2
    nx = np.linalg.norm(X, 2)
    if nx > lim:
        X *= lim / nx
    return GroupElement(expm(X), space)


def diagonal_element(space: FormSpace, lambdas):
    """diag(l0, ..., lp, 1, ..., 1, 1/lp, ..., 1/l0) in a split-basis space."""
    n = space.dim
    lam = np.asarray(lambdas, float)
    if np.any(lam <= 0):
        raise GeometryError("diagonal entries must be positive")
    m = len(lam)
    if 2 * m > n:
        raise GeometryError("too many eigenvalues for this signature")
    d = np.ones(n)
    d[:m] = lam
    d[n - m:] = 1 / lam[::-1]
    return GroupElement(np.diag(d), space)


def factor_translation(spec: DiamondSpec, t, which=0, u=None):
    """exp(t X) with X a boost in the plane (e_i, u) of factor V_i; preserves the diamond."""
    sp = spec.space
    V, e = (spec.V0, spec.e0) if which == 0 else (spec.V1, spec.e1)
    if u is None:
        # first vector of V b-orthogonal to e, normalized
        for v in V:
            w = v - sp.b(v, e) / sp.q(e) * e
            if abs(sp.q(w)) > 1e-9:
                u = w / np.sqrt(abs(sp.q(w)))
                break
    X = (np.outer(e, u) - np.outer(u, e)) @ sp.gram
    return GroupElement(expm(t * X), sp)


# ---------------------------------------------------------------- Cartan decomposition

class CartanData(NamedTuple):
    lambdas: np.ndarray
    kappa: np.ndarray  # in the space's own basis
    a: np.ndarray
    kappa_prime: np.ndarray
    error: float


def _boost(P, Q, sig_vals):
    """exp of the block matrix [[0, S], [S^T, 0]] with S = diag(sig_vals) (P x Q)."""
    n = P + Q
    A = np.eye(n)
    for i, s in enumerate(sig_vals):
        c, sh = np.cosh(s), np.sinh(s)
        A[i, i] = A[P + i, P + i] = c
        A[i, P + i] = A[P + i, i] = sh
    return A


def cartan_decompose(g: GroupElement) -> CartanData:
    """g = kappa a kappa' with kappa, kappa' in the maximal compact subgroup.

    In a b-orthonormal frame the compact subgroup is O(P) x O(Q).  Polar
    decomposition g = k s gives s = exp [[0, Y], [Y^T, 0]], and the SVD of Y
    aligns the boosts."""
    sp = g.space
    F = sp.frame()
    Fi = np.linalg.inv(F)
    h = Fi @ g.mat @ F
    P, Q = sp.sig
    W, S, Zt = np.linalg.svd(h)
    k = W @ Zt
    m = min(P, Q)
    # the small singular values are reciprocals of the large ones, but the SVD only
    # resolves them to eps * |h|; build Y from the top m singular pairs alone
    Z = Zt[:m]
    Y = 2 * (Z[:, :P].T * np.log(S[:m])) @ Z[:, P:]
    U, sig, Vt = np.linalg.svd(Y)
    Ufull = np.zeros((P + Q, P + Q))
    Ufull[:P, :P] = U
    Ufull[P:, P:] = Vt.T
    a = _boost(P, Q, sig[:m])
    kap = k @ Ufull
    kap_p = Ufull.T
    lam = np.exp(sig[:m])
    recon = kap @ a @ kap_p
    err = float(np.linalg.norm(recon - h) / np.linalg.norm(h))
    return CartanData(lam, F @ kap @ Fi, F @ a @ Fi, F @ kap_p @ Fi, err)


def cartan_lambdas(g: GroupElement):
    """lambda_0 >= ... >= 1: the top min(P, Q) singular values in a b-orthonormal frame.

    Read directly off the SVD, which keeps them accurate far beyond the range where
    the polar logarithm in cartan_decompose is reliable."""
    sp = g.space
    F = sp.frame()
    h = np.linalg.solve(F, g.mat @ F)
    s = np.linalg.svd(h, compute_uv=False)
    return np.maximum(s[: min(sp.sig)], 1.0)


# ---------------------------------------------------------------- contraction

class ContractionReport(NamedTuple):
    contracting: bool
    ratios: np.ndarray  # (len(seq), p) values lambda_0 / lambda_i
    message: str


def is_contracting(seq, tail=1 / 3, threshold=1e3, saturation=1e12):
    """Finite-sample judgment of lambda_0/lambda_i -> infinity for every i >= 1.

    Since lambda_1 >= lambda_i it suffices to watch lambda_0/lambda_1: it must
    increase strictly over the last third of the sequence and end at or above
    threshold.  Past `saturation` lambda_1 is lost to rounding (it sits near
    eps * lambda_0), so saturated steps count as increasing.  With a single
    lambda (Riemannian case) lambda_0 itself is tested."""
    if len(seq) == 0:
        raise GeometryError("empty sequence")
    L = np.array([cartan_lambdas(g) for g in seq])
    R = L[:, :1] / L[:, 1:] if L.shape[1] > 1 else L[:, :1]
    start = min(int(len(seq) * (1 - tail)), len(seq) - 2)
    T = R[max(start, 0):, 0]
    if len(T) < 2:
        return ContractionReport(False, R, "finite-sample judgment: sequence too short")
    sat = (T[1:] >= saturation) & (T[:-1] >= saturation)
    inc = bool(np.all((np.diff(T) > 0) | sat))
    big = bool(T[-1] >= threshold)
    ok = inc and big
    msg = "finite-sample judgment: " + ("ratios diverge on the tail" if ok else
                                        "ratios not increasing" if not inc else "ratios below threshold")
    return ContractionReport(ok, R, msg)


def projective_diameter(lifts):
    """Max pairwise angle between the lines spanned by the rows."""
    U = np.asarray(lifts, float)
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    # chord form stays accurate for tiny angles
    D = np.linalg.norm(U[:, None, :] - U[None, :, :], axis=2)
    S = np.linalg.norm(U[:, None, :] + U[None, :, :], axis=2)
    return float(2 * np.arcsin(np.minimum(np.minimum(D, S).max() / 2, 1.0)))


class TransportReport(NamedTuple):
    diameters: np.ndarray
    limit: np.ndarray | None
    repeller: np.ndarray | str  # lift, or "undetermined"
    converged: bool


def transport_compact(seq, cloud, eps=1e-6):
    """Diameter trace of g_k(cloud); limit point when it shrinks below eps.

    The repelling vertex y is taken from the Cartan data (kappa'^{-1} of the
    contracted null direction) and reported only if it is stable over the tail."""
    cloud = np.atleast_2d(cloud)
    diams = []
    imgs = None
    for g in seq:
        imgs = g.act(cloud)
        diams.append(projective_diameter(imgs))
    diams = np.array(diams)
    conv = bool(diams[-1] < eps)
    limit = None
    if conv:
        # align signs before averaging
        ref = imgs[0]
        s = np.sign(imgs @ ref)
        limit = canonical((imgs * s[:, None]).sum(axis=0))
    rep = "undetermined"
    if conv:
        ys = [_repeller(g) for g in seq[-max(3, len(seq) // 3):]]
        if all(y is not None for y in ys):
            Y = canonical(np.array(ys))
            if np.all(np.abs(np.abs(Y @ Y[-1]) - 1) < 1e-6):
                rep = Y[-1]
    return TransportReport(diams, limit, rep, conv)


def _repeller(g: GroupElement, gap=1e3):
    """Null point y with C(y) = {v : v . z0 = 0}, z0 the top right singular vector in a
    b-orthonormal frame; only points off C(y) feel the top expansion.  None without
    a clear gap between the first two singular values."""
    sp = g.space
    F = sp.frame()
    h = np.linalg.solve(F, g.mat @ F)
    _, s, Vt = np.linalg.svd(h)
    if s[0] < gap * s[1]:
        return None
    J = np.diag([-1.0] * sp.sig.p + [1.0] * sp.sig.q)
    return F @ (J @ Vt[0])


# ---------------------------------------------------------------- orbits in domains

class OrbitReport(NamedTuple):
    trajectory: np.ndarray
    preserved: bool
    k_closed: bool
    k_fraction: float


def _k_test(space, cand, ref):
    vals = canonical(cand) @ space.gram @ ref.T
    return (vals > 0).all(axis=1) | (vals < 0).all(axis=1)


def orbit_scan(dom: DomainOracle, seq, basept, ksamples=None, n=256, rng=None):
    """Trajectory of basept under seq; transported K samples must stay in K."""
    rng = rng if rng is not None else np.random.default_rng(0)
    cloud = sample_members(dom, n, rng)
    for g in seq:
        if not dom.member(g.act(cloud)).all():
            raise GeometryError("sequence does not preserve the domain on samples")
    traj = np.array([g.act(lift_of(basept)[None])[0] for g in seq])
    ref = dom.chart.normalize(cloud)
    ref = ref / np.linalg.norm(ref, axis=1, keepdims=True)
    if ksamples is None and dom.k_sampler is not None:
        ksamples = dom.k_sampler(n, rng)
    if ksamples is None or len(ksamples) == 0:
        return OrbitReport(traj, True, True, float("nan"))
    ok = np.concatenate([_k_test(dom.space, g.act(ksamples), ref) for g in seq])
    return OrbitReport(traj, True, bool(ok.all()), float(ok.mean()))


# ---------------------------------------------------------------- sequences from JSON

_ALLOWED = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt, "cosh": np.cosh, "sinh": np.sinh}


def _eval_expr(expr, k):
    tree = ast.parse(str(expr), mode="eval")
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id not in _ALLOWED and node.id != "k":
            raise GeometryError(f"unknown name {node.id!r} in expression")
        if isinstance(node, (ast.Attribute, ast.Subscript, ast.Lambda)):
            raise GeometryError("unsupported expression")
    return float(eval(compile(tree, "<expr>", "eval"), {"__builtins__": {}}, {**_ALLOWED, "k": k}))


def sequence_from_json(data, space=None):
    """Either {"sig": [p, q], "matrices": [...]} or
    {"sig": [p, q], "family": "diagonal", "lambdas": ["k**2", "k"], "k": [1, 2, ...]}."""
    d = json.loads(data) if isinstance(data, str) else data
    p, q = d["sig"]
    if d.get("family") == "diagonal":
        space = space or FormSpace.ein(p, q, "split")
        ks = d.get("k") or list(range(1, 31))
        return [diagonal_element(space, [_eval_expr(e, k) for e in d["lambdas"]]) for k in ks]
    space = space or FormSpace.ein(p, q)
    return [GroupElement(np.array(m, float), space) for m in d["matrices"]]


def trajectory_csv(traj, chart=None):
    P = chart.project_lift(traj) if chart is not None else traj
    return "\n".join(",".join(repr(float(v)) for v in round_sig(r)) for r in P) + "\n"
