"""Indefinite bilinear forms on R^n: evaluation, inertia, hyperboloid distances."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class GeometryError(ValueError):
    """Raised when an input violates a geometric precondition."""


class Signature(NamedTuple):
    p: int  # number of minus signs
    q: int  # number of plus signs

    def check(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise GeometryError(f"invalid signature {tuple(self)}")
        return self

    @property
    def dim(self):
        return self.p + self.q


class Inertia(NamedTuple):
    p: int
    q: int
    degeneracy: int


def inertia(mat, rtol=1e-9):
    """Sign counts (neg, pos, zero) of a symmetric matrix."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return Inertia(0, 0, 0)
    ev = np.linalg.eigvalsh((mat + mat.T) / 2)
    cut = rtol * max(1.0, np.abs(ev).max())
    return Inertia(int((ev < -cut).sum()), int((ev > cut).sum()), int((np.abs(ev) <= cut).sum()))


@dataclass(frozen=True, eq=False)
class FormSpace:
    gram: np.ndarray
    sig: Signature
    tol: float = 1e-9
    name: str = "custom"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g = np.array(self.gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise GeometryError("gram must be square")
        if not np.allclose(g, g.T, atol=1e-13):
            raise GeometryError("gram must be symmetric")
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)
        sig = Signature(*self.sig).check()
        object.__setattr__(self, "sig", sig)
        if sig.dim != g.shape[0]:
            raise GeometryError("signature does not match dimension")
        if self.tol <= 0:
            raise GeometryError("tol must be positive")
        found = inertia(g)
        if (found.p, found.q) != tuple(sig) or found.degeneracy:
            raise GeometryError(f"gram has inertia {tuple(found)}, expected {tuple(sig)}")

    @property
    def dim(self):
        return self.gram.shape[0]

    @classmethod
    def orthonormal(cls, p, q, tol=1e-9):
        """diag(-I_p, I_q)."""
        return cls(np.diag([-1.0] * p + [1.0] * q), Signature(p, q), tol, "orthonormal")

    @classmethod
    def split(cls, p, q, tol=1e-9):
        """Form v0*v_{n-1} + v1*v_{n-2} + ... plus squares in the middle block."""
        n = p + q
        m = min(p, q)
        g = np.zeros((n, n))
        for i in range(m):
            g[i, n - 1 - i] = g[n - 1 - i, i] = 0.5
        sign = 1.0 if q >= p else -1.0
        for i in range(m, n - m):
            g[i, i] = sign
        return cls(g, Signature(p, q), tol, "split")

    @classmethod
    def ein(cls, p, q, basis="orthonormal", tol=1e-9):
        """Ambient space R^{p+1,q+1} of Ein^{p,q}."""
        maker = {"orthonormal": cls.orthonormal, "split": cls.split}[basis]
        return maker(p + 1, q + 1, tol)

    @property
    def ein_sig(self):
        return Signature(self.sig.p - 1, self.sig.q - 1)

    def q(self, v):
        v = self._check(v)
        return ((v @ self.gram) * v).sum(axis=-1)

    def b(self, u, v):
        u, v = self._check(u), self._check(v)
        return ((u @ self.gram) * v).sum(axis=-1)

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise GeometryError(f"expected vectors of length {self.dim}, got {v.shape[-1]}")
        return v

    @property
    def scale(self):
        return float(np.abs(self.gram).max())

    def is_null(self, v, tol=None):
        """Isotropy after unit Euclidean normalization."""
        tol = self.tol if tol is None else tol
        v = self._check(v)
        nrm2 = np.einsum("...i,...i->...", v, v)
        return np.abs(self.q(v)) <= tol * self.scale * nrm2

    def classify(self, v, tol=None):
        tol = self.tol if tol is None else tol
        v = np.asarray(v, dtype=float)
        val = self.q(v) / np.dot(v, v)
        if abs(val) <= tol * self.scale:
            return "lightlike"
        return "timelike" if val < 0 else "spacelike"

    def frame(self):
        """Columns: a b-orthonormal basis, the p timelike vectors first."""
        if "frame" not in self._cache:
            ev, vec = np.linalg.eigh(self.gram)
            order = np.argsort(ev)  # negatives first
            ev, vec = ev[order], vec[:, order]
            self._cache["frame"] = vec / np.sqrt(np.abs(ev))
        return self._cache["frame"]

    def __repr__(self):
        return f"FormSpace({self.name}, sig={tuple(self.sig)})"


def split_to_orthonormal(p, q):
    """Matrix T with x_orth = T @ v_split and T^T diag(-I,I) T = split gram."""
    n = p + q
    m = min(p, q)
    T = np.zeros((n, n))
    for k in range(m):
        j = n - 1 - k
        T[k, k], T[k, j] = 0.5, -0.5  # timelike combination
        T[p + k, k], T[p + k, j] = 0.5, 0.5
    if q >= p:
        for i, idx in enumerate(range(m, n - m)):
            T[p + m + i, idx] = 1.0
    else:
        for i, idx in enumerate(range(m, n - m)):
            T[m + i, idx] = 1.0
    return T


def q_eval(space: FormSpace, v):
    return space.q(v)


def b_eval(space: FormSpace, u, v):
    return space.b(u, v)


def hyperboloid_distance(space: FormSpace, u, v, sheet_sign=-1, tol=None):
    """Distance on the sheet {b(x,x) = sheet_sign} containing u and v.

    sheet_sign=-1 is the usual hyperboloid in signature (1,m); sheet_sign=+1
    is its negative copy in signature (m,1).
    """
    if sheet_sign not in (-1, 1):
        raise GeometryError("sheet_sign must be +1 or -1")
    tol = 1e-7 if tol is None else tol
    u, v = np.asarray(u, float), np.asarray(v, float)
    for w in (u, v):
        if abs(space.q(w) - sheet_sign) > tol * max(1.0, float(np.dot(w, w))):
            raise GeometryError("point is not on the quadric")
    c = sheet_sign * space.b(u, v)
    if c < 1 - tol * max(1.0, float(np.linalg.norm(u) * np.linalg.norm(v))):
        raise GeometryError("points lie on opposite sheets")
    # q(u - v) = -4 sheet_sign sinh^2(d/2): unlike arccosh(c), accurate for close points
    h = max(-sheet_sign * space.q(u - v), 0.0)
    return float(2 * np.arcsinh(np.sqrt(h) / 2))


def signature_of_subspace(space: FormSpace, basis, rtol=1e-9):
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.shape[1] != space.dim:
        raise GeometryError("basis vectors have wrong length")
    s = np.linalg.svd(B, compute_uv=False)
    if s.min() <= 1e-10 * s.max():
        raise GeometryError("basis is linearly dependent")
    # orthonormalize first so the inertia threshold is scale free
    Q = np.linalg.qr(B.T)[0].T
    return inertia(Q @ space.gram @ Q.T, rtol)


def null_space(mat, rtol=1e-10):
    """Orthonormal rows spanning the kernel of mat."""
    mat = np.atleast_2d(mat)
    u, s, vt = np.linalg.svd(mat)
    cut = rtol * max(1.0, s.max() if s.size else 1.0)
    rank = int((s > cut).sum())
    return vt[rank:]


def b_complement(space: FormSpace, basis):
    """Rows spanning the b-orthogonal complement of span(basis)."""
    B = np.atleast_2d(basis)
    return null_space(B @ space.gram)


def lie_algebra_sample(space: FormSpace, rng, scale=1.0):
    """X with X^T G + G X = 0, entries of size about `scale`."""
    n = space.dim
    A = rng.standard_normal((n, n)) * scale
    A = (A - A.T) / 2
    return np.linalg.solve(space.gram, A)
