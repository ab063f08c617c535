import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from einkit.forms import (
    FormSpace,
    GeometryError,
    Signature,
    b_eval,
    hyperboloid_distance,
    inertia,
    lie_algebra_sample,
    q_eval,
    signature_of_subspace,
    split_to_orthonormal,
)

sigs = st.tuples(st.integers(0, 3), st.integers(0, 3)).filter(lambda s: sum(s) >= 1)


def test_q_eval_examples():
    sp = FormSpace.orthonormal(1, 2)
    assert q_eval(sp, [1, 0, 0]) == -1
    assert q_eval(sp, [1, 1, 0]) == 0
    split = FormSpace.split(2, 2)
    assert q_eval(split, [1, 0, 0, 1]) == pytest.approx(1.0)
    assert sp.classify([1, 0, 0]) == "timelike"
    assert sp.classify([1, 1e-12, 1]) == "lightlike"
    assert sp.classify([0, 1, 0]) == "spacelike"


def test_dimension_mismatch():
    sp = FormSpace.orthonormal(1, 2)
    with pytest.raises(GeometryError):
        q_eval(sp, [1, 0])
    with pytest.raises(GeometryError):
        b_eval(sp, [1, 0, 0], [1, 0])


@pytest.mark.parametrize("bad", [(-1, 2), (0, 0)])
def test_bad_signature(bad):
    with pytest.raises(GeometryError):
        Signature(*bad).check()


def test_gram_inertia_checked():
    with pytest.raises(GeometryError):
        FormSpace(np.diag([1.0, 1.0]), Signature(1, 1))
    with pytest.raises(GeometryError):
        FormSpace(np.array([[0, 1], [0, 0.0]]), Signature(1, 1))


@given(sigs, st.integers(0, 2 ** 32 - 1))
def test_polarization_and_symmetry(sig, seed):
    rng = np.random.default_rng(seed)
    sp = FormSpace.orthonormal(*sig)
    u, v = rng.standard_normal((2, sp.dim))
    assert b_eval(sp, u, v) == pytest.approx(b_eval(sp, v, u), rel=1e-12, abs=1e-12)
    pol = (q_eval(sp, u + v) - q_eval(sp, u) - q_eval(sp, v)) / 2
    scale = np.linalg.norm(u) * np.linalg.norm(v) + np.dot(u, u) + np.dot(v, v)
    assert abs(b_eval(sp, u, v) - pol) <= 1e-12 * scale


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_q_invariant_under_group(p, q, seed):
    rng = np.random.default_rng(seed)
    for sp in (FormSpace.orthonormal(p, q), FormSpace.split(p, q)):
        g = expm(lie_algebra_sample(sp, rng, 0.5))
        v = rng.standard_normal(sp.dim)
        assert q_eval(sp, g @ v) == pytest.approx(q_eval(sp, v), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("p,q", [(1, 1), (2, 2), (2, 3), (3, 2), (1, 4)])
def test_split_basis_change(p, q):
    T = split_to_orthonormal(p, q)
    orth = FormSpace.orthonormal(p, q)
    split = FormSpace.split(p, q)
    assert np.allclose(T.T @ orth.gram @ T, split.gram)


def test_hyperboloid_examples():
    sp = FormSpace.orthonormal(1, 1)
    u = np.array([1.0, 0.0])
    assert hyperboloid_distance(sp, u, u) == 0
    v = np.array([np.cosh(1.0), np.sinh(1.0)])
    assert hyperboloid_distance(sp, u, v) == pytest.approx(1.0, abs=1e-12)
    # the negative copy inside signature (m, 1)
    neg = FormSpace.orthonormal(1, 1)
    a, b = np.array([0.0, 1.0]), np.array([np.sinh(2.0), np.cosh(2.0)])
    assert hyperboloid_distance(neg, a, b, sheet_sign=1) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("d", [1e-9, 1e-6, 1e-3, 5.0])
def test_hyperboloid_distance_close_points(d):
    sp = FormSpace.orthonormal(1, 2)
    u = np.array([1.0, 0.0, 0.0])
    v = np.array([np.cosh(d), np.sinh(d) * 0.6, np.sinh(d) * 0.8])
    assert hyperboloid_distance(sp, u, v) == pytest.approx(d, rel=1e-12)


def test_hyperboloid_errors():
    sp = FormSpace.orthonormal(1, 2)
    with pytest.raises(GeometryError):
        hyperboloid_distance(sp, [1, 0, 0], [1, 1, 0])
    with pytest.raises(GeometryError):
        hyperboloid_distance(sp, [1, 0, 0], [-1, 0, 0])
    with pytest.raises(GeometryError):
        hyperboloid_distance(sp, [1, 0, 0], [1, 0, 0], sheet_sign=2)


def _sheet_point(rng, m, spread=1.5):
    x = rng.standard_normal(m) * spread
    return np.concatenate([[np.sqrt(1 + x @ x)], x])


def _arc_length(sp, u, v):
    """Length of the chord u -> v pushed radially onto the sheet."""
    def speed(t):
        w = (1 - t) * u + t * v
        n2 = -sp.q(w)
        dw = v - u
        # derivative of w / sqrt(n2)
        dn2 = -2 * sp.b(w, dw)
        g = dw / np.sqrt(n2) - 0.5 * w * dn2 / n2 ** 1.5
        return np.sqrt(max(sp.q(g), 0.0))

    return quad(speed, 0, 1, epsabs=1e-12, epsrel=1e-12, limit=200)[0]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_hyperboloid_vs_quadrature(m, rng):
    sp = FormSpace.orthonormal(1, m)
    for _ in range(10):
        u, v = _sheet_point(rng, m), _sheet_point(rng, m)
        assert hyperboloid_distance(sp, u, v) == pytest.approx(_arc_length(sp, u, v), abs=1e-6)


@given(st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_hyperboloid_triangle(m, seed):
    rng = np.random.default_rng(seed)
    sp = FormSpace.orthonormal(1, m)
    a, b, c = (_sheet_point(rng, m) for _ in range(3))
    d = lambda x, y: hyperboloid_distance(sp, x, y)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


def test_signature_of_subspace_examples():
    sp = FormSpace.orthonormal(1, 2)
    assert tuple(signature_of_subspace(sp, [[1, 0, 0]])) == (1, 0, 0)
    assert tuple(signature_of_subspace(sp, [[1, 1, 0]])) == (0, 0, 1)
    with pytest.raises(GeometryError):
        signature_of_subspace(sp, [[1, 0, 0], [2, 0, 0]])


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_signature_of_subspace_random_plane(p, q, seed):
    rng = np.random.default_rng(seed)
    sp = FormSpace.orthonormal(p, q)
    B = rng.standard_normal((2, sp.dim))
    ev = np.linalg.eigvalsh(B @ sp.gram @ B.T)
    got = signature_of_subspace(sp, B)
    assert (got.p, got.q) == (int((ev < 0).sum()), int((ev > 0).sum()))


def test_inertia_counts():
    assert tuple(inertia(np.diag([-2.0, 0.0, 3.0, 5.0]))) == (1, 2, 1)
