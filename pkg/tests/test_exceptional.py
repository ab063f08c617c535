import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from einkit.einstein import canonical
from einkit.exceptional import (
    LABELS,
    Plane2,
    b22_member,
    b22_members,
    b22_oracle,
    b22_sample,
    family_proper,
    gr2_proper_correspondence,
    image_proper,
    incident_pairs,
    plane_of,
    plucker,
    plucker_lifts,
    random_planes,
    read_planes_csv,
    second_compound,
    skew_of,
    tau,
    tau_matrix,
    transversality_tests,
    wedge,
    wedge_space,
    write_planes_csv,
)
from einkit.forms import GeometryError, inertia


def _det4(u, v, w, z):
    return np.linalg.det(np.stack([u, v, w, z]))


def test_basis_labels_and_signature():
    assert LABELS == ["e12", "e13", "e14", "e23", "e24", "e34"]
    sp = wedge_space()
    ine = inertia(sp.gram)
    assert (ine.p, ine.q, ine.degeneracy) == (3, 3, 0)
    assert tuple(sp.ein_sig) == (2, 2)


def test_omega_is_wedge_over_volume(rng):
    # omega(u^v, w^z) = det[u, v, w, z], an independent determinant oracle
    sp = wedge_space()
    for _ in range(50):
        u, v, w, z = rng.normal(size=(4, 4))
        assert sp.b(wedge(u, v), wedge(w, z)) == pytest.approx(_det4(u, v, w, z), abs=1e-12)


vec4 = arrays(np.float64, 4, elements=st.floats(-5, 5))


@given(vec4, vec4)
def test_plucker_images_are_isotropic(u, v):
    s = np.linalg.svd(np.stack([u, v]), compute_uv=False)
    if s[1] <= 1e-10 * s[0] or s[0] == 0:
        with pytest.raises(GeometryError):
            Plane2(np.stack([u, v]))
        return
    x = plucker(Plane2(np.stack([u, v])))
    assert abs(x.space.q(canonical(x.lift))) < 1e-12


def test_plucker_independent_of_basis(rng):
    B = rng.normal(size=(2, 4))
    M = rng.normal(size=(2, 2))
    a = canonical(plucker(Plane2(B)).lift)
    b = canonical(plucker(Plane2(M @ B)).lift)
    assert np.allclose(a, b, atol=1e-12)


def test_plane_of_inverts_plucker(rng):
    for B in random_planes(30, rng):
        P = plane_of(plucker_lifts(B))
        # same plane: the stacked 4x4 has rank 2
        s = np.linalg.svd(np.vstack([P, B / np.linalg.norm(B, axis=1, keepdims=True)]), compute_uv=False)
        assert s[2] < 1e-10


def test_skew_and_compound(rng):
    x = rng.normal(size=6)
    X = skew_of(x)
    assert np.allclose(X, -X.T)
    g = rng.normal(size=(4, 4))
    # compound of a product is the product of compounds
    h = rng.normal(size=(4, 4))
    assert np.allclose(second_compound(g @ h), second_compound(g) @ second_compound(h))


@pytest.mark.parametrize("seed", range(5))
def test_tau_equivariance(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4))
    if np.linalg.det(g) < 0:
        g[0] *= -1
    T = tau(g)
    for B in random_planes(20, rng):
        img = canonical(T.act(plucker_lifts(B)[None])[0])
        ref = canonical(plucker_lifts((B @ g.T)[None])[0])
        assert np.allclose(img, ref, atol=1e-10)


def test_tau_orientation_reversing(rng):
    g = rng.normal(size=(4, 4))
    if np.linalg.det(g) > 0:
        g[0] *= -1
    M, sgn = tau_matrix(g)
    G = wedge_space().gram
    assert sgn == -1
    assert np.allclose(M.T @ G @ M, -G)
    with pytest.raises(GeometryError):
        tau(g)
    with pytest.raises(GeometryError):
        tau_matrix(np.zeros((4, 4)))
    with pytest.raises(GeometryError):
        tau_matrix(np.eye(3))


def test_transversality_correspondence(rng):
    V = random_planes(300, rng)
    Vi, Wi = incident_pairs(100, rng)
    W = random_planes(1, rng)[0]
    assert gr2_proper_correspondence(V, W)
    for v, w in zip(Vi, Wi):
        rank, om = transversality_tests([v], w)
        assert not rank[0] and not om[0]
    rank, om = transversality_tests(V, W)
    assert rank.all() and om.all()


def test_b22_membership_rules(rng):
    beta = np.diag([-1.0, -1.0, 1.0, 1.0])
    e = np.eye(4)
    assert b22_member(beta, Plane2(e[2:]))
    assert not b22_member(beta, Plane2(e[:2]))
    assert not b22_member(beta, Plane2(np.stack([e[0], e[2]])))
    S = b22_sample(beta, 500, rng)
    assert b22_members(beta, S).all()
    # basis independence of the rule
    M = rng.normal(size=(500, 2, 2))
    assert b22_members(beta, M @ S).all()
    with pytest.raises(GeometryError):
        b22_member(np.eye(4), Plane2(e[2:]))


def test_b22_oracle_membership(rng):
    dom = b22_oracle()
    L = dom.sampler(300, rng)
    assert dom.member(L).all()
    assert dom.member(dom.basepoint[None])[0]
    # random planes: membership agrees with the plane-side rule
    P = random_planes(2000, rng)
    inside = b22_members(np.diag([-1.0, -1.0, 1.0, 1.0]), P)
    assert 0 < inside.mean() < 1
    assert (dom.member(plucker_lifts(P)) == inside).all()


def test_properness_both_sides(rng):
    beta = np.diag([-1.0, -1.0, 1.0, 1.0])
    S = b22_sample(beta, 1000, rng)
    assert family_proper(S, rng).found and image_proper(S, rng).found
    V, _ = incident_pairs(1, rng)
    # every plane through a fixed line meets every other plane: not proper
    line = V[0][0]
    pencil = np.stack([np.stack([line, r]) for r in rng.normal(size=(1000, 4))])
    assert not family_proper(pencil, rng).found and not image_proper(pencil, rng).found


def test_planes_csv_round_trip(tmp_path, rng):
    planes = [Plane2(b) for b in random_planes(5, rng)]
    path = tmp_path / "planes.csv"
    write_planes_csv(planes, path)
    back = read_planes_csv(path)
    assert all(np.array_equal(a.basis, b.basis) for a, b in zip(planes, back))
    path.write_text("1,2,3,4\n")
    with pytest.raises(GeometryError):
        read_planes_csv(path)
