import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from einkit.einstein import (
    AffineChart,
    EinPoint,
    Photon,
    canonical,
    chart_embed,
    chart_project,
    cross_ratio_modulus,
    null_directions,
    on_common_photon,
    photon_param,
    photon_through,
    random_points,
    round_sig,
    same_point,
)
from einkit.forms import FormSpace, GeometryError, lie_algebra_sample

ein_sigs = st.sampled_from([(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (3, 3)])
seeds = st.integers(0, 2 ** 32 - 1)


def incident_pair(sp, rng):
    x = random_points(sp, 1, rng)[0]
    d = null_directions(sp, x, 1, rng, sobol=False)[0]
    return x, x + rng.standard_normal() * d


def test_canonical_normalization():
    v = canonical([0.0, -3.0, 4.0])
    assert np.allclose(v, [0.0, 0.6, -0.8])
    with pytest.raises(GeometryError):
        canonical([0.0, 0.0])


def test_einpoint_requires_isotropy():
    sp = FormSpace.ein(1, 1)
    EinPoint(sp, [1, 0, 1, 0])
    with pytest.raises(GeometryError):
        EinPoint(sp, [1, 0, 0, 0])


def test_einpoint_json_roundtrip(rng):
    sp = FormSpace.ein(2, 1)
    x = EinPoint(sp, random_points(sp, 1, rng)[0])
    data = json.loads(json.dumps(x.to_json()))
    assert EinPoint.from_json(sp, data) == x
    with pytest.raises(GeometryError):
        EinPoint.from_json(FormSpace.ein(1, 2), data)


def test_on_common_photon_examples():
    sp = FormSpace.ein(1, 1, "split")  # v0 v3 + v1 v2
    x = EinPoint(sp, [1, 0, 0, 0])
    y = EinPoint(sp, [0, 1, 0, 0])
    assert on_common_photon(x, y)
    z = EinPoint(sp, [0, 0, 0, 1])  # b(x, z) = 1/2
    assert not on_common_photon(x, z)
    assert on_common_photon(x, x)


@given(ein_sigs, seeds)
def test_on_common_photon_matches_plane_isotropy(sig, seed):
    rng = np.random.default_rng(seed)
    sp = FormSpace.ein(*sig)
    x, y = incident_pair(sp, rng)
    X, Y = EinPoint(sp, x), EinPoint(sp, y)
    S = np.stack([X.lift, Y.lift])
    assert on_common_photon(X, Y) == bool(np.abs(S @ sp.gram @ S.T).max() < 1e-9)
    Z = EinPoint(sp, random_points(sp, 1, rng)[0])
    S = np.stack([X.lift, Z.lift])
    assert on_common_photon(X, Z) == bool(np.abs(S @ sp.gram @ S.T).max() < 1e-9)


def test_photon_through(rng):
    sp = FormSpace.ein(2, 2, "split")
    e = np.eye(6)
    ph = photon_through(EinPoint(sp, e[0]), EinPoint(sp, e[1]))
    for s in np.linspace(-3, 3, 7):
        assert abs(sp.q(ph.span[0] + s * ph.span[1])) < 1e-14
    back = photon_through(EinPoint(sp, e[1]), EinPoint(sp, e[0]))
    assert back.contains(ph.span[0]) and back.contains(ph.span[1])
    with pytest.raises(GeometryError):
        photon_through(EinPoint(sp, e[0]), EinPoint(sp, e[0]))
    with pytest.raises(GeometryError):
        photon_through(EinPoint(sp, e[0]), EinPoint(sp, e[5]))


@given(ein_sigs, seeds)
def test_photon_span_totally_isotropic(sig, seed):
    rng = np.random.default_rng(seed)
    sp = FormSpace.ein(*sig)
    x, y = incident_pair(sp, rng)
    ph = photon_through(EinPoint(sp, x), EinPoint(sp, y))
    assert np.linalg.matrix_rank(ph.span) == 2
    G = ph.span @ sp.gram @ ph.span.T
    assert np.abs(G).max() < 1e-12


def test_photon_rejects_non_isotropic_plane():
    sp = FormSpace.ein(1, 1)
    with pytest.raises(GeometryError):
        Photon(sp, np.array([[1, 0, 1, 0], [0, 1, 1, 0.0]]))


@pytest.mark.parametrize("sig", [(1, 2), (2, 2), (2, 3)])
def test_chart_identities(sig, rng):
    sp = FormSpace.ein(*sig)
    ch = AffineChart.standard(sp)
    assert same_point(chart_embed(ch, np.zeros(ch.dim)), ch.xi_inf)
    m1, m2 = rng.standard_normal((2, 500, ch.dim)) * 3
    L1, L2 = ch.embed_lift(m1), ch.embed_lift(m2)
    gram = sp.b(L1, L2)
    assert np.allclose(gram, -ch.qm(m1 - m2) / 2, atol=1e-10 * (1 + np.abs(gram).max()))
    assert np.abs(sp.q(L1)).max() < 1e-10 * np.abs(L1).max() ** 2
    # rescaled lifts project back to the same coordinates
    back = ch.project_lift(L1 * rng.uniform(-3, 3, (500, 1)))
    assert np.allclose(back, m1, atol=1e-10)
    assert np.allclose(chart_project(ch, chart_embed(ch, m1[0])), m1[0], atol=1e-10)


def test_chart_project_at_infinity():
    sp = FormSpace.ein(1, 2)
    ch = AffineChart.standard(sp)
    with pytest.raises(GeometryError):
        chart_project(ch, ch.xi0)
    assert np.allclose(chart_project(ch, ch.xi_inf), 0)


def test_chart_json_roundtrip():
    sp = FormSpace.ein(2, 1)
    ch = AffineChart.standard(sp)
    ch2 = AffineChart.from_json(sp, json.loads(json.dumps(ch.to_json())))
    m = np.array([0.3, -0.2, 0.5])
    assert np.allclose(ch.embed_lift(m), ch2.embed_lift(m), atol=1e-11)


def test_cross_ratio_trivial(rng):
    sp = FormSpace.ein(2, 2)
    xi1, x, y, xi2 = random_points(sp, 4, rng)
    assert cross_ratio_modulus(xi1, x, x, xi2, sp) == pytest.approx(1.0)
    assert cross_ratio_modulus(xi1, x, y, xi1, sp) == pytest.approx(1.0)
    k = rng.uniform(0.1, 5, 4) * rng.choice([-1, 1], 4)
    a = cross_ratio_modulus(xi1, x, y, xi2, sp)
    b = cross_ratio_modulus(k[0] * xi1, k[1] * x, k[2] * y, k[3] * xi2, sp)
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(GeometryError):
        cross_ratio_modulus(x, x, y, xi2, sp)


@given(ein_sigs, seeds)
def test_cross_ratio_group_invariance(sig, seed):
    rng = np.random.default_rng(seed)
    sp = FormSpace.ein(*sig)
    P = random_points(sp, 4, rng)
    g = expm(lie_algebra_sample(sp, rng, 0.5))
    a = cross_ratio_modulus(*P, sp)
    b = cross_ratio_modulus(*(P @ g.T), sp)
    assert abs(np.log(a) - np.log(b)) < 1e-10 * max(1.0, abs(np.log(a)))


@given(ein_sigs, seeds)
def test_incidence_group_invariance(sig, seed):
    rng = np.random.default_rng(seed)
    sp = FormSpace.ein(*sig)
    g = expm(lie_algebra_sample(sp, rng, 0.5))
    x, y = incident_pair(sp, rng)
    z = random_points(sp, 1, rng)[0]
    for u, v in ((x, y), (x, z)):
        before = on_common_photon(EinPoint(sp, u), EinPoint(sp, v))
        after = on_common_photon(EinPoint(sp, g @ u), EinPoint(sp, g @ v))
        assert before == after


def test_photon_param_and_affine_cross_ratio(rng):
    sp = FormSpace.ein(2, 2)
    x, y = incident_pair(sp, rng)
    A, D = EinPoint(sp, x), EinPoint(sp, y)
    ph = photon_through(A, D)
    alpha = photon_param(ph, A, D)
    assert alpha(0.0) == A
    assert alpha(np.inf) == D
    assert alpha(1e9) == D  # the s -> infinity limit
    # xi_i incident to alpha(sigma_i) turns b(xi_i, alpha(s)) into c_i (s - sigma_i)
    s1, s2, s, t = 0.3, -1.7, 0.9, 2.4
    xis = []
    for sig in (s1, s2):
        pt = alpha(sig).lift
        xis.append(null_directions(sp, pt, 1, rng, sobol=False)[0] + 0.7 * pt)
    got = cross_ratio_modulus(xis[0], alpha(s), alpha(t), xis[1], sp)
    want = abs((s - s1) * (t - s2) / ((s - s2) * (t - s1)))
    assert got == pytest.approx(want, rel=1e-9)
    with pytest.raises(GeometryError):
        photon_param(ph, A, A)


def test_round_sig():
    assert round_sig(1.23456789012345678) == 1.23456789012
    assert round_sig([0.0, np.float64(2.0) / 3]) == [0.0, 0.666666666667]
