import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from einkit.domains import diamond_K_samples, diamond_member, diamond_oracle, diamond_sample, standard_diamond
from einkit.dynamics import (
    GroupElement,
    cartan_decompose,
    cartan_lambdas,
    diagonal_element,
    factor_translation,
    is_contracting,
    orbit_scan,
    projective_diameter,
    random_element,
    sequence_from_json,
    trajectory_csv,
    transport_compact,
)
from einkit.einstein import AffineChart, canonical
from einkit.forms import FormSpace, GeometryError

SIGS = [(0, 2), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3)]


def test_group_element_rejects_non_isometry():
    sp = FormSpace.ein(1, 2)
    with pytest.raises(GeometryError):
        GroupElement(2 * np.eye(5), sp)
    with pytest.raises(GeometryError):
        GroupElement(np.eye(4), sp)


@pytest.mark.parametrize("p,q", SIGS)
def test_group_operations(p, q, rng):
    sp = FormSpace.ein(p, q)
    g, h = random_element(sp, rng), random_element(sp, rng)
    assert np.allclose((g @ g.inverse()).mat, np.eye(sp.dim), atol=1e-8)
    X = rng.normal(size=(5, sp.dim))
    assert np.allclose((g @ h).act(X), g.act(h.act(X)))
    assert GroupElement(np.array(g.to_json()["mat"]), sp).mat.shape == (sp.dim, sp.dim)


@pytest.mark.parametrize("p,q", SIGS)
def test_cartan_reconstruction(p, q, rng):
    sp = FormSpace.ein(p, q)
    for _ in range(20):
        g = random_element(sp, rng, scale=1.0)
        c = cartan_decompose(g)
        assert c.error < 1e-8
        assert np.allclose(c.kappa @ c.a @ c.kappa_prime, g.mat, atol=1e-8 * np.abs(g.mat).max())
        # kappa, kappa' are form-preserving and compact (orthogonal in a b-orthonormal frame)
        for k in (c.kappa, c.kappa_prime):
            GroupElement(k, sp)
            F = sp.frame()
            h = np.linalg.solve(F, k @ F)
            assert np.allclose(h @ h.T, np.eye(sp.dim), atol=1e-8)
        assert np.all(np.diff(c.lambdas) <= 1e-12) and np.all(c.lambdas >= 1 - 1e-12)
        assert np.allclose(c.lambdas, cartan_lambdas(g), rtol=1e-8)


@pytest.mark.parametrize("k", [5, 15, 25, 35])
def test_cartan_far_out(k):
    # the small singular values are lost to rounding here; the decomposition must not be
    sp = FormSpace.ein(2, 3, "split")
    g = diagonal_element(sp, [np.exp(k), np.exp(k / 2)])
    c = cartan_decompose(g)
    assert c.error < 1e-12
    assert np.allclose(c.lambdas, [np.exp(k), np.exp(k / 2), 1.0], rtol=1e-10)
    F = sp.frame()
    for m in (c.kappa, c.kappa_prime):
        h = np.linalg.solve(F, m @ F)
        assert np.allclose(h @ h.T, np.eye(sp.dim), atol=1e-8)


@given(st.lists(st.floats(0.0, 6.0), min_size=2, max_size=2))
def test_diagonal_lambdas(logs):
    sp = FormSpace.ein(2, 2, "split")
    lam = np.exp(sorted(logs, reverse=True))
    g = diagonal_element(sp, lam)
    got = cartan_lambdas(g)
    assert np.allclose(got, np.r_[np.maximum(lam, 1.0), 1.0], rtol=1e-9)


def test_diagonal_element_errors():
    sp = FormSpace.ein(1, 1, "split")
    with pytest.raises(GeometryError):
        diagonal_element(sp, [1.0, -2.0])
    with pytest.raises(GeometryError):
        diagonal_element(sp, [2.0, 3.0, 4.0])


@given(st.floats(-2, 2), st.integers(0, 1))
def test_factor_translation_preserves_diamond(t, which):
    rng = np.random.default_rng(5)
    spec = standard_diamond(2, 2)
    g = factor_translation(spec, t, which)
    X = diamond_sample(spec, 200, rng)
    assert diamond_member(spec, g.act(X)).all()
    out = diamond_sample(spec, 200, rng, which=1)
    assert not diamond_member(spec, g.act(out)).any()


def test_contracting_diagonal_family():
    sp = FormSpace.ein(1, 2, "split")
    seq = [diagonal_element(sp, [np.exp(k), 1.0]) for k in range(1, 26)]
    r = is_contracting(seq)
    assert r.contracting
    assert r.ratios.shape == (25, 1)


def test_constant_ratio_family_not_contracting():
    sp = FormSpace.ein(2, 2, "split")
    seq = [diagonal_element(sp, [2.0 * np.exp(k), np.exp(k)]) for k in range(1, 26)]
    r = is_contracting(seq)
    assert not r.contracting
    assert np.allclose(r.ratios[:, 0], 2.0)


def test_contraction_riemannian_and_errors():
    sp = FormSpace.ein(0, 2, "split")
    assert is_contracting([diagonal_element(sp, [np.exp(k)]) for k in range(1, 20)]).contracting
    assert not is_contracting([diagonal_element(sp, [2.0])] * 10).contracting
    with pytest.raises(GeometryError):
        is_contracting([])


def test_projective_diameter():
    e = np.eye(3)
    assert projective_diameter(np.stack([e[0], -e[0], 5 * e[0]])) == pytest.approx(0)
    assert projective_diameter(np.stack([e[0], e[1]])) == pytest.approx(np.pi / 2)
    tiny = np.stack([e[0], e[0] + 1e-9 * e[1]])
    assert projective_diameter(tiny) == pytest.approx(1e-9, rel=1e-6)


def test_transport_compact_limit_and_repeller(rng):
    sp = FormSpace.ein(1, 2, "split")
    seq = [diagonal_element(sp, [np.exp(k), 1.0]) for k in range(1, 26)]
    ch = AffineChart.standard(sp)
    cloud = ch.embed_lift(0.1 * rng.uniform(-1, 1, (50, ch.dim)))
    r = transport_compact(seq, cloud, eps=1e-6)
    assert r.converged and r.diameters[-1] < 1e-6
    e = np.eye(sp.dim)
    assert abs(abs(r.limit @ e[0]) - 1) < 1e-9
    assert abs(abs(canonical(r.repeller) @ e[-1]) - 1) < 1e-9
    # the repeller is null and the limit lies off its lightcone
    assert abs(sp.q(canonical(r.repeller))) < 1e-12
    assert abs(sp.b(r.limit, canonical(r.repeller))) > 0.1


def test_transport_compact_bounded_sequence(rng):
    sp = FormSpace.ein(1, 2)
    g = random_element(sp, rng, 0.1)
    seq = [g] * 10
    ch = AffineChart.standard(sp)
    r = transport_compact(seq, ch.embed_lift(rng.uniform(-1, 1, (20, ch.dim))))
    assert not r.converged and r.limit is None and r.repeller == "undetermined"


def test_orbit_scan_keeps_K(rng):
    spec = standard_diamond(1, 2)
    dom = diamond_oracle(spec)
    g = factor_translation(spec, 0.3, 0)
    seq = [g]
    for _ in range(5):
        seq.append(seq[-1] @ g)
    r = orbit_scan(dom, seq, spec.basepoint(), diamond_K_samples(spec, 200, rng), rng=rng)
    assert r.preserved and r.k_closed and r.k_fraction == 1.0
    assert r.trajectory.shape == (6, spec.space.dim)
    assert diamond_member(spec, r.trajectory).all()


def test_orbit_scan_rejects_non_preserving(rng):
    spec = standard_diamond(1, 2)
    dom = diamond_oracle(spec)
    g = random_element(spec.space, rng, 2.0)
    with pytest.raises(GeometryError):
        orbit_scan(dom, [g], spec.basepoint(), rng=rng)


def test_sequence_from_json():
    seq = sequence_from_json(json.dumps({"sig": [1, 2], "family": "diagonal",
                                          "lambdas": ["exp(k)", "1"], "k": [1, 2, 3]}))
    assert len(seq) == 3 and np.isclose(seq[2].mat[0, 0], np.exp(3))
    m = sequence_from_json({"sig": [1, 1], "matrices": [np.eye(4).tolist()]})
    assert np.allclose(m[0].mat, np.eye(4))
    with pytest.raises(GeometryError):
        sequence_from_json({"sig": [1, 1], "family": "diagonal", "lambdas": ["__import__('os')"]})
    with pytest.raises(GeometryError):
        sequence_from_json({"sig": [1, 1], "family": "diagonal", "lambdas": ["k.real"]})


def test_trajectory_csv():
    sp = FormSpace.ein(1, 1)
    ch = AffineChart.standard(sp)
    traj = ch.embed_lift(np.array([[0.1, 0.2], [0.3, -0.4]]))
    rows = [list(map(float, r.split(","))) for r in trajectory_csv(traj, ch).strip().split("\n")]
    assert np.allclose(rows, [[0.1, 0.2], [0.3, -0.4]])
