import json

import numpy as np
import pytest

from einkit.causal import CausalPoint, causal_diamond, lorentzian_chart, truncated_causal_diamond
from einkit.domains import chart_domain, diamond_member, diamond_oracle, standard_diamond, union_domain
from einkit.dynamics import random_element
from einkit.einstein import random_points
from einkit.forms import FormSpace
from einkit.rigidity import certify_diamond, dual_pair, span_basis, subspace_angle


def rand_diamond(p, q, rng, scale=0.7):
    spec = standard_diamond(p, q)
    return spec.transform(random_element(spec.space, rng, scale).mat)


def pt(ch, *c):
    return CausalPoint(np.r_[c, np.zeros(ch.dim - len(c))], ch)


def test_span_basis_trims_outliers(rng):
    B = np.linalg.qr(rng.normal(size=(6, 3)))[0].T
    P = rng.normal(size=(40, 3)) @ B
    P[0] += 1e-5 * rng.normal(size=6)  # a scan point slightly off the span
    S = span_basis(P)
    assert len(S) == 3
    assert subspace_angle(S, B) < 1e-9
    assert span_basis(np.empty((0, 4))).shape == (0, 4)


def test_subspace_angle():
    e = np.eye(3)
    assert subspace_angle(e[:1], e[:1]) == pytest.approx(0)
    assert subspace_angle(e[:1], e[1:2]) == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("p,q", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_certifies_diamonds(p, q, rng):
    spec = rand_diamond(p, q, rng)
    rep = certify_diamond(diamond_oracle(spec), rng=rng, cloud_size=4000)
    assert rep.verdict == "certified-diamond", rep.message
    assert rep.mismatch_rate == 0
    assert sorted(rep.signatures) == sorted([(1, q), (p, 1)])
    # the recovered splitting is the true one
    assert subspace_angle(rep.diamond.V0, spec.V0) < 1e-5
    assert subspace_angle(rep.diamond.V1, spec.V1) < 1e-5
    X = random_points(spec.space, 3000, rng)
    assert (diamond_member(rep.diamond, X) == diamond_member(spec, X)).all()
    d = json.loads(rep.to_json())
    assert d["verdict"] == "certified-diamond" and d["proper"]
    assert set(d["class_counts"]) == {"timelike", "spacelike"}


def test_refutes_truncated_diamond(rng):
    ch = lorentzian_chart(3)
    T = truncated_causal_diamond(pt(ch, 0), pt(ch, 2), pt(ch, 1.2, 0.1))
    rep = certify_diamond(T, rng=rng, cloud_size=4000)
    assert rep.verdict == "refuted", rep.message


def test_refutes_union(rng):
    ch = lorentzian_chart(3)
    U = union_domain([causal_diamond(pt(ch, -1), pt(ch, 1)), causal_diamond(pt(ch, -0.5, 0.9), pt(ch, 0.5, 0.9))])
    rep = certify_diamond(U, rng=rng, cloud_size=4000)
    assert rep.verdict == "refuted", rep.message


def test_chart_is_not_proper(rng):
    rep = certify_diamond(chart_domain(FormSpace.ein(1, 2)), rng=rng)
    assert rep.verdict == "inconclusive" and rep.proper is False


def test_dual_pair():
    spec = standard_diamond(2, 2)
    d = dual_pair(spec)
    assert not diamond_member(d, spec.basepoint())
    assert diamond_member(d, d.basepoint())
