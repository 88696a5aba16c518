import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riccilab.curvature import riemann, sectional
from riccilab.errors import BadIndex, BadInput, DegeneratePlane, WrongCase
from riccilab.model import (ModelSpec, build_model, closed_form_sec, critical_angle, killing_frame, model_metric_field,
                            regular_simplex, rotated_vertices)

GRID = [(n, k) for n in range(3, 9) for k in range(1, n - 1)]


@pytest.mark.parametrize("s", range(1, 7))
def test_regular_simplex_gram(s):
    V = regular_simplex(s).verts
    gram = V @ V.T
    ref = np.full((s + 1, s + 1), -1.0 / s)
    np.fill_diagonal(ref, 1.0)
    assert np.allclose(gram, ref, atol=1e-12)
    assert np.allclose(V.sum(axis=0), 0, atol=1e-12)


@pytest.mark.parametrize("n, d", [(5, 3), (6, 3), (7, 4), (8, 4)])
def test_critical_angle_orthogonal(n, d):
    s = n - d - 1
    V0 = regular_simplex(s)
    U = np.eye(s + 1)[0]
    V = rotated_vertices(V0, U, critical_angle(n, d))
    gram = V @ V.T
    assert np.allclose(gram - np.diag(np.diag(gram)), 0, atol=1e-12)


def test_critical_angle_wrong_case():
    with pytest.raises(WrongCase):
        critical_angle(4, 3)


def test_case_n_minus_2_defaults():
    spec = build_model(6, 4, a=3.0)
    assert spec.b == pytest.approx(0.75)
    assert spec.theta is None
    assert spec.mu == pytest.approx(1 / (3.0 * 0.75))
    assert spec.nu == pytest.approx(1 / 9)


@pytest.mark.parametrize("n, k", GRID)
def test_grid_invariants(n, k):
    spec = build_model(n, k)
    d = (n + k) // 2
    assert spec.d == d and len(spec.grads) == d
    assert spec.mu - (k - 1) * spec.nu > 0
    assert spec.domain_radius > 0
    if k <= n - 3:
        assert 0 < spec.theta < spec.xi


@pytest.mark.parametrize("n, k", GRID)
def test_sec_matches_closed_form(n, k):
    spec = build_model(n, k)
    g = model_metric_field(spec)
    p = np.zeros(n)
    K = killing_frame(spec)
    c = riemann(g, p)
    for i, j in itertools.combinations(range(spec.d), 2):
        assert sectional(g, p, K[i], K[j], curv=c) == pytest.approx(closed_form_sec(spec, i, j), abs=1e-9)


def test_sec_values_two_clusters():
    spec = build_model(7, 2)
    secs = {round(closed_form_sec(spec, i, j), 9) for i, j in itertools.combinations(range(spec.d), 2)}
    assert secs == {round(spec.mu, 9), round(-spec.nu, 9)}


def test_killing_frame_orthonormal():
    spec = build_model(5, 2)
    K = killing_frame(spec)
    G = model_metric_field(spec)(np.zeros(5))
    assert np.allclose(K @ G @ K.T, np.eye(spec.d), atol=1e-12)


@given(st.sampled_from(GRID), st.floats(0.2, 5.0))
def test_json_round_trip(case, a):
    spec = build_model(*case, a=a)
    back = ModelSpec.from_json(spec.to_json())
    assert back == spec
    assert back.check() is back


@given(st.sampled_from([(n, k) for n, k in GRID if k <= n - 3]), st.floats(0.05, 0.95))
def test_theta_in_admissible_interval(case, frac):
    n, k = case
    spec = build_model(n, k)
    theta = spec.theta * 2 * frac if frac < 0.5 else spec.theta + (spec.xi - spec.theta) * (2 * frac - 1)
    try:
        other = build_model(n, k, theta=theta)
    except BadInput:
        return  # below the admissible edge
    assert other.mu - (k - 1) * other.nu > 0


def test_bad_inputs():
    with pytest.raises(BadIndex):
        build_model(2, 1)
    with pytest.raises(BadIndex):
        build_model(5, 4)
    with pytest.raises(BadInput):
        build_model(5, 1, a=-1)
    with pytest.raises(BadInput):
        build_model(5, 3, b=2.0)  # violates a > (k-1) b
    with pytest.raises(BadInput):
        build_model(6, 1, theta=2.0)
    with pytest.raises(BadInput):
        build_model(6, 4, theta=0.1)
    with pytest.raises(DegeneratePlane):
        closed_form_sec(build_model(4, 1), 0, 0)


def test_phi_is_affine():
    spec = build_model(6, 2)
    x = np.array([0.1, -0.2])
    assert np.allclose(spec.phi(x), np.asarray(spec.base_vals) + np.asarray(spec.grads) @ x)
    assert math.isclose(min(spec.phi(np.zeros(2))), min(spec.base_vals))
