import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riccilab.errors import DomainExit, OutsideInjectivityEstimate
from riccilab.geodesics import exp_inverse, exp_map, flow, geodesic_exp, shoot
from riccilab.metric import constant_curvature, euclidean, polar_plane, sphere_product


def test_flat_lines():
    path = geodesic_exp(euclidean(3), np.zeros(3), [1.0, 2.0, -1.0], steps=10)
    assert np.allclose(path.end, [1, 2, -1])
    assert path.energy_drift < 1e-14
    assert path.ts[-1] == pytest.approx(np.sqrt(6))


def test_great_circle_closes():
    g = sphere_product(0)
    p = np.array([np.pi / 2, 0.0])
    path = geodesic_exp(g, p, [0.0, 1.0], t_max=2 * np.pi, steps=2000)
    assert np.allclose(path.end, [np.pi / 2, 2 * np.pi], atol=1e-8)
    assert path.energy_drift < 1e-10


def test_polar_radial_ray():
    path = geodesic_exp(polar_plane(), np.array([1.0, 0.4]), [1.0, 0.0], steps=50)
    assert np.allclose(path.end, [2.0, 0.4], atol=1e-12)


def test_sphere_distance():
    g = constant_curvature(3)
    p = np.zeros(3)
    # chart radius r lies at distance 2 arctan(r)
    q = np.array([0.3, 0.0, 0.0])
    v = exp_inverse(g, p, q)
    G = g(p)
    assert np.sqrt(v @ G @ v) == pytest.approx(2 * np.arctan(0.3), abs=1e-10)


def test_inverse_of_self_is_zero():
    assert np.allclose(exp_inverse(constant_curvature(3), np.zeros(3), np.zeros(3)), 0)


@given(st.lists(st.floats(-0.25, 0.25), min_size=3, max_size=3).map(np.array))
def test_exp_inverse_round_trip(v):
    g = constant_curvature(3, 0.7)
    p = np.array([0.1, -0.2, 0.05])
    q = exp_map(g, p, v, steps=200)
    assert np.allclose(exp_inverse(g, p, q, steps=200), v, atol=1e-8)


def test_batch_independence():
    g = constant_curvature(3)
    p = np.zeros(3)
    Q = np.random.default_rng(0).uniform(-0.4, 0.4, (6, 3))
    together = shoot(g, p, Q, steps=100).v
    alone = np.vstack([shoot(g, p, q[None], steps=100).v for q in Q])
    assert np.array_equal(together, alone)


def test_variational_matches_fd():
    g = constant_curvature(3)
    p = np.zeros((1, 3))
    v = np.array([[0.3, 0.1, -0.2]])
    res = flow(g, p, v, steps=200, variational=True)
    h = 1e-6
    fd = np.stack([(flow(g, p, v + h * e, steps=200).x - flow(g, p, v - h * e, steps=200).x)[0] / (2 * h)
                   for e in np.eye(3)], axis=1)
    assert np.allclose(res.J[0], fd, atol=1e-7)


def test_domain_exit():
    g = constant_curvature(3)
    with pytest.raises(DomainExit) as info:
        geodesic_exp(g, np.zeros(3), [20.0, 0.0, 0.0], steps=200)
    assert info.value.last_sample is not None


def test_shoot_failure():
    with pytest.raises(OutsideInjectivityEstimate):
        shoot(constant_curvature(3), np.zeros(3), np.array([[1.5, 0.0, 0.0]]), max_iter=1)
