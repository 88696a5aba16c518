import numpy as np
import pytest

from riccilab.errors import BadInput, HypothesisNotViolated
from riccilab.killing import (find_nonpositive_pair, gauss_equation_check, kernel_dimension,
                              second_fundamental_form, slice_flatness)
from riccilab.metric import constant_curvature, euclidean, sphere_product
from riccilab.model import build_model, killing_frame, model_metric_field


@pytest.mark.parametrize("n, k", [(4, 1), (5, 1), (6, 2), (7, 3)])
def test_flat_over_dimensional_slice(n, k):
    d = (n + k) // 2
    g, p = euclidean(n), np.zeros(n)
    pair = find_nonpositive_pair(g, p, list(range(d + 1)), k)
    assert abs(pair.ric_value) <= 1e-8
    assert min(pair.cross_terms) >= -1e-8
    assert kernel_dimension(second_fundamental_form(g, p, list(range(d + 1))), pair.u) >= k
    assert pair.certificate_ok


def test_sphere_product_slice():
    g = sphere_product(3)
    p = np.array([np.pi / 3, 0.2, 0.0, 0.0, 0.0])
    pair = find_nonpositive_pair(g, p, [1, 2, 3, 4], 1)
    assert pair.ric_value <= 1e-8
    V = pair.V.vectors
    assert np.allclose(V @ g(p) @ V.T, np.eye(2), atol=1e-10)


def test_sphere_product_sff_nonzero():
    g = sphere_product(1)
    p = np.array([np.pi / 3, 0.0, 0.0])
    sff = second_fundamental_form(g, p, [1, 2])
    # the latitude circle has geodesic curvature cot(th) in S^2
    assert np.max(np.abs(sff.values)) == pytest.approx(1 / np.tan(np.pi / 3), rel=1e-9)


def test_model_slice_is_not_over_dimensional():
    spec = build_model(4, 2)
    g = model_metric_field(spec)
    with pytest.raises(HypothesisNotViolated):
        find_nonpositive_pair(g, np.zeros(4), list(range(spec.flat_dim, 4)), 2)


def test_curved_slice_rejected():
    g = constant_curvature(4)
    with pytest.raises(BadInput):
        find_nonpositive_pair(g, np.zeros(4), [0, 1, 2], 1)


def test_slice_flatness():
    assert slice_flatness(euclidean(4), np.zeros(4), [0, 1, 2]) == 0
    assert slice_flatness(constant_curvature(3), np.zeros(3), [0, 1]) > 0.1


def test_gauss_equation_totally_geodesic():
    # the equatorial plane through the origin of the sphere chart is totally geodesic
    g = constant_curvature(3)
    sff = second_fundamental_form(g, np.zeros(3), [0, 1])
    assert np.allclose(sff.values, 0, atol=1e-12)
    assert gauss_equation_check(g, sff, [0.5, 0, 0], [0, 0.5, 0], 1.0) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("n, k", [(5, 2), (6, 3)])
def test_gauss_equation_on_killing_slices(n, k):
    spec = build_model(n, k)
    g = model_metric_field(spec)
    p = np.zeros(n)
    K = killing_frame(spec)
    sff = second_fundamental_form(g, p, list(range(spec.flat_dim, n)))
    for i in range(spec.d - 1):
        assert gauss_equation_check(g, sff, K[i], K[i + 1], 0.0) == pytest.approx(0, abs=1e-10)


def test_sphere_product_gauss_equation():
    g = sphere_product(2)
    p = np.array([1.1, 0.3, 0.0, 0.0])
    sff = second_fundamental_form(g, p, [1, 2, 3])
    u = np.array([0, 1 / np.sin(1.1), 0, 0])
    assert gauss_equation_check(g, sff, u, [0, 0, 1, 0], 0.0) == pytest.approx(0, abs=1e-10)
