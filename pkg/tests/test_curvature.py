import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import sympy_riemann
from riccilab.curvature import (Frame, christoffel, lie_derivative_metric, restricted_curvature_operator,
                                restricted_ricci_operator, ric_k, riemann, sectional)
from riccilab.errors import (BadInput, BadSubspaceDim, DegenerateMetric, DegeneratePlane, FrameNotOrthonormal,
                             VectorOutsideSubspace)
from riccilab.metric import constant_curvature, custom_table, euclidean, polar_plane, warped_product


def _unit(v, G):
    return v / np.sqrt(v @ G @ v)


def test_polar_christoffel():
    g = polar_plane()
    c = christoffel(g, np.array([1.7, 0.3]))
    assert c.gamma[0, 1, 1] == pytest.approx(-1.7)
    assert c.gamma[1, 0, 1] == pytest.approx(1 / 1.7)
    assert c.gamma[1, 1, 0] == pytest.approx(1 / 1.7)
    assert np.allclose(riemann(g, np.array([1.7, 0.3])).riemann_lowered, 0, atol=1e-12)


def test_flat_is_flat():
    c = riemann(euclidean(4), np.zeros(4))
    assert np.all(c.riemann_lowered == 0)


@pytest.mark.parametrize("coords, entries, point", [
    (["th", "ph"], [["1", "0"], ["0", "sin(th)**2"]], [0.9, 0.2]),
    (["x", "y", "z"], [["1", "0", "0"], ["0", "(2 + x)**2", "0"], ["0", "0", "exp(2*x)"]], [0.3, 0.1, -0.4]),
    (["x", "y"], [["1 + y**2", "x*y/3"], ["x*y/3", "2 + x**2"]], [0.4, -0.7]),
])
def test_riemann_matches_symbolic_oracle(coords, entries, point):
    g = custom_table(coords, entries)
    R = riemann(g, np.array(point)).riemann_lowered
    assert np.allclose(R, sympy_riemann(coords, entries, point), atol=1e-10)


def test_sphere_sign_convention():
    # R_ijkl = g_il g_jk - g_ik g_jl on the unit sphere, so sec = +1
    g = constant_curvature(3)
    p = np.array([0.2, -0.1, 0.3])
    c = riemann(g, p)
    G = c.metric
    ref = np.einsum("il,jk->ijkl", G, G) - np.einsum("ik,jl->ijkl", G, G)
    assert np.allclose(c.riemann_lowered, ref, atol=1e-12)
    assert sectional(g, p, [1, 0, 0], [0.3, 1, 0]) == pytest.approx(1.0, abs=1e-12)


points = st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4).map(np.array)
kappas = st.floats(-1.0, 1.0)


@given(points, kappas)
def test_constant_curvature_sec(p, kappa):
    g = constant_curvature(4, kappa)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, 4))
    assert sectional(g, p, u, v) == pytest.approx(kappa, abs=1e-9)


warped = st.tuples(
    st.lists(st.floats(1.0, 2.0), min_size=2, max_size=2),
    st.lists(st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=2), min_size=2, max_size=2),
    st.lists(st.floats(-0.3, 0.3), min_size=4, max_size=4),
)


@given(warped)
def test_riemann_symmetries(case):
    base, grads, p = case
    R = riemann(warped_product(base, grads), np.array(p)).riemann_lowered
    assert np.allclose(R, -np.swapaxes(R, 0, 1), atol=1e-12)
    assert np.allclose(R, -np.swapaxes(R, 2, 3), atol=1e-12)
    assert np.allclose(R, np.transpose(R, (2, 3, 0, 1)), atol=1e-12)
    bianchi = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
    assert np.max(np.abs(bianchi)) < 1e-12


@given(warped)
def test_finite_difference_agrees_with_analytic(case):
    base, grads, p = case
    g = warped_product(base, grads)
    Ra = riemann(g, np.array(p)).riemann_lowered
    Rf = riemann(g.finite_difference(), np.array(p)).riemann_lowered
    assert np.max(np.abs(Ra - Rf)) < 1e-4


def test_warped_sec_closed_form():
    g = warped_product([1.5, 2.0], [[0.3, -0.2], [0.1, 0.4]])
    p = np.zeros(4)
    # sec(d/dy_1, d/dy_2) = -<grad phi_1, grad phi_2> / (phi_1 phi_2)
    ref = -(0.3 * 0.1 - 0.2 * 0.4) / 3.0
    assert sectional(g, p, [0, 0, 1, 0], [0, 0, 0, 1]) == pytest.approx(ref, abs=1e-12)
    # sec(d/dx_a, d/dy_i) = -Hess(phi_i)/phi_i = 0 for affine phi
    assert sectional(g, p, [1, 0, 0, 0], [0, 0, 1, 0]) == pytest.approx(0, abs=1e-12)


def test_degenerate_plane():
    with pytest.raises(DegeneratePlane):
        sectional(euclidean(3), np.zeros(3), [1, 0, 0], [2, 0, 0])


def test_degenerate_metric():
    g = custom_table(["x", "y"], [["1", "0"], ["0", "x"]])
    with pytest.raises(DegenerateMetric):
        riemann(g, np.array([-0.5, 0.0]))


@given(warped, st.integers(0, 100))
def test_ric1_is_sectional(case, seed):
    base, grads, p = case
    g = warped_product(base, grads)
    p = np.array(p)
    G = g(p)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, 4))
    u = _unit(u, G)
    assert ric_k(g, p, u, [u, v], 1) == pytest.approx(sectional(g, p, u, v), abs=1e-10)


@given(warped, st.integers(0, 100))
def test_ric_top_is_ricci(case, seed):
    base, grads, p = case
    g = warped_product(base, grads)
    p = np.array(p)
    c = riemann(g, p)
    u = _unit(np.random.default_rng(seed).standard_normal(4), c.metric)
    ricci = np.einsum("ijkl,i,l,jk->", c.riemann_lowered, u, u, np.linalg.inv(c.metric))
    assert ric_k(g, p, u, np.vstack([u, np.eye(4)[:3]]), 3) == pytest.approx(ricci, abs=1e-10)


@given(st.integers(0, 1000))
def test_ric_k_basis_independent(seed):
    g = warped_product([1.0, 1.3, 0.8], [[0.4, 0.1], [-0.2, 0.3], [0.1, -0.5]])
    p = np.array([0.1, -0.2, 0.0, 0.5, 1.0])
    G = g(p)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((3, 5))
    u = _unit(V[0] + 0.5 * V[1], G)
    mix = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    assert ric_k(g, p, u, V, 2) == pytest.approx(ric_k(g, p, u, mix @ V, 2), abs=1e-10)


def test_ric_k_errors():
    g, p = euclidean(4), np.zeros(4)
    u = np.array([1.0, 0, 0, 0])
    with pytest.raises(BadSubspaceDim):
        ric_k(g, p, u, np.eye(4)[:2], 2)
    with pytest.raises(VectorOutsideSubspace):
        ric_k(g, p, u, np.eye(4)[1:3], 1)
    with pytest.raises(BadInput):
        ric_k(g, p, 2 * u, np.eye(4)[:2], 1)


def test_restricted_operators_on_sphere():
    g = constant_curvature(4)
    p = np.zeros(4)
    K = Frame(p, 0.5 * np.eye(4)[:3])  # g(0) = 4 I
    assert np.allclose(restricted_ricci_operator(g, p, K), 2 * np.eye(3), atol=1e-12)
    assert np.allclose(restricted_curvature_operator(g, p, K), np.eye(3), atol=1e-12)
    with pytest.raises(FrameNotOrthonormal):
        restricted_ricci_operator(g, p, np.eye(4)[:3])


def test_ricci_operator_trace_is_partial_ricci():
    g = warped_product([1.0, 1.3], [[0.4, 0.1], [-0.2, 0.3]])
    p = np.array([0.1, 0.2, 0.0, 0.0])
    Gp = g(p)
    K = np.diag(1 / np.sqrt(np.diag(Gp)))
    M = restricted_ricci_operator(g, p, K)
    for i in range(4):
        others = [K[j] for j in range(4) if j != i]
        assert M[i, i] == pytest.approx(sum(sectional(g, p, K[i], e) for e in others), abs=1e-12)


def test_lie_derivative():
    g = constant_curvature(3)
    for x in np.random.default_rng(0).uniform(-0.5, 0.5, (5, 3)):
        rot = lambda q: np.stack([-q[..., 1], q[..., 0], 0 * q[..., 2]], axis=-1)  # noqa: E731
        assert np.max(np.abs(lie_derivative_metric(g, rot, x))) < 1e-10
    dilation = lambda q: np.asarray(q, dtype=float)  # noqa: E731
    assert np.max(np.abs(lie_derivative_metric(euclidean(3), dilation, np.ones(3)))) == pytest.approx(2.0)


def test_pair_symmetry_in_frames():
    g = warped_product([1.0, 2.0], [[0.3, 0.0], [0.0, -0.2]])
    R = riemann(g, np.array([0.1, 0.1, 0, 0])).riemann_lowered
    for i, j in itertools.combinations(range(4), 2):
        assert R[i, j, j, i] == pytest.approx(R[j, i, i, j])
