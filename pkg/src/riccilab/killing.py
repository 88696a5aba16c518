"""Second fundamental form of coordinate slices and the symmetry-rank bound at a point.

A slice is the coordinate plane through ``p`` in which the coordinates
listed in ``indices`` vary and all others are frozen.  Constant-coefficient
combinations of the corresponding coordinate fields are tangent to it, so
``II(u, v)`` is the normal part of ``Gamma(u, v)``.

If the slice is spanned by commuting Killing fields and has dimension
greater than ``(n+k)/2``, :func:`find_nonpositive_pair` produces a pair
``(u, V)`` with ``Ric_k(u, V) <= 0``: ``u`` minimises ``|II(u,u)|``, the
``e_i`` are taken from ``ker II(u, .)`` and the Gauss equation does the rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np

from .curvature import (
    Frame,
    christoffel,
    frame_components,
    orthonormal_completion,
    orthonormalize,
    riemann,
    sectional,
)
from .errors import BadInput, ConstructionFailure, FrameNotOrthonormal, HypothesisNotViolated, RankAnomaly
from .metric import MetricField, Scheme

__all__ = [
    "SffData",
    "NonPositivePair",
    "slice_metric",
    "slice_flatness",
    "second_fundamental_form",
    "kernel_dimension",
    "minimize_sff_norm",
    "find_nonpositive_pair",
    "gauss_equation_check",
]

N_STARTS = 32
FLAT_TOL = 1e-8


@dataclass
class SffData:
    """``values[a, b, c] = <II(T_a, T_b), N_c>`` for orthonormal frames T (tangent), N (normal)."""

    at: np.ndarray
    tangent_frame: Frame
    normal_frame: Frame
    values: np.ndarray
    indices: List[int] = field(default_factory=list)
    metric: np.ndarray = None

    @property
    def dim(self):
        return len(self.tangent_frame)

    def coords(self, u):
        """Tangent-frame coordinates of the chart vector u."""
        return self.tangent_frame.vectors @ self.metric @ np.asarray(u, dtype=float)

    def apply(self, alpha, beta):
        """``II`` of two vectors given in tangent-frame coordinates, in normal-frame coordinates."""
        return np.einsum("abc,a,b->c", self.values, alpha, beta)


@dataclass
class NonPositivePair:
    u: np.ndarray
    e: np.ndarray
    V: Frame
    ric_value: float
    cross_terms: List[float]
    sff_norm_sq: float
    certificate: List[float]
    certificate_ok: bool
    kernel_dim: int

    def to_dict(self):
        return {
            "verdict": "nonpositive_pair_found",
            "u": self.u.tolist(),
            "e": self.e.tolist(),
            "ric_value": self.ric_value,
            "cross_terms": list(self.cross_terms),
            "sff_norm_sq": self.sff_norm_sq,
            "f2_certificate": list(self.certificate),
            "certificate_ok": self.certificate_ok,
            "kernel_dim": self.kernel_dim,
        }


def _slice_indices(g: MetricField, tangent) -> List[int]:
    if isinstance(tangent, Frame) or (np.ndim(tangent) == 2):
        vecs = tangent.vectors if isinstance(tangent, Frame) else np.asarray(tangent, dtype=float)
        support = sorted(set(np.nonzero(np.any(np.abs(vecs) > 0, axis=0))[0].tolist()))
        if np.linalg.matrix_rank(vecs) != len(support):
            raise BadInput("tangent frame must span a coordinate plane of the chart")
        return support
    idx = sorted(int(i) for i in tangent)
    if len(set(idx)) != len(idx) or not all(0 <= i < g.dim for i in idx):
        raise BadInput("slice indices must be distinct chart coordinates")
    return idx


def slice_metric(g: MetricField, p, indices: Sequence[int]) -> MetricField:
    """Induced metric on the coordinate slice, in the slice coordinates."""
    p = np.asarray(p, dtype=float)
    idx = np.asarray(indices)

    def lift(y):
        y = np.asarray(y, dtype=float)
        x = np.broadcast_to(p, y.shape[:-1] + p.shape).copy()
        x[..., idx] = y
        return x

    def ev(y):
        return g(lift(y))[..., idx[:, None], idx[None, :]]

    d1 = d2 = None
    if g.scheme is Scheme.ANALYTIC:
        def d1(y):
            return g.d1(lift(y))[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]]

        def d2(y):
            full = g.d2(lift(y))
            return full[..., idx[:, None, None, None], idx[None, :, None, None],
                        idx[None, None, :, None], idx[None, None, None, :]]

    dom = None if g.domain is None else (lambda y: g.contains(lift(y)))
    return MetricField(len(idx), ev, d1, d2, domain=dom, scheme=g.scheme, fd_step=g.fd_step,
                       name=f"{g.name}|slice{list(indices)}")


def slice_flatness(g: MetricField, p, indices: Sequence[int]) -> float:
    """Largest orthonormal-frame curvature component of the induced slice metric at p."""
    p = np.asarray(p, dtype=float)
    h = slice_metric(g, p, indices)
    y = p[np.asarray(indices)]
    c = riemann(h, y)
    if h.dim < 2:
        return 0.0
    E = orthonormalize(np.eye(h.dim), c.metric)
    return float(np.max(np.abs(frame_components(c.riemann_lowered, E))))


def second_fundamental_form(g: MetricField, p, tangent: Union[Frame, Sequence[int]]) -> SffData:
    """II of the coordinate slice through p tangent to ``tangent``.

    ``tangent`` is a Frame (its span must be a coordinate plane) or the list
    of slice coordinate indices.
    """
    p = np.asarray(p, dtype=float)
    idx = _slice_indices(g, tangent)
    c = christoffel(g, p)
    G = c.metric
    if isinstance(tangent, Frame) or np.ndim(tangent) == 2:
        vecs = tangent.vectors if isinstance(tangent, Frame) else np.asarray(tangent, dtype=float)
        T = orthonormalize(vecs, G)
    else:
        T = orthonormalize(np.eye(g.dim)[idx], G)
    full = orthonormal_completion(T, G)
    N = full[len(T):]
    gam_TT = np.einsum("ijk,aj,bk->abi", c.gamma, T, T)
    values = np.einsum("abi,ij,cj->abc", gam_TT, G, N)
    return SffData(p, Frame(p, T, orthonormal=True), Frame(p, N, orthonormal=True), values, list(idx), G)


def _kernel(sff: SffData, alpha):
    m = sff.dim
    O = np.linalg.svd(np.eye(m) - np.outer(alpha, alpha))[0][:, : m - 1]  # orthonormal basis of alpha-perp
    M = np.einsum("abc,a,bj->cj", sff.values, alpha, O)
    if M.size == 0:
        return 0, O, O
    _, s, Vt = np.linalg.svd(M)
    tol = 1e-10 * ((s[0] if s.size else 0.0) + 1.0)
    rank = int(np.sum(s > tol))
    null = Vt[rank:].T  # (m-1, m-1-rank)
    return rank, O, O @ null


def kernel_dimension(sff: SffData, u) -> int:
    """Dimension of the kernel of ``II(u, .)`` on the complement of u in the slice."""
    alpha = sff.coords(u)
    if abs(np.linalg.norm(alpha) - 1.0) > 1e-8:
        raise BadInput("u must be a unit vector tangent to the slice")
    rank, _, _ = _kernel(sff, alpha)
    return (sff.dim - 1) - rank


def _sff_objective(A, x):
    q = np.einsum("abc,a,b->c", A, x, x)
    grad = 4.0 * np.einsum("c,abc,b->a", q, A, x)
    return float(q @ q), grad


def minimize_sff_norm(sff: SffData, seed: int = 0, n_starts: int = N_STARTS, max_iter: int = 5000):
    """Global minimiser of ``|II(u,u)|^2`` on the unit sphere of the slice.

    Antipodally paired random starts, projected gradient descent with
    Armijo backtracking; ties broken by value, then lexicographically.
    Returns ``(alpha, value)`` in tangent-frame coordinates.
    """
    m = sff.dim
    A = sff.values
    rng = np.random.default_rng(seed)
    half = rng.standard_normal((n_starts // 2, m))
    starts = np.concatenate([half, -half])
    starts /= np.linalg.norm(starts, axis=1, keepdims=True)
    results = []
    for x in starts:
        f, gr = _sff_objective(A, x)
        step = 1.0
        for _ in range(max_iter):
            rg = gr - (gr @ x) * x
            if f < 1e-30 or np.linalg.norm(rg) < 1e-15:
                break
            while True:
                y = x - step * rg
                y /= np.linalg.norm(y)
                fy, gy = _sff_objective(A, y)
                if fy <= f - 1e-4 * step * (rg @ rg) or step < 1e-16:
                    break
                step *= 0.5
            if f - fy < 1e-300:
                break
            x, f, gr = y, fy, gy
            step = min(step * 2.0, 1e3)
        results.append((f, tuple(np.round(x, 12)), x))
    results.sort(key=lambda r: (r[0], r[1]))
    return results[0][2], results[0][0]


def find_nonpositive_pair(g: MetricField, p, tangent, k: int, seed: int = 0) -> NonPositivePair:
    """Construct ``(u, V)`` with ``Ric_k(u, V) <= 0`` on an over-dimensional Killing slice."""
    p = np.asarray(p, dtype=float)
    n = g.dim
    sff = second_fundamental_form(g, p, tangent)
    dim = sff.dim
    if not 2 * dim > n + k:
        raise HypothesisNotViolated(f"slice dimension {dim} <= (n+k)/2 = {(n + k) / 2}")
    flat = slice_flatness(g, p, sff.indices)
    if flat > FLAT_TOL:
        raise BadInput(f"slice is not intrinsically flat at p (curvature component {flat:.3g})")
    curv = riemann(g, p)
    G = curv.metric
    alpha, fval = minimize_sff_norm(sff, seed=seed)
    rank, _, null = _kernel(sff, alpha)
    kdim = null.shape[1]
    if kdim < k:
        raise RankAnomaly(f"kernel of II(u,.) has dimension {kdim} < k = {k}",
                          {"rank": rank, "slice_dim": dim, "sff_norm_sq": fval})
    E = null[:, :k].T  # orthonormal, in tangent-frame coordinates
    T = sff.tangent_frame.vectors
    u = alpha @ T
    e = E @ T
    IIuu = sff.apply(alpha, alpha)
    cross = [float(IIuu @ sff.apply(x, x)) for x in E]
    cert = [4.0 * (c - float(IIuu @ IIuu)) for c in cross]
    ric = float(sum(sectional(g, p, u, ei, curv=curv) for ei in e))
    pair = NonPositivePair(u, e, Frame(p, np.vstack([u, e]), orthonormal=True), ric, cross, float(IIuu @ IIuu),
                           cert, all(c >= -1e-6 for c in cert), kdim)
    if ric > 1e-8 or min(cross) < -1e-8:
        raise ConstructionFailure(f"postcondition failed: Ric_k = {ric:.3g}, min cross term = {min(cross):.3g}")
    return pair


def gauss_equation_check(g: MetricField, sff: SffData, u, v, intrinsic_sec: float, curv=None) -> float:
    """``sec_M(u,v) - [sec_N(u,v) + |II(u,v)|^2 - <II(u,u), II(v,v)>]`` for orthonormal u, v."""
    c = curv if curv is not None else riemann(g, sff.at)
    a, b = sff.coords(u), sff.coords(v)
    if abs(np.linalg.norm(a) - 1) > 1e-8 or abs(np.linalg.norm(b) - 1) > 1e-8 or abs(a @ b) > 1e-8:
        raise FrameNotOrthonormal("u, v must be orthonormal tangent vectors of the slice")
    IIuv, IIuu, IIvv = sff.apply(a, b), sff.apply(a, a), sff.apply(b, b)
    return float(sectional(g, sff.at, u, v, curv=c) - (intrinsic_sec + IIuv @ IIuv - IIuu @ IIvv))
