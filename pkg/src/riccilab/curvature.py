"""Christoffel symbols, curvature tensors and intermediate Ricci curvature.

Sign convention: ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``
and ``R(X,Y,Z,W) = g(R(X,Y)Z, W)``, so ``sec(u,v) = R(u,v,v,u)/|u ^ v|^2``
is ``+1`` on the unit sphere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    BadInput,
    BadSubspaceDim,
    DegenerateMetric,
    DegeneratePlane,
    FrameNotOrthonormal,
    VectorOutsideSubspace,
)
from .metric import MetricField, Scheme

__all__ = [
    "Frame",
    "CurvatureData",
    "scheme_tolerance",
    "orthonormalize",
    "orthonormal_completion",
    "complement_basis",
    "christoffel",
    "riemann",
    "frame_components",
    "sectional",
    "ric_k",
    "ric_k_batch",
    "restricted_ricci_operator",
    "restricted_curvature_operator",
    "lie_derivative_metric",
    "christoffel_from_jet",
    "riemann_from_jet",
]

COND_MAX = 1e8
ORTHO_TOL = 1e-10


def scheme_tolerance(g: MetricField) -> float:
    return 1e-9 if g.scheme is Scheme.ANALYTIC else 1e-4


@dataclass(frozen=True)
class Frame:
    """Ordered tangent vectors (rows of ``vectors``) at ``base``."""

    base: np.ndarray
    vectors: np.ndarray
    orthonormal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "vectors", np.atleast_2d(np.asarray(self.vectors, dtype=float)))

    def __len__(self):
        return self.vectors.shape[0]

    def gram(self, G):
        return self.vectors @ G @ self.vectors.T

    def check_orthonormal(self, G, tol=ORTHO_TOL):
        err = np.max(np.abs(self.gram(G) - np.eye(len(self))))
        if err > tol:
            raise FrameNotOrthonormal(f"frame Gram matrix deviates from identity by {err:.3g}")


@dataclass(frozen=True)
class CurvatureData:
    at: np.ndarray
    metric: np.ndarray
    gamma: np.ndarray
    riemann_lowered: Optional[np.ndarray] = None
    dgamma: Optional[np.ndarray] = None


def _check_pd(G):
    w = np.linalg.eigvalsh(G)
    if not np.all(w[..., 0] > 0):
        raise DegenerateMetric(f"metric not positive definite (min eigenvalue {np.min(w[..., 0]):.3g})")


def orthonormalize(vectors, G, cond_max=COND_MAX, leading=0):
    """Modified Gram-Schmidt with pivoting under the inner product ``G``.

    The first ``leading`` rows are processed in order (so a chosen vector
    stays first); the rest are pivoted by largest residual norm.  Frames
    whose Gram matrix has condition number above ``cond_max`` are rejected.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float)).copy()
    gram = V @ G @ V.T
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 0 or w[-1] / w[0] > cond_max:
        raise FrameNotOrthonormal(f"frame Gram condition number too large ({w[-1] / max(w[0], 1e-300):.3g})")
    out = []
    remaining = list(range(len(V)))
    for step in range(len(V)):
        if step < leading:
            pick = remaining[0]
        else:
            norms = [V[i] @ G @ V[i] for i in remaining]
            pick = remaining[int(np.argmax(norms))]
        remaining.remove(pick)
        v = V[pick] / np.sqrt(V[pick] @ G @ V[pick])
        out.append(v)
        for i in remaining:
            V[i] = V[i] - (V[i] @ G @ v) * v
    return np.array(out)


def orthonormal_completion(Q, G):
    """Extend the orthonormal rows ``Q`` to a ``G``-orthonormal basis of R^n."""
    n = G.shape[0]
    Q = np.atleast_2d(Q)
    cand = np.eye(n)
    # drop coordinate vectors closest to span Q until dimensions match
    resid = cand - (cand @ G @ Q.T) @ Q
    norms = np.einsum("ij,jk,ik->i", resid, G, resid)
    keep = np.argsort(-norms, kind="stable")[: n - len(Q)]
    full = np.vstack([Q, cand[np.sort(keep)]])
    return orthonormalize(full, G, cond_max=1e12, leading=len(Q))


def complement_basis(u, vectors, G, k):
    """``k`` orthonormal vectors of span(vectors) orthogonal to the unit vector u.

    Pivoted modified Gram-Schmidt seeded with u.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    V = V - np.outer(V @ G @ u, u)
    out = []
    for _ in range(k):
        norms = np.einsum("ij,jk,ik->i", V, G, V)
        i = int(np.argmax(norms))
        if norms[i] <= 1e-20:
            raise BadSubspaceDim("not enough independent directions orthogonal to u")
        e = V[i] / np.sqrt(norms[i])
        out.append(e)
        V = V - np.outer(V @ G @ e, e)
    return np.array(out)


# --- jet based tensor algebra (all batched over leading axes) ---


def christoffel_from_jet(G, dG):
    """``gamma[..., i, j, k] = Gamma^i_{jk}``."""
    Ginv = np.linalg.inv(G)
    low = 0.5 * (np.swapaxes(dG, -1, -2) + np.einsum("...jlk->...ljk", dG) - np.einsum("...jkl->...ljk", dG))
    # low[..., l, j, k] = 1/2 (d_j g_lk + d_k g_jl - d_l g_jk)
    n = G.shape[-1]
    gamma = (Ginv @ low.reshape(low.shape[:-2] + (n * n,))).reshape(low.shape)
    return gamma, Ginv, low


def christoffel_derivative(G, dG, d2G, gamma, Ginv):
    """``dgamma[..., i, j, k, m] = d_m Gamma^i_{jk}``."""
    dlow = 0.5 * (
        np.einsum("...lkjm->...ljkm", d2G) + np.einsum("...jlkm->...ljkm", d2G) - np.einsum("...jklm->...ljkm", d2G)
    )
    term1 = -np.einsum("...ia,...ajkm->...ijkm", Ginv, np.einsum("...abm,...bjk->...ajkm", dG, gamma))
    term2 = np.einsum("...il,...ljkm->...ijkm", Ginv, dlow)
    return term1 + term2


def riemann_from_jet(G, dG, d2G):
    """Return ``(gamma, dgamma, R)`` with ``R[..., i, j, k, l] = R(d_i, d_j, d_k, d_l)``."""
    gamma, Ginv, _ = christoffel_from_jet(G, dG)
    dgamma = christoffel_derivative(G, dG, d2G, gamma, Ginv)
    # R^l_{ijk} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik} + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik}
    up = (
        np.einsum("...ljki->...lijk", dgamma)
        - np.einsum("...likj->...lijk", dgamma)
        + np.einsum("...lim,...mjk->...lijk", gamma, gamma)
        - np.einsum("...ljm,...mik->...lijk", gamma, gamma)
    )
    R = np.einsum("...lm,...mijk->...ijkl", G, up)
    return gamma, dgamma, R


def christoffel(g: MetricField, p) -> CurvatureData:
    p = np.asarray(p, dtype=float)
    G, dG = g.jet(p, order=1)
    _check_pd(G)
    gamma, _, _ = christoffel_from_jet(G, dG)
    return CurvatureData(at=p, metric=G, gamma=gamma)


def riemann(g: MetricField, p) -> CurvatureData:
    p = np.asarray(p, dtype=float)
    G, dG, d2G = g.jet(p, order=2)
    _check_pd(G)
    gamma, dgamma, R = riemann_from_jet(G, dG, d2G)
    return CurvatureData(at=p, metric=G, gamma=gamma, riemann_lowered=R, dgamma=dgamma)


def _curv(g, p, curv):
    return curv if curv is not None else riemann(g, p)


def frame_components(R, E):
    """Components ``R(E_a, E_b, E_c, E_d)`` for frame rows ``E``."""
    return np.einsum("ijkl,ai,bj,ck,dl->abcd", R, E, E, E, E, optimize=True)


def sectional(g: MetricField, p, u, v, curv: Optional[CurvatureData] = None) -> float:
    c = _curv(g, p, curv)
    G, R = c.metric, c.riemann_lowered
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uu, vv, uv = u @ G @ u, v @ G @ v, u @ G @ v
    area = uu * vv - uv**2
    if area <= 1e-14 * uu * vv:
        raise DegeneratePlane("u and v are (numerically) parallel")
    return float(np.einsum("ijkl,i,j,k,l->", R, u, v, v, u) / area)


def ric_k_batch(Rf, U, E):
    """Vectorised Ric_k from orthonormal-frame curvature components.

    ``Rf`` is ``R(F_a,F_b,F_c,F_d)`` in some orthonormal frame F; ``U`` is
    ``(m, d)`` unit vectors and ``E`` is ``(m, k, d)`` orthonormal
    complements, all written in that frame.
    """
    return np.einsum("abcd,ma,mib,mic,md->m", Rf, U, E, E, U, optimize=True)


def ric_k(g: MetricField, p, u, V, k: int, curv: Optional[CurvatureData] = None) -> float:
    """Sum of ``sec(u, e_i)`` over an orthonormal basis of the complement of u in span V."""
    c = _curv(g, p, curv)
    G = c.metric
    u = np.asarray(u, dtype=float)
    vecs = V.vectors if isinstance(V, Frame) else np.atleast_2d(np.asarray(V, dtype=float))
    sv = np.linalg.svd(vecs, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    if rank != k + 1:
        raise BadSubspaceDim(f"span(V) has dimension {rank}, expected {k + 1}")
    if abs(u @ G @ u - 1.0) > 1e-8:
        raise BadInput("u must be a unit vector")
    basis = orthonormalize(vecs, G, cond_max=1e12)
    proj = (basis @ G @ u) @ basis
    resid = u - proj
    if np.sqrt(max(resid @ G @ resid, 0.0)) > 1e-10:
        raise VectorOutsideSubspace("u is not in span(V)")
    E = complement_basis(u, basis, G, k)
    R = c.riemann_lowered
    return float(sum(np.einsum("ijkl,i,j,k,l->", R, u, e, e, u) for e in E))


def _orthonormal_frame(g, p, K, curv):
    c = _curv(g, p, curv)
    vecs = K.vectors if isinstance(K, Frame) else np.atleast_2d(np.asarray(K, dtype=float))
    err = np.max(np.abs(vecs @ c.metric @ vecs.T - np.eye(len(vecs))))
    if err > ORTHO_TOL:
        raise FrameNotOrthonormal(f"frame Gram matrix deviates from identity by {err:.3g}")
    return c, vecs


def restricted_ricci_operator(g: MetricField, p, K, curv: Optional[CurvatureData] = None) -> np.ndarray:
    """``M_ij = sum_l R(K_i, K_l, K_l, K_j)`` for an orthonormal frame K."""
    c, vecs = _orthonormal_frame(g, p, K, curv)
    Rf = frame_components(c.riemann_lowered, vecs)
    return np.einsum("illj->ij", Rf)


def restricted_curvature_operator(g: MetricField, p, K, curv: Optional[CurvatureData] = None) -> np.ndarray:
    """Curvature operator on the wedge basis ``K_i ^ K_j`` (i < j, lexicographic).

    Entry for ``(K_i ^ K_j, K_l ^ K_m)`` is ``R(K_i, K_j, K_m, K_l)``.
    """
    c, vecs = _orthonormal_frame(g, p, K, curv)
    Rf = frame_components(c.riemann_lowered, vecs)
    pairs = list(itertools.combinations(range(len(vecs)), 2))
    out = np.empty((len(pairs), len(pairs)))
    for a, (i, j) in enumerate(pairs):
        for b, (l, m) in enumerate(pairs):
            out[a, b] = Rf[i, j, m, l]
    return out


def lie_derivative_metric(g: MetricField, K: Callable, p, h: Optional[float] = None) -> np.ndarray:
    """Chart components of ``L_K g`` at p; zero iff K is Killing (to tolerance).

    ``K`` maps points ``(..., n)`` to components ``(..., n)``; its Jacobian
    is taken by central differences.
    """
    p = np.asarray(p, dtype=float)
    n = g.dim
    G, dG = g.jet(p, order=1)
    Kp = np.asarray(K(p), dtype=float)
    h = 1e-5 * (1 + np.linalg.norm(p)) if h is None else h
    eye = np.eye(n)
    pts = np.concatenate([p + h * eye, p - h * eye])
    vals = np.asarray(K(pts), dtype=float)
    dK = ((vals[:n] - vals[n:]) / (2 * h)).T  # dK[m, i] = d_i K^m
    return np.einsum("m,ijm->ij", Kp, dG) + np.einsum("mj,mi->ij", G, dK) + np.einsum("im,mj->ij", G, dK)
