"""Positivity of Ric_k over all (k+1)-planes inside a Killing-spanned subspace.

Two independent routes:

* :func:`check_compsimp` evaluates the four structural properties of the
  frame (vanishing mixed curvature, two-valued sectional curvatures, few
  negative partners, and the mu/nu inequality), which together force
  ``Ric_k > 0``.
* :func:`min_ric_k` searches the flag of pairs ``u in V`` directly by random
  Grassmannian sampling plus coordinate-descent polishing, and
  :func:`grid_min_ric_k` does an exhaustive grid over unit ``u`` with the exact
  inner minimum over V (sum of the k smallest eigenvalues of
  ``x -> R(x,u)u`` on ``u-perp``).

All searches work with the curvature tensor written in the orthonormal frame
K, so a query is a unit vector and an orthonormal complement in R^d.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .curvature import (
    Frame,
    frame_components,
    orthonormal_completion,
    ric_k_batch,
    riemann,
    scheme_tolerance,
)
from .errors import BadInput, BadSubspaceDim, FrameNotOrthonormal, PropertyBViolated
from .metric import MetricField, Scheme

__all__ = [
    "RicKQuery",
    "MinRicResult",
    "CompsimpReport",
    "ric_lower_bound",
    "frame_curvature",
    "min_ric_k",
    "grid_min_ric_k",
    "check_compsimp",
    "sampled_lemma_bounds",
    "cluster_values",
]

REFINE_ITERS = 100
REFINE_DECAY = 0.5
REFINE_TOL = 1e-12
CHUNK = 20000


@dataclass
class RicKQuery:
    """A pair (u, V) with V = span of ``frame`` rows; u is ``frame[0]``.

    Vectors are chart components at the base point.
    """

    u: np.ndarray
    frame: np.ndarray

    def to_dict(self):
        return {"u": self.u.tolist(), "V": self.frame.tolist()}


@dataclass
class MinRicResult:
    value: float
    query: RicKQuery
    samples: int
    seed: int
    sampled_min: float
    sample_log: Optional[list] = field(default=None, repr=False)

    def to_dict(self):
        return {
            "min_value": self.value,
            "sampled_min": self.sampled_min,
            "argmin": self.query.to_dict(),
            "budget": self.samples,
            "seed": self.seed,
        }


@dataclass
class CompsimpReport:
    propA: bool
    propB: bool
    propC: bool
    propD: bool
    mu: float
    nu: float
    neg_partner_counts: List[int]
    ric_lower: float
    worst_sample: dict
    propA_residual: float = 0.0
    clusters: List[float] = field(default_factory=list)
    d: int = 0
    k: int = 0

    @property
    def all_true(self):
        return self.propA and self.propB and self.propC and self.propD

    def to_dict(self):
        return {
            "propA": self.propA,
            "propB": self.propB,
            "propC": self.propC,
            "propD": self.propD,
            "mu": self.mu,
            "nu": self.nu,
            "neg_partner_counts": list(self.neg_partner_counts),
            "ric_lower": self.ric_lower,
            "worst_sample": self.worst_sample,
            "propA_residual": self.propA_residual,
            "clusters": list(self.clusters),
            "d": self.d,
            "k": self.k,
        }


def ric_lower_bound(d: int, k: int, mu: float, nu: float) -> float:
    """Lower bound ``(d-k) mu - (k-1) nu`` for Ric_{d-1} on the frame span."""
    if not 1 <= k < d:
        raise BadInput("need 1 <= k < d")
    return (d - k) * mu - (k - 1) * nu


def frame_curvature(g: MetricField, p, K, curv=None):
    """Return ``(K_rows, Rf)``: the frame and ``R(K_a,K_b,K_c,K_d)``."""
    c = curv if curv is not None else riemann(g, p)
    vecs = K.vectors if isinstance(K, Frame) else np.atleast_2d(np.asarray(K, dtype=float))
    err = np.max(np.abs(vecs @ c.metric @ vecs.T - np.eye(len(vecs))))
    if err > 1e-10:
        raise FrameNotOrthonormal(f"frame Gram matrix deviates from identity by {err:.3g}")
    return vecs, frame_components(c.riemann_lowered, vecs), c


def _householder_complements(W):
    """For unit rows ``W`` (m, r) return (m, r, r-1): orthonormal bases of each ``w-perp``."""
    m, r = W.shape
    e1 = np.zeros(r)
    e1[0] = 1.0
    # reflect e1 onto w; flip sign first so the reflection vector is well conditioned
    s = np.where(W[:, 0] > 0, -1.0, 1.0)
    v = s[:, None] * W - e1
    vv = np.einsum("mi,mi->m", v, v)
    H = np.eye(r) - 2.0 * np.einsum("mi,mj->mij", v, v) / vv[:, None, None]
    return H[:, :, 1:]


def _sample_chunk(Rf, k, m, rng):
    d = Rf.shape[0]
    Z = rng.standard_normal((m, d, k + 1))
    Q, _ = np.linalg.qr(Z)
    c = rng.standard_normal((m, k + 1))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    U = np.einsum("mij,mj->mi", Q, c)
    C = _householder_complements(c)  # (m, k+1, k)
    E = np.einsum("mij,mjl->mli", Q, C)  # (m, k, d)
    return ric_k_batch(Rf, U, E), U, E


def _ric_of_basis(Rf, B, k):
    """Ric_k for the flag encoded by the columns of the orthogonal matrix B."""
    u = B[:, 0]
    E = B[:, 1 : k + 1]
    return float(np.einsum("abcd,a,bi,ci,d->", Rf, u, E, E, u, optimize=True))


def _refine(Rf, B, k, step=0.25):
    """Cyclic coordinate descent over plane rotations of the basis columns.

    Only rotations mixing u with the rest, or V with its complement, change
    the objective.
    """
    d = B.shape[0]
    gens = [(0, j) for j in range(1, d)] + [(i, j) for i in range(1, k + 1) for j in range(k + 1, d)]
    best = _ric_of_basis(Rf, B, k)
    for _ in range(REFINE_ITERS):
        start = best
        for a, b in gens:
            for sgn in (1.0, -1.0):
                c, s = math.cos(sgn * step), math.sin(sgn * step)
                trial = B.copy()
                trial[:, a] = c * B[:, a] + s * B[:, b]
                trial[:, b] = -s * B[:, a] + c * B[:, b]
                val = _ric_of_basis(Rf, trial, k)
                if val < best:
                    best, B = val, trial
                    break
        if start - best < REFINE_TOL:
            step *= REFINE_DECAY
            if step < 1e-10:
                break
    return best, B


def _complete_basis(u, E):
    d = u.shape[0]
    B = np.column_stack([u, E.T]) if E.size else u[:, None]
    if B.shape[1] < d:
        q, _ = np.linalg.qr(np.column_stack([B, np.eye(d)]))
        extra = q[:, B.shape[1] : d]
        B = np.column_stack([B, extra])
    # re-orthonormalise in place to remove round-off
    q, r = np.linalg.qr(B)
    return q * np.sign(np.diag(r))


def min_ric_k(g: MetricField, p, K, k: int, budget: int = 10_000, seed: int = 0, jobs: int = 1,
              refine_top: int = 4, keep_samples: bool = False, curv=None) -> MinRicResult:
    """Upper bound on ``inf Ric_k(u, V)`` over (k+1)-planes V in span K.

    The budget is split across ``jobs`` workers, each on its own child stream
    of ``SeedSequence(seed)``; results are merged by minimum, so output is
    deterministic for a fixed seed and worker count.
    """
    if budget < 1:
        raise BadInput("budget must be >= 1")
    vecs, Rf, _ = frame_curvature(g, p, K, curv)
    d = len(vecs)
    if not 1 <= k <= d - 1:
        raise BadSubspaceDim(f"need 1 <= k <= {d - 1} for a {d}-frame")
    jobs = max(1, min(int(jobs), budget))
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(jobs)]
    shares = [budget // jobs + (1 if i < budget % jobs else 0) for i in range(jobs)]

    def work(args):
        rng, share = args
        vals, Us, Es = [], [], []
        done = 0
        while done < share:
            m = min(CHUNK, share - done)
            v, U, E = _sample_chunk(Rf, k, m, rng)
            vals.append(v)
            Us.append(U)
            Es.append(E)
            done += m
        return np.concatenate(vals), np.concatenate(Us), np.concatenate(Es)

    if jobs == 1:
        parts = [work((streams[0], shares[0]))]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(work, zip(streams, shares)))
    vals = np.concatenate([p_[0] for p_ in parts])
    U = np.concatenate([p_[1] for p_ in parts])
    E = np.concatenate([p_[2] for p_ in parts])
    order = np.argsort(vals, kind="stable")
    sampled_min = float(vals[order[0]])
    best_val, best_B = np.inf, None
    for idx in order[:refine_top]:
        val, B = _refine(Rf, _complete_basis(U[idx], E[idx]), k)
        if val < best_val:
            best_val, best_B = val, B
    best_val = min(best_val, sampled_min)
    flag = best_B[:, : k + 1].T @ vecs  # back to chart components
    log = None
    if keep_samples:
        log = [(U[i] @ vecs, E[i] @ vecs, float(vals[i])) for i in range(len(vals))]
    return MinRicResult(best_val, RicKQuery(flag[0], flag), budget, seed, sampled_min, log)


def _sphere_grid(d, n_points):
    """Hyperspherical-angle grid on the half sphere (Ric_k(u) = Ric_k(-u)).

    Angles include 0, pi/2 and pi so the coordinate axes are grid points.
    """
    if d == 1:
        return np.ones((1, 1))
    per = max(3, int(round(n_points ** (1.0 / (d - 1)))))
    if per % 2 == 0:
        per += 1  # odd count keeps pi/2 on the grid
    polar = [np.linspace(0.0, np.pi, per)] * (d - 2)
    azim = np.linspace(0.0, np.pi, per) if d >= 2 else None
    mesh = np.meshgrid(*(polar + [azim]), indexing="ij")
    angles = [m.ravel() for m in mesh]
    pts = np.empty((angles[0].size, d))
    sin_prod = np.ones(angles[0].size)
    for i, ang in enumerate(angles):
        pts[:, i] = sin_prod * np.cos(ang)
        sin_prod = sin_prod * np.sin(ang)
    pts[:, d - 1] = sin_prod
    return pts


def grid_min_ric_k(g: MetricField, p, K, k: int, n_points: int = 1_000_000, curv=None):
    """Exhaustive oracle: grid over unit u, exact inner minimum over V.

    Returns ``(min_value, u_chart)``.
    """
    vecs, Rf, _ = frame_curvature(g, p, K, curv)
    d = len(vecs)
    pts = _sphere_grid(d, n_points)
    best, arg = np.inf, None
    for start in range(0, len(pts), 100_000):
        Uc = pts[start : start + 100_000]
        A = np.einsum("abcd,ma,md->mbc", Rf, Uc, Uc, optimize=True)
        A = 0.5 * (A + np.swapaxes(A, 1, 2))
        P = np.eye(d) - np.einsum("mi,mj->mij", Uc, Uc)
        big = 1e6 * (1.0 + np.abs(Rf).max())
        A = P @ A @ P + big * np.einsum("mi,mj->mij", Uc, Uc)
        w = np.linalg.eigvalsh(A)
        vals = w[:, :k].sum(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, arg = float(vals[i]), Uc[i] @ vecs
    return best, arg


def cluster_values(values, tol):
    """Group sorted values wherever consecutive gaps exceed ``tol``.

    Returns a list of cluster means; the spread within every cluster is
    below ``tol`` times the cluster size.
    """
    vals = np.sort(np.asarray(values, dtype=float))
    if vals.size == 0:
        return []
    groups = [[vals[0]]]
    for v in vals[1:]:
        if v - groups[-1][-1] > tol:
            groups.append([v])
        else:
            groups[-1].append(v)
    return [float(np.mean(gr)) for gr in groups]


def check_compsimp(g: MetricField, p, K, k: int, budget: int = 1000, seed: int = 0, strict: bool = False,
                   curv=None) -> CompsimpReport:
    """Numerically evaluate the four structural properties on the frame K."""
    c = curv if curv is not None else riemann(g, p)
    vecs, Rf, _ = frame_curvature(g, p, K, c)
    d = len(vecs)
    if not 1 <= k <= d - 1:
        raise BadSubspaceDim(f"need 1 <= k <= {d - 1} for a {d}-frame")
    tol = scheme_tolerance(g)
    cluster_tol = 1e-8 if g.scheme is Scheme.ANALYTIC else 1e-4

    full = orthonormal_completion(vecs, c.metric)
    Rfull = np.einsum("ijkl,ai,bj,ck,dl->abcd", c.riemann_lowered, vecs, vecs, vecs, full, optimize=True)
    resid_a = 0.0
    for i, j, l in itertools.permutations(range(d), 3):
        resid_a = max(resid_a, float(np.max(np.abs(Rfull[i, j, l]))))
    propA = resid_a <= tol

    pairs = list(itertools.combinations(range(d), 2))
    secs = np.array([Rf[i, j, j, i] for i, j in pairs])
    clusters = cluster_values(secs, cluster_tol)
    zero_tol = cluster_tol
    propB = True
    if len(clusters) == 1:
        cval = clusters[0]
        mu, nu = (max(cval, 0.0), max(-cval, 0.0)) if abs(cval) > zero_tol else (0.0, 0.0)
    elif len(clusters) == 2:
        lo, hi = clusters
        propB = lo <= zero_tol and hi >= -zero_tol
        mu, nu = max(hi, 0.0), max(-lo, 0.0)
    else:
        propB = False
        mu, nu = max(clusters[-1], 0.0), max(-clusters[0], 0.0)
    if not propB and strict:
        raise PropertyBViolated(f"sectional curvatures form clusters {clusters}")

    sec_mat = np.zeros((d, d))
    for (i, j), s in zip(pairs, secs):
        sec_mat[i, j] = sec_mat[j, i] = s
    counts = []
    for i in range(d):
        others = [sec_mat[i, j] for j in range(d) if j != i]
        counts.append(int(sum(abs(s + nu) <= cluster_tol for s in others)))
    propC = propB and all(cnt <= k - 1 for cnt in counts)
    propD = mu - (k - 1) * nu > cluster_tol
    ric_lower = ric_lower_bound(d, k, mu, nu)

    worst = min_ric_k(g, p, vecs, k, budget=budget, seed=seed, curv=c)
    worst_sample = {"u": worst.query.u.tolist(), "V": worst.query.frame.tolist(), "value": worst.value}
    return CompsimpReport(propA, propB, propC, propD, float(mu), float(nu), counts, float(ric_lower),
                          worst_sample, resid_a, clusters, d, k)


def sampled_lemma_bounds(g: MetricField, p, K, k: int, mu: float, nu: float, n_samples: int = 1000, seed: int = 0,
                         curv=None):
    """Sampled margins for ``Ric_{d-1}(u, span K) >= lower`` and ``sec <= mu`` on span K.

    Returns ``(min ric_{d-1} - lower, max sec - mu)``.
    """
    vecs, Rf, _ = frame_curvature(g, p, K, curv)
    d = len(vecs)
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n_samples, d))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    E = np.swapaxes(_householder_complements(U), 1, 2)  # (m, d-1, d)
    ric_full = ric_k_batch(Rf, U, E)
    lower = ric_lower_bound(d, k, mu, nu)
    Z = rng.standard_normal((n_samples, d, 2))
    Q, _ = np.linalg.qr(Z)
    secs = np.einsum("abcd,ma,mb,mc,md->m", Rf, Q[:, :, 0], Q[:, :, 1], Q[:, :, 1], Q[:, :, 0], optimize=True)
    return float(np.min(ric_full) - lower), float(np.max(secs) - mu)
