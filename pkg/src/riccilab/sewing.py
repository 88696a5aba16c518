"""Sewing a model metric into an ambient metric near a point.

The model is transplanted by ``F = exp^model_0 o iota o (exp^g_p)^{-1}``,
with ``iota`` a linear isometry ``(T_pM, g_p) -> (T_0, g^model_0)``, and
``g* = F^* g^model``.  Because both exponential maps send rays to radial
geodesics, g and g* agree on radial pairings (Gauss lemma).  The blend
``(1 - phi) g + phi g*`` uses a bump in the g-distance to p.

All sampling happens on a deterministic grid: directions at p times a
geometric radius ladder, with points reached by forward geodesic flow.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np

from .curvature import orthonormalize, riemann
from .errors import (
    BadInput,
    DegenerateMetric,
    ExpansionAnomaly,
    HypothesisViolated,
)
from .geodesics import flow, shoot
from .metric import MetricField, Scheme
from .model import ModelSpec, model_metric_field

__all__ = [
    "BumpProfile",
    "bump",
    "Ball",
    "pullback_metric",
    "pullback_model",
    "radial_compatibility_check",
    "sew",
    "c1_distance_estimate",
    "estimate_r_constant",
    "TaylorReport",
    "jacobi_taylor_check",
    "SewReport",
    "sew_report",
    "sew_sweep",
    "geodesic_agreement",
    "jacobi_residual",
    "directions",
]

BUMP_SHARPNESS = 0.9  # f(s) = exp(-c/s); the profile's max slope is 2c/delta
PULLBACK_STEPS = 40
PULLBACK_FD_STEP = 1e-3
RADIAL_TOL = 1e-6
SLACK = 1.05


# --- bump profile ---


def _smoothstep(s, c=BUMP_SHARPNESS):
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    with np.errstate(over="ignore"):
        out[mid] = 1.0 / (1.0 + np.exp(c / sm - c / (1.0 - sm)))
    return out


def _smoothstep_deriv(s, c=BUMP_SHARPNESS):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    with np.errstate(over="ignore"):
        S = 1.0 / (1.0 + np.exp(c / sm - c / (1.0 - sm)))
    out[mid] = S * (1.0 - S) * (c / sm**2 + c / (1.0 - sm) ** 2)
    return out


@dataclass(frozen=True)
class BumpProfile:
    """``phi(t) = S((2 delta - t) / delta)``: 1 on ``[0, delta]``, 0 from ``2 delta`` on."""

    delta: float
    max_slope: float = 0.0

    def phi(self, t):
        return _smoothstep((2.0 * self.delta - np.asarray(t, dtype=float)) / self.delta)

    def deriv(self, t):
        return -_smoothstep_deriv((2.0 * self.delta - np.asarray(t, dtype=float)) / self.delta) / self.delta


def bump(delta: float, n_check: int = 10_000) -> BumpProfile:
    """Bump profile with ``sup |phi'| <= 2 / delta``, checked on a dense grid."""
    if not delta > 0:
        raise BadInput("delta must be positive")
    prof = BumpProfile(float(delta))
    t = np.linspace(0.0, 3.0 * delta, n_check)
    slope = float(np.max(np.abs(prof.deriv(t))))
    if slope > 2.0 / delta:
        raise AssertionError(f"bump slope {slope * delta:.4f}/delta exceeds 2/delta")
    return BumpProfile(float(delta), slope)


# --- sampling grid ---


def directions(n: int, count: int) -> np.ndarray:
    """Deterministic, well-spread unit vectors in R^n.

    Fibonacci lattice on S^2, equal angles on S^1, and a scrambled Sobol
    sequence pushed through the normal quantile in higher dimensions.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])[: max(count, 1)]
    if n == 2:
        a = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if n == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        r = np.sqrt(1 - z**2)
        ang = np.pi * (1 + 5**0.5) * i
        return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)
    import warnings

    from scipy.stats import norm, qmc

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # balance warning for non powers of two
        pts = qmc.Sobol(n, scramble=True, seed=0).random(count)
    d = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _basis_at(g, p):
    """g_p-orthonormal basis (rows, chart components) of T_pM."""
    return orthonormalize(np.eye(g.dim), g(p), cond_max=1e12, leading=g.dim)


@dataclass
class Ball:
    """Geodesic ball of ``metric`` around ``center``."""

    center: np.ndarray
    radius: float
    metric: Optional[MetricField] = None
    n_dirs: int = 24
    n_radii: int = 10
    fd_step: Optional[float] = None
    steps: int = PULLBACK_STEPS

    def radii(self):
        return self.radius * 2.0 ** (-np.arange(self.n_radii) / 4.0)


@dataclass
class _Grid:
    """Centre samples and their normal-coordinate finite-difference neighbours.

    Every array has leading shape ``(B, 1 + 2n)``; slot 0 is the sample,
    slots ``1 + 2m`` / ``2 + 2m`` are the ``+eps`` / ``-eps`` neighbours
    along the m-th normal coordinate.
    """

    v: np.ndarray
    q: np.ndarray
    t: np.ndarray
    radial: np.ndarray  # unit g-velocity of the ray at q
    J: np.ndarray  # d exp_p at v
    eps: float
    drop: np.ndarray  # coordinate vector dropped when building adapted frames
    E0: np.ndarray  # orthonormal basis at p


def _grid(g: MetricField, p, ball: Ball) -> _Grid:
    p = np.asarray(p, dtype=float)
    n = g.dim
    E0 = _basis_at(g, p)
    dirs = directions(n, ball.n_dirs) @ E0
    radii = ball.radii()
    v0 = (radii[:, None, None] * dirs[None]).reshape(-1, n)
    eps = ball.fd_step if ball.fd_step is not None else min(1e-4, ball.radius / 200.0)
    off = np.concatenate([np.zeros((1, n)), (eps * np.kron(E0, [[1.0], [-1.0]]))])  # (1 + 2n, n)
    V = v0[:, None, :] + off[None]
    B = V.shape[0]
    res = flow(g, p[None], V.reshape(-1, n), steps=ball.steps, variational=True)
    Gp = g(p)
    t = np.sqrt(np.einsum("bi,ij,bj->b", V.reshape(-1, n), Gp, V.reshape(-1, n)))
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = res.v / t[:, None]
    q = res.x.reshape(B, -1, n)
    radial = radial.reshape(B, -1, n)
    drop = _drop_index(g(q[:, 0]), radial[:, 0])
    return _Grid(V, q, t.reshape(B, -1), radial, res.J.reshape(B, -1, n, n), eps, drop, E0)


def _drop_index(G, radial):
    """Coordinate vector most aligned with the ray; it is left out of the adapted frame."""
    align = np.abs(np.einsum("bi,bij->bj", radial, G)) / np.sqrt(np.einsum("bjj->bj", G))
    return np.argmax(align, axis=1)


def _adapted_frames(G, radial, drop):
    """Gram-Schmidt of ``(radial, e_i for i != drop)`` under G, batched over leading axes."""
    n = G.shape[-1]
    shape = G.shape[:-2]
    eye = np.eye(n)
    cols = [radial]
    for i in range(n - 1):
        idx = np.where(i < drop, i, i + 1)
        cols.append(np.broadcast_to(eye[idx], shape + (n,)).copy() if np.ndim(idx) else eye[idx])
    out = []
    for vec in cols:
        w = np.array(np.broadcast_to(vec, shape + (n,)), dtype=float)
        for e in out:
            w = w - np.einsum("...i,...ij,...j->...", w, G, e)[..., None] * e
        w = w / np.sqrt(np.einsum("...i,...ij,...j->...", w, G, w))[..., None]
        out.append(w)
    return np.stack(out, axis=-2)


def _frame_values(H, E):
    return np.einsum("...ai,...ij,...bj->...ab", E, H, E)


def _gradient_norms(vals, grid: _Grid, g, p):
    """Max over entries of the g-norm of the gradient of each frame entry at the centres."""
    B = vals.shape[0]
    n = grid.v.shape[-1]
    plus, minus = vals[:, 1::2], vals[:, 2::2]
    ds = (plus - minus) / (2.0 * grid.eps)  # (B, n, a, b) derivative in normal coordinate s_m
    Gp = g(np.asarray(p, dtype=float))
    # s_m = <v, E0_m>_{g_p}, so ds/dq = E0 G_p J^{-1}
    Jinv = np.linalg.inv(grid.J[:, 0])
    S = np.einsum("mi,ij,bjk->bmk", grid.E0, Gp, Jinv)
    df = np.einsum("zmab,zmk->zabk", ds, S)
    Ginv = np.linalg.inv(g(grid.q[:, 0]))
    norms = np.sqrt(np.abs(np.einsum("zabk,zkl,zabl->zab", df, Ginv, df)))
    return norms.reshape(B, -1).max(axis=1)


# --- pullback construction ---


@dataclass
class _PullbackData:
    base: MetricField
    p: np.ndarray
    target: MetricField
    target_point: np.ndarray
    iota: np.ndarray  # chart components at p -> chart components at the target point
    steps: int


def _pullback_from(data: _PullbackData, v, J):
    """``g*`` at ``exp_p(v)`` given ``v`` and ``d exp_p`` at v."""
    w = v @ data.iota.T
    res = flow(data.target, data.target_point[None], w, steps=data.steps, variational=True)
    DF = res.J @ data.iota @ np.linalg.inv(J)
    GT = data.target(res.x)
    return np.swapaxes(DF, -1, -2) @ GT @ DF


def pullback_metric(g: MetricField, p, target: MetricField, target_point=None, steps: int = PULLBACK_STEPS,
                    fd_step: float = PULLBACK_FD_STEP) -> MetricField:
    """``F^* target`` with ``F = exp^target o iota o (exp^g_p)^{-1}``."""
    p = np.asarray(p, dtype=float)
    n = g.dim
    if target.dim != n:
        raise BadInput("target metric must have the same dimension")
    tp = np.zeros(n) if target_point is None else np.asarray(target_point, dtype=float)
    E = _basis_at(g, p)
    Bm = _basis_at(target, tp)
    iota = Bm.T @ np.linalg.inv(E.T)
    data = _PullbackData(g, p, target, tp, iota, steps)

    def ev(q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1]
        Q = q.reshape(-1, n)
        sh = shoot(g, p, Q, steps=steps)
        return _pullback_from(data, sh.v, sh.J).reshape(shape + (n, n))

    return MetricField(n, ev, domain=g.domain, scheme=Scheme.FINITE_DIFFERENCE, fd_step=fd_step,
                       name=f"pullback({target.name})", meta={"pullback": data})


def pullback_model(g: MetricField, p, spec: ModelSpec, steps: int = PULLBACK_STEPS) -> MetricField:
    """The model metric of ``spec`` transplanted to a neighbourhood of p."""
    return pullback_metric(g, p, model_metric_field(spec), np.zeros(spec.n), steps=steps)


def _eval_on_grid(metric: MetricField, grid: _Grid, base: MetricField, p):
    """Evaluate ``metric`` on all grid points, reusing the grid's shooting data where possible."""
    n = grid.v.shape[-1]
    flat_q = grid.q.reshape(-1, n)
    data = metric.meta.get("pullback") if metric.meta else None
    if data is not None and data.base is base and np.array_equal(data.p, np.asarray(p, dtype=float)):
        out = _pullback_from(data, grid.v.reshape(-1, n), grid.J.reshape(-1, n, n))
    else:
        out = metric(flat_q)
    return out.reshape(grid.q.shape + (n,))


def _curvature_at(metric: MetricField, p):
    """Lowered curvature of ``metric`` at p; exact for pullbacks (pushed through iota)."""
    data = metric.meta.get("pullback") if metric.meta else None
    if data is not None and np.array_equal(data.p, np.asarray(p, dtype=float)):
        RT = riemann(data.target, data.target_point).riemann_lowered
        A = data.iota
        return np.einsum("abcd,ai,bj,ck,dl->ijkl", RT, A, A, A, A)
    return riemann(metric, p).riemann_lowered


# --- checks ---


def _rays(g, p, n_rays, radii, steps, seed=None):
    p = np.asarray(p, dtype=float)
    n = g.dim
    E0 = _basis_at(g, p)
    if seed is None:
        dirs = directions(n, n_rays)
    else:
        d = np.random.default_rng(seed).standard_normal((n_rays, n))
        dirs = d / np.linalg.norm(d, axis=1, keepdims=True)
    dirs = dirs @ E0
    V = (np.asarray(radii)[:, None, None] * dirs[None]).reshape(-1, n)
    res = flow(g, p[None], V, steps=steps, variational=True)
    t = np.repeat(np.asarray(radii), len(dirs))
    return V, res, t, dirs


def radial_compatibility_check(g: MetricField, gstar: MetricField, p, n_rays: int = 16, n_radii: int = 4,
                               radius: float = 0.2, steps: int = PULLBACK_STEPS) -> float:
    """Max of ``|(g - g*)(gamma', w)|`` over sampled rays, radii and g-orthonormal w."""
    radii = radius * (np.arange(1, n_radii + 1) / n_radii)
    V, res, t, _ = _rays(g, p, n_rays, radii, steps)
    radial = res.v / t[:, None]
    G = g(res.x)
    data = gstar.meta.get("pullback") if gstar.meta else None
    if data is not None and data.base is g and np.array_equal(data.p, np.asarray(p, dtype=float)):
        Gs = _pullback_from(data, V, res.J)
    else:
        Gs = gstar(res.x)
    E = _adapted_frames(G, radial, _drop_index(G, radial))
    vals = np.einsum("bi,bij,baj->ba", radial, G - Gs, E)
    return float(np.max(np.abs(vals)))


def sew(g: MetricField, gstar: MetricField, p, delta: float, check: bool = True, tol: float = RADIAL_TOL,
        steps: int = PULLBACK_STEPS) -> MetricField:
    """``(1 - phi) g + phi g*`` with the bump evaluated at the g-distance to p."""
    p = np.asarray(p, dtype=float)
    n = g.dim
    prof = bump(delta)
    if check:
        resid = radial_compatibility_check(g, gstar, p, radius=2.0 * delta, steps=steps)
        if resid > tol:
            raise HypothesisViolated(f"radial compatibility residual {resid:.3g} exceeds {tol:g}")
    data = gstar.meta.get("pullback") if gstar.meta else None
    shared = data is not None and data.base is g and np.array_equal(data.p, p)
    Gp = g(p)

    def ev(q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1]
        Q = q.reshape(-1, n)
        out = np.array(g(Q), dtype=float)
        d = Q - p
        # cheap rejection of points that are certainly outside 2 delta
        lower = np.sqrt(np.einsum("bi,ij,bj->b", d, Gp, d))
        cand = np.nonzero(lower < 4.0 * delta)[0]
        if cand.size:
            sh = shoot(g, p, Q[cand], steps=steps)
            t = np.sqrt(np.einsum("bi,ij,bj->b", sh.v, Gp, sh.v))
            phi = prof.phi(t)
            live = phi > 0
            if np.any(live):
                idx = cand[live]
                if shared:
                    Gs = _pullback_from(data, sh.v[live], sh.J[live])
                else:
                    Gs = gstar(Q[idx])
                f = phi[live][:, None, None]
                out[idx] = (1.0 - f) * out[idx] + f * Gs
        return out.reshape(shape + (n, n))

    sewn = MetricField(n, ev, domain=g.domain, scheme=Scheme.FINITE_DIFFERENCE, fd_step=min(1e-3, delta / 100),
                       name=f"sew({g.name},{gstar.name},{delta:g})",
                       meta={"sew": {"base": g, "gstar": gstar, "p": p, "delta": float(delta), "bump": prof}})
    # positive definiteness: asserted by convexity, spot-checked on a small grid
    grid = _grid(g, p, Ball(p, 2.0 * delta, n_dirs=8, n_radii=4, steps=steps))
    w = np.linalg.eigvalsh(sewn(grid.q[:, 0]))
    if not np.all(w[:, 0] > 0):
        raise DegenerateMetric("sewn metric failed the positive-definiteness spot check")
    return sewn


def c1_distance_estimate(g1: MetricField, g2: MetricField, region: Ball, n_samples: Optional[int] = None):
    """Sampled C^0 and C^1 distance of two metrics on a geodesic ball of the reference metric.

    Frames are reference-orthonormal and adapted to the ray through each
    sample; derivatives are central differences in normal coordinates,
    converted to reference-gradient norms.  ``c1`` includes ``c0``.
    """
    ref = region.metric if region.metric is not None else g1
    ball = region
    if n_samples is not None:
        n_radii = max(2, min(region.n_radii, n_samples))
        ball = Ball(region.center, region.radius, ref, max(1, n_samples // n_radii), n_radii, region.fd_step,
                    region.steps)
    p = np.asarray(region.center, dtype=float)
    grid = _grid(ref, p, ball)
    vals = _difference_values(g1, g2, ref, grid, p)
    c0 = float(np.max(np.linalg.norm(vals[:, 0], ord=2, axis=(-2, -1))))
    grad = float(np.max(_gradient_norms(vals, grid, ref, p)))
    return {"c0": c0, "c1": max(c0, grad)}


def _difference_values(g1, g2, ref, grid: _Grid, p, divide_t2=False):
    n = grid.v.shape[-1]
    G1 = _eval_on_grid(g1, grid, ref, p)
    G2 = _eval_on_grid(g2, grid, ref, p)
    Gr = G1 if g1 is ref else ref(grid.q.reshape(-1, n)).reshape(grid.q.shape + (n,))
    drop = np.broadcast_to(grid.drop[:, None], grid.t.shape)
    E = _adapted_frames(Gr, grid.radial, drop)
    vals = _frame_values(G1 - G2, E)
    if divide_t2:
        vals = vals / (grid.t**2)[..., None, None]
    return vals


def estimate_r_constant(g: MetricField, gstar: MetricField, p, radius: float, n_dirs: int = 24, n_radii: int = 10,
                        steps: int = PULLBACK_STEPS, fd_step: Optional[float] = None, detail: bool = False):
    """Sampled sup of ``|r|`` and ``|grad r|`` where ``g - g* = t^2 r``.

    Samples closer than ``1e-4`` to p are skipped (the ratio is resolved
    there by :func:`jacobi_taylor_check`).  A ratio growing like a negative
    power of t towards p raises ExpansionAnomaly.
    """
    p = np.asarray(p, dtype=float)
    ball = Ball(p, radius, g, n_dirs, n_radii, fd_step, steps)
    grid = _grid(g, p, ball)
    keep = grid.t[:, 0] >= 1e-4
    vals = _difference_values(g, gstar, g, grid, p, divide_t2=True)[keep]
    sub = _Grid(grid.v[keep], grid.q[keep], grid.t[keep], grid.radial[keep], grid.J[keep], grid.eps,
                grid.drop[keep], grid.E0)
    r_norm = np.linalg.norm(vals[:, 0], ord=2, axis=(-2, -1))
    grad = _gradient_norms(vals, sub, g, p)
    # blow-up test: sup |r| on the innermost shell against the middle of the ladder
    tt = sub.t[:, 0]
    shells = np.unique(tt.round(14))
    if shells.size >= 4:
        inner = r_norm[np.isclose(tt, shells[0])].max()
        middle = r_norm[np.isclose(tt, shells[shells.size // 2])].max()
        scale = max(middle, 1e-300)
        if inner > 1e-10 and inner > 4.0 * scale and inner / scale > (shells[shells.size // 2] / shells[0]) ** 0.5:
            raise ExpansionAnomaly(f"|g - g*| / t^2 grows towards p ({middle:.3g} -> {inner:.3g})")
    C_r = float(r_norm.max()) if r_norm.size else 0.0
    C_dr = float(grad.max()) if grad.size else 0.0
    C = max(C_r, C_dr)
    if detail:
        return {"C_est": C, "sup_r": C_r, "sup_grad_r": C_dr}
    return C


# --- Jacobi / Taylor check ---


@dataclass
class TaylorReport:
    ts: List[float]
    gaps: List[float]
    normalized_gaps: List[float]
    gap_over_t2: List[float]
    t4_coefficient_est: float
    curvature_prediction: float
    relative_error: float
    derivative_at_min_t: float
    derivative_limit: float
    richardson_levels: int
    pair: Tuple[Tuple[int, int], Tuple[int, int]]
    direction: List[float]

    def to_dict(self):
        out = asdict(self)
        out["pair"] = [list(x) for x in self.pair]
        return out


def _richardson(values, ratio=2.0):
    """Extrapolate ``a_0 + a_1 h + a_2 h^2 + ...`` sampled at ``h_0 / ratio^i`` to ``h = 0``."""
    A = [list(values)]
    for j in range(1, len(values)):
        prev = A[-1]
        f = ratio**j
        A.append([(f * prev[i + 1] - prev[i]) / (f - 1.0) for i in range(len(prev) - 1)])
    return A[-1][0], A


def _rotational(u, pair):
    """Initial derivative of the rotational field ``x^j d_i - x^i d_j`` along the ray through u."""
    i, j = pair
    w = np.zeros_like(u)
    w[i] += u[j]
    w[j] -= u[i]
    return w


def jacobi_taylor_check(g: MetricField, gstar: MetricField, p, pair=((0, 1), (0, 1)), direction=None,
                        t0: float = 0.1, levels: int = 4, steps: int = PULLBACK_STEPS,
                        rel_step: float = 1e-3) -> TaylorReport:
    """Compare ``(g - g*)(J_a, J_b)`` along a ray with its ``t^4`` Taylor coefficient.

    ``J_a`` are the rotational fields of the normal coordinates at p for
    the index pairs in ``pair``; ``direction`` is the ray direction in a
    g_p-orthonormal basis (default: the first basis vector).
    """
    p = np.asarray(p, dtype=float)
    n = g.dim
    E0 = _basis_at(g, p)
    u = np.zeros(n) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        u[0] = 1.0
    u = u / np.linalg.norm(u)
    wa = _rotational(u, pair[0])
    wb = _rotational(u, pair[1])
    if np.linalg.norm(wa) < 1e-12 or np.linalg.norm(wb) < 1e-12:
        raise BadInput("rotational fields vanish along the chosen ray")
    ts = t0 / 2.0 ** np.arange(levels)
    # each radius plus two neighbours for the derivative
    tt = np.concatenate([ts, ts * (1 + rel_step), ts * (1 - rel_step)])
    uc, wac, wbc = u @ E0, wa @ E0, wb @ E0
    V = tt[:, None] * uc
    res = flow(g, p[None], V, steps=steps, variational=True)
    Ja = res.J @ (tt[:, None] * wac)[..., None]
    Jb = res.J @ (tt[:, None] * wbc)[..., None]
    Ja, Jb = Ja[..., 0], Jb[..., 0]
    G = g(res.x)
    data = gstar.meta.get("pullback") if gstar.meta else None
    if data is not None and data.base is g and np.array_equal(data.p, p):
        Gs = _pullback_from(data, V, res.J)
    else:
        Gs = gstar(res.x)
    gap = np.einsum("bi,bij,bj->b", Ja, G - Gs, Jb)
    na = np.sqrt(np.einsum("bi,bij,bj->b", Ja, G, Ja))
    nb = np.sqrt(np.einsum("bi,bij,bj->b", Jb, G, Jb))
    norm_gap = gap / (na * nb)
    L = levels
    gaps, ngap = gap[:L], norm_gap[:L]
    deriv = (norm_gap[L:2 * L] - norm_gap[2 * L:]) / (2 * rel_step * ts)

    c4, _ = _richardson(gaps / ts**4)
    d0, _ = _richardson(deriv)
    Rg = riemann(g, p).riemann_lowered
    Rs = _curvature_at(gstar, p)
    dR = Rg - Rs
    pred = float(-np.einsum("ijkl,i,j,k,l->", dR, wac, uc, uc, wbc) / 3.0)

    scale = float(np.max(na[:L] * nb[:L]))
    if np.max(np.abs(gaps)) > 1e-12 * scale and np.all(np.abs(gaps[-2:]) > 0):
        order = math.log2(abs(gaps[-2] / gaps[-1]))
        if order < 3.5:
            raise ExpansionAnomaly(f"gap decays like t^{order:.2f}; expected t^4 (radial compatibility failing?)")
    rel = abs(c4 - pred) / abs(pred) if pred != 0 else abs(c4)
    return TaylorReport(ts.tolist(), gaps.tolist(), ngap.tolist(), (ngap / ts**2).tolist(), float(c4), pred,
                        float(rel), float(deriv[L - 1]), float(d0), L, (tuple(pair[0]), tuple(pair[1])), u.tolist())


# --- sewing reports ---


@dataclass
class SewReport:
    delta: float
    c0_sample: float
    c1_sample: float
    C_est: float
    bound_c0: float
    bound_c1: float
    passed: bool
    sup_r: float = 0.0
    sup_grad_r: float = 0.0
    inner_identity: Optional[bool] = None
    outer_identity: Optional[bool] = None
    max_bump_slope: float = 0.0

    def to_dict(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def _identity_checks(g, gstar, sewn, p, delta, n_dirs=8, steps=PULLBACK_STEPS):
    n = g.dim
    E0 = _basis_at(g, p)
    dirs = directions(n, n_dirs) @ E0
    inner_r = delta * np.array([0.25, 0.5, 0.9])
    outer_r = delta * np.array([2.0, 2.5, 3.0])
    Vi = (inner_r[:, None, None] * dirs[None]).reshape(-1, n)
    Vo = (outer_r[:, None, None] * dirs[None]).reshape(-1, n)
    Qi = flow(g, p[None], Vi, steps=steps).x
    Qo = flow(g, p[None], Vo, steps=steps).x
    inner = bool(np.array_equal(sewn(Qi), gstar(Qi)))
    outer = bool(np.array_equal(sewn(Qo), g(Qo)))
    return inner, outer


def sew_report(g: MetricField, gstar: MetricField, p, delta: float, n_dirs: int = 24, n_radii: int = 10,
               steps: int = PULLBACK_STEPS, identity: bool = True) -> SewReport:
    """Sampled C^0/C^1 distance of the sewn metric from g against the bounds ``4 delta^2 C`` and ``12 delta C + 4 delta^2 C``."""
    p = np.asarray(p, dtype=float)
    sewn = sew(g, gstar, p, delta, steps=steps)
    fd = min(1e-4, delta / 100.0)
    ball = Ball(p, 2.0 * delta, g, n_dirs, n_radii, fd, steps)
    d = c1_distance_estimate(g, sewn, ball)
    rc = estimate_r_constant(g, gstar, p, 2.0 * delta, n_dirs, n_radii, steps, fd, detail=True)
    C = rc["C_est"]
    b0 = 4.0 * delta**2 * C
    b1 = 12.0 * delta * C + 4.0 * delta**2 * C
    ok = d["c0"] <= SLACK * b0 and d["c1"] <= SLACK * b1
    inner = outer = None
    if identity:
        inner, outer = _identity_checks(g, gstar, sewn, p, delta, steps=steps)
    return SewReport(float(delta), d["c0"], d["c1"], C, b0, b1, bool(ok), rc["sup_r"], rc["sup_grad_r"],
                     inner, outer, sewn.meta["sew"]["bump"].max_slope)


def sew_sweep(g: MetricField, gstar: MetricField, p, delta0: float, levels: int = 3, **kw) -> List[SewReport]:
    """Reports for ``delta0, delta0/2, ...``."""
    return [sew_report(g, gstar, p, delta0 / 2.0**i, **kw) for i in range(levels)]


# --- converse Gauss lemma, sampled ---


def geodesic_agreement(g: MetricField, gstar: MetricField, p, n_rays: int = 20, length: float = 0.2,
                       steps: int = 40, seed: int = 0) -> float:
    """Max chart distance between g-radial geodesics and g*-geodesics with the same initial data."""
    p = np.asarray(p, dtype=float)
    n = g.dim
    E0 = _basis_at(g, p)
    d = np.random.default_rng(seed).standard_normal((n_rays, n))
    V = (d / np.linalg.norm(d, axis=1, keepdims=True)) @ E0
    a = flow(g, p[None], V, T=length, steps=steps, record=True)
    b = flow(gstar, p[None], V, T=length, steps=steps, record=True)
    return float(np.max(np.linalg.norm(a.xs - b.xs, axis=-1)))


def jacobi_residual(g: MetricField, gstar: MetricField, p, n_rays: int = 20, n_radii: int = 4, length: float = 0.2,
                    steps: int = 40, seed: int = 0) -> float:
    """Residual of g-Jacobi fields vanishing at p in the g*-Jacobi equation.

    Along a common geodesic the two linearised equations differ by
    ``2 (Gamma* - Gamma)(v, J') + ((dGamma* - dGamma) . J)(v, v)``; the
    result is its max over sampled rays, radii and initial derivatives,
    relative to ``|J'|``.
    """
    from .geodesics import _dgamma_vv
    from .curvature import christoffel_from_jet

    p = np.asarray(p, dtype=float)
    n = g.dim
    E0 = _basis_at(g, p)
    d = np.random.default_rng(seed).standard_normal((n_rays, n))
    V = (d / np.linalg.norm(d, axis=1, keepdims=True)) @ E0
    res = flow(g, p[None], V, T=length, steps=steps, variational=True, record=True)
    pick = np.linspace(0, steps, n_radii + 1).astype(int)[1:]
    X = res.xs[pick].reshape(-1, n)
    U = res.vs[pick].reshape(-1, n)
    J = res.Js[pick].reshape(-1, n, n)
    Jd = res.Jds[pick].reshape(-1, n, n)
    out = []
    for metric in (g, gstar):
        G, dG, d2G = metric.jet(X, order=2)
        gamma, Ginv, _ = christoffel_from_jet(G, dG)
        gv = np.einsum("bijk,bk->bij", gamma, U)
        dvv = _dgamma_vv(G, Ginv, dG, d2G, U)
        out.append(2.0 * gv @ Jd + dvv @ J)
    diff = out[1] - out[0]
    scale = np.linalg.norm(Jd, axis=1).max()
    return float(np.max(np.abs(diff)) / max(scale, 1e-300))
