"""Geodesic integration, the exponential map and its inverse.

The state ``(x, v)`` follows ``x'' = -Gamma(x', x')`` with classical RK4.
With ``variational=True`` the flow also carries ``J = dx/dv0`` and its
derivative, integrated from the linearised equation

    J'' = -2 Gamma(v, J') - (dGamma . J)(v, v)

so that ``J(1)`` is the differential of ``exp_p`` at ``v0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .curvature import christoffel_from_jet
from .errors import BadInput, DomainExit, OutsideInjectivityEstimate
from .metric import MetricField

__all__ = ["GeodesicPath", "FlowResult", "flow", "geodesic_exp", "exp_map", "exp_inverse", "ShootResult", "shoot"]

DEFAULT_STEPS = 1000
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-13
ACCEPT_TOL = 1e-9


@dataclass
class GeodesicPath:
    start: np.ndarray
    initial_velocity: np.ndarray
    samples: List[Tuple[float, np.ndarray, np.ndarray]] = field(default_factory=list)
    energy_drift: float = 0.0

    @property
    def end(self):
        return self.samples[-1][1]

    @property
    def points(self):
        return np.array([s[1] for s in self.samples])

    @property
    def ts(self):
        return np.array([s[0] for s in self.samples])


@dataclass
class FlowResult:
    x: np.ndarray
    v: np.ndarray
    J: Optional[np.ndarray] = None
    Jd: Optional[np.ndarray] = None
    xs: Optional[np.ndarray] = None  # (steps + 1, B, n) when recorded
    vs: Optional[np.ndarray] = None
    Js: Optional[np.ndarray] = None
    Jds: Optional[np.ndarray] = None


def _first(A, v):
    """``sum_j A[b, j, ...] v[b, j]`` as a batched matrix product."""
    B, n = v.shape
    return (v[:, None, :] @ A.reshape(B, n, -1)).reshape((B,) + A.shape[2:])


def _last(A, v):
    B, n = v.shape
    return (A.reshape(B, -1, n) @ v[:, :, None]).reshape(A.shape[:-1])


def _dgamma_vv(G, Ginv, dG, d2G, v):
    """``d_m Gamma^i_{jk} v^j v^k`` without forming the full derivative tensor."""
    # L_l = Gamma_{ljk} v^j v^k (Christoffel symbols of the first kind)
    dGv = _last(dG, v)  # [l, k] = d_j g_lk v^j
    L = _last(dGv, v) - 0.5 * _first(_first(dG, v), v)
    d2Gv = _last(d2G, v)  # [l, k, m] uses the symmetry of d_j d_m
    dL = np.einsum("blkm,bk->blm", d2Gv, v) - 0.5 * _first(_first(d2G, v), v)
    up = (Ginv @ L[..., None])[..., 0]
    return -Ginv @ _first(dG, up) + Ginv @ dL


def _rhs(g, x, v, J, Jd, variational):
    if variational:
        G, dG, d2G = g.jet(x, order=2)
    else:
        G, dG = g.jet(x, order=1)
    gamma, Ginv, _ = christoffel_from_jet(G, dG)
    gv = _last(gamma, v)  # Gamma^i_{jk} v^k, symmetric in j, k
    a = -_last(gv, v)
    if not variational:
        return v, a, None, None
    dvv = _dgamma_vv(G, Ginv, dG, d2G, v)
    Jdd = -2.0 * gv @ Jd - dvv @ J
    return v, a, Jd, Jdd


def flow(g: MetricField, x0, v0, T: float = 1.0, steps: int = DEFAULT_STEPS, variational: bool = False,
         record: bool = False, check_domain: bool = True) -> FlowResult:
    """Integrate geodesics from the rows of ``x0`` with initial velocities ``v0`` over ``[0, T]``."""
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    v = np.atleast_2d(np.asarray(v0, dtype=float)).copy()
    x, v = np.broadcast_arrays(x, v)
    x, v = x.copy(), v.copy()
    B, n = x.shape
    if n != g.dim:
        raise BadInput(f"points have {n} coordinates, metric dimension is {g.dim}")
    J = Jd = None
    if variational:
        J = np.zeros((B, n, n))
        Jd = np.broadcast_to(np.eye(n), (B, n, n)).copy()
    h = T / steps
    rec = {"xs": [x.copy()], "vs": [v.copy()], "Js": [], "Jds": []} if record else None
    if record and variational:
        rec["Js"].append(J.copy())
        rec["Jds"].append(Jd.copy())

    for step in range(steps):
        k1 = _rhs(g, x, v, J, Jd, variational)
        s2 = [x + 0.5 * h * k1[0], v + 0.5 * h * k1[1]]
        s2 += [J + 0.5 * h * k1[2], Jd + 0.5 * h * k1[3]] if variational else [None, None]
        k2 = _rhs(g, *s2, variational)
        s3 = [x + 0.5 * h * k2[0], v + 0.5 * h * k2[1]]
        s3 += [J + 0.5 * h * k2[2], Jd + 0.5 * h * k2[3]] if variational else [None, None]
        k3 = _rhs(g, *s3, variational)
        s4 = [x + h * k3[0], v + h * k3[1]]
        s4 += [J + h * k3[2], Jd + h * k3[3]] if variational else [None, None]
        k4 = _rhs(g, *s4, variational)
        xn = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        vn = v + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if check_domain:
            inside = g.contains(xn)
            bad = ~inside | ~np.all(np.isfinite(xn), axis=-1)
            if np.any(bad):
                b = int(np.argmax(bad))
                raise DomainExit(f"geodesic left the metric domain at parameter {(step + 1) * h:.6g}",
                                 (step * h, x[b].copy(), v[b].copy()))
        if variational:
            J = J + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            Jd = Jd + h / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        x, v = xn, vn
        if record:
            rec["xs"].append(x.copy())
            rec["vs"].append(v.copy())
            if variational:
                rec["Js"].append(J.copy())
                rec["Jds"].append(Jd.copy())

    out = FlowResult(x, v, J, Jd)
    if record:
        out.xs, out.vs = np.array(rec["xs"]), np.array(rec["vs"])
        if variational:
            out.Js, out.Jds = np.array(rec["Js"]), np.array(rec["Jds"])
    return out


def _speed(g, x, v):
    return np.sqrt(np.einsum("...i,...ij,...j->...", v, g(x), v))


def geodesic_exp(g: MetricField, p, v, t_max: float = 1.0, steps: int = DEFAULT_STEPS) -> GeodesicPath:
    """Geodesic from p with initial velocity v on the parameter interval ``[0, t_max]``.

    Samples carry the g-arc-length ``t = s |v|_g``.  ``energy_drift`` is the
    relative change of ``|velocity|_g`` along the path.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if not g.contains(p):
        raise BadInput("start point lies outside the metric domain")
    res = flow(g, p[None], v[None], T=t_max, steps=steps, record=True)
    xs, vs = res.xs[:, 0], res.vs[:, 0]
    speeds = _speed(g, xs, vs)
    s0 = speeds[0]
    s = np.linspace(0.0, t_max, steps + 1)
    path = GeodesicPath(p, v, [(float(si * s0), xi, vi) for si, xi, vi in zip(s, xs, vs)])
    path.energy_drift = float(np.max(np.abs(speeds - s0)) / s0) if s0 > 0 else 0.0
    return path


def exp_map(g: MetricField, p, v, steps: int = DEFAULT_STEPS):
    """``exp_p(v)`` for a batch of tangent vectors ``v`` (..., n)."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    shape = v.shape
    res = flow(g, p[None], v.reshape(-1, g.dim), steps=steps)
    return res.x.reshape(shape)


@dataclass
class ShootResult:
    v: np.ndarray  # exp_p^{-1}(q)
    x: np.ndarray  # exp_p(v), within the tolerance of q
    velocity: np.ndarray  # geodesic velocity at the endpoint
    J: np.ndarray  # d exp_p at v
    residual: np.ndarray
    iterations: np.ndarray


def _initial_guess(g, p, Q):
    G, dG = g.jet(p, order=1)
    gamma, _, _ = christoffel_from_jet(G, dG)
    d = Q - p
    # exp_p(v) = p + v - Gamma(v, v)/2 + O(|v|^3)
    return d + 0.5 * np.einsum("ijk,bj,bk->bi", gamma, d, d)


def shoot(g: MetricField, p, q, guess=None, steps: int = DEFAULT_STEPS, max_iter: int = NEWTON_MAX_ITER,
          tol: float = NEWTON_TOL) -> ShootResult:
    """Newton shooting for ``exp_p(v) = q`` over a batch of targets ``q`` (B, n).

    Points are frozen as soon as they converge, so each result does not
    depend on the rest of the batch.
    """
    p = np.asarray(p, dtype=float)
    Q = np.atleast_2d(np.asarray(q, dtype=float))
    B, n = Q.shape
    v = _initial_guess(g, p, Q) if guess is None else np.atleast_2d(np.asarray(guess, dtype=float)).copy()
    out_v, out_x, out_vel = np.zeros((B, n)), np.zeros((B, n)), np.zeros((B, n))
    out_J = np.zeros((B, n, n))
    best = np.full(B, np.inf)
    iters = np.zeros(B, dtype=int)
    scale = tol * (1.0 + np.linalg.norm(Q, axis=1))
    active = np.arange(B)
    for it in range(max_iter):
        if active.size == 0:
            break
        try:
            res = flow(g, p[None], v[active], steps=steps, variational=True)
        except DomainExit as exc:
            raise OutsideInjectivityEstimate(f"shooting left the chart domain: {exc}") from exc
        err = res.x - Q[active]
        r = np.linalg.norm(err, axis=1)
        better = r < best[active]
        idx = active[better]
        best[idx] = r[better]
        out_v[idx], out_x[idx], out_vel[idx], out_J[idx] = v[idx], res.x[better], res.v[better], res.J[better]
        iters[active] = it + 1
        done = r < scale[active]
        with np.errstate(all="ignore"):
            try:
                step = np.linalg.solve(res.J, err[..., None])[..., 0]
            except np.linalg.LinAlgError as exc:
                raise OutsideInjectivityEstimate("singular differential of exp during shooting") from exc
        v[active] = v[active] - step
        active = active[~done & np.all(np.isfinite(step), axis=1)]
    if np.any(best > ACCEPT_TOL * (1.0 + np.linalg.norm(Q, axis=1))):
        b = int(np.argmax(best))
        raise OutsideInjectivityEstimate(
            f"shooting did not converge in {max_iter} iterations (residual {best[b]:.3g} at target {Q[b].tolist()})")
    return ShootResult(out_v, out_x, out_vel, out_J, best, iters)


def exp_inverse(g: MetricField, p, q, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """``exp_p^{-1}(q)``; accepts a single point or a batch (..., n)."""
    q = np.asarray(q, dtype=float)
    shape = q.shape
    res = shoot(g, p, q.reshape(-1, g.dim), steps=steps)
    return res.v.reshape(shape)
