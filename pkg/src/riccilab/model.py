"""Warped-product metrics with k-maximal local symmetry rank at the origin.

On ``R^{n-d} x R^d`` with ``d = floor((n+k)/2)`` the metric is
``sum dx_a^2 + sum phi_i(x)^2 dy_i^2`` with affine ``phi_i``.  The fields
``d/dy_i`` are commuting Killing fields and ``K_i = d/dy_i / phi_i(0)`` is
orthonormal at the origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .errors import BadDimension, BadIndex, BadInput, ConstructionFailure, DegeneratePlane, WrongCase
from .metric import MetricField, warped_product

__all__ = [
    "SimplexVertices",
    "ModelSpec",
    "regular_simplex",
    "critical_angle",
    "rotated_vertices",
    "vertex_inner_product",
    "build_model",
    "model_metric_field",
    "closed_form_sec",
    "killing_frame",
    "killing_field",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SimplexVertices:
    s: int
    verts: np.ndarray  # (s + 1, s)


@dataclass
class ModelSpec:
    n: int
    k: int
    d: int
    a: float
    b: float
    theta: Optional[float]
    xi: Optional[float]
    U: List[float]
    grads: List[List[float]]
    base_vals: List[float]
    mu: float
    nu: float
    domain_radius: float = field(default=0.0)

    @property
    def flat_dim(self):
        return self.n - self.d

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.base_vals) + x @ np.asarray(self.grads).T

    def check(self, margin=0.0):
        """Raise BadInput if any structural invariant fails."""
        n, k, d = self.n, self.k, self.d
        if d != (n + k) // 2:
            raise BadInput("d must equal floor((n+k)/2)")
        if len(self.grads) != d or len(self.base_vals) != d:
            raise BadInput("need d gradients and d base values")
        if min(self.base_vals) <= 0:
            raise BadInput("base values must be positive")
        if not self.mu - (k - 1) * self.nu > margin:
            raise BadInput("mu - (k-1) nu must be positive")
        U = np.asarray(self.U)
        G = np.asarray(self.grads)
        if k == n - 2:
            if not self.a > (k - 1) * self.b:
                raise BadInput("k = n-2 case needs a > (k-1) b")
        else:
            V = G[k:]
            uv = V @ U
            vv = V[0] @ V[1] if len(V) > 1 else vertex_inner_product(n, d, self.theta)
            if not 0 < self.theta < self.xi:
                raise BadInput("theta must lie in (0, xi)")
            if not np.all(uv**2 > -(k - 1) * vv):
                raise BadInput("theta violates <U,V>^2 > -(k-1)<V_i,V_j>")
        return self

    def to_dict(self):
        out = {"schema_version": SCHEMA_VERSION, "kind": "warped_product"}
        out.update(asdict(self))
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, data):
        fields = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        return cls(**fields)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def regular_simplex(s: int) -> SimplexVertices:
    """Vertices of a regular s-simplex inscribed in the unit sphere of R^s."""
    if s < 1:
        raise BadDimension("simplex dimension must be >= 1")
    # centre the standard basis of R^{s+1}, then express it in an orthonormal
    # basis of the sum-zero hyperplane
    E = np.eye(s + 1) - 1.0 / (s + 1)
    _, _, Vt = np.linalg.svd(E)
    verts = E @ Vt[:s].T
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    if s == 1:
        verts = verts[np.argsort(-verts[:, 0])]
    return SimplexVertices(s, verts)


def critical_angle(n: int, d: int) -> float:
    """Angle at which the rotated simplex vertices become pairwise orthogonal."""
    s = n - d - 1
    if s < 1:
        raise WrongCase("critical angle needs n - d - 1 >= 1; use the k = n-2 construction")
    return math.atan(math.sqrt(1.0 / s))


def vertex_inner_product(n, d, theta):
    s = n - d - 1
    return -math.cos(theta) ** 2 / s + math.sin(theta) ** 2


def embed_simplex(V0: SimplexVertices):
    """Lift simplex vertices into ``U-perp`` of ``R^{s+1}`` with ``U = e_1``."""
    verts = np.zeros((V0.s + 1, V0.s + 1))
    verts[:, 1:] = V0.verts
    return verts


def rotated_vertices(V0, U, theta: float) -> np.ndarray:
    """``V_i(theta) = cos(theta) V_i(0) - sin(theta) U``.

    ``V0`` is either a SimplexVertices (embedded with ``U = e_1``) or an
    array of vertices already lying in ``U-perp``.
    """
    U = np.asarray(U, dtype=float)
    if abs(np.linalg.norm(U) - 1.0) > 1e-12:
        raise BadInput("U must be a unit vector")
    verts = embed_simplex(V0) if isinstance(V0, SimplexVertices) else np.asarray(V0, dtype=float)
    if np.max(np.abs(verts @ U)) > 1e-12:
        raise BadInput("simplex vertices must lie in the orthogonal complement of U")
    return math.cos(theta) * verts - math.sin(theta) * U


def _admissible_theta(n, k, d, max_steps=200):
    """Bisect for the lower edge of the theta interval with a 10% margin.

    Returns ``(theta_low, xi)``: every theta in ``(theta_low, xi)`` satisfies
    ``sin^2 theta - (k-1) * (-<V_i,V_j>) >= 0.1 sin^2 theta``.
    """
    xi = critical_angle(n, d)

    def slack(t):
        return 0.9 * math.sin(t) ** 2 + (k - 1) * vertex_inner_product(n, d, t)

    if slack(xi) <= 0:
        raise ConstructionFailure("no admissible angle below the critical angle")
    lo, hi = 0.0, xi
    if slack(lo) > 0:
        return lo, xi
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        if slack(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            return hi, xi
    if slack(hi) <= 0:
        raise ConstructionFailure("bisection did not locate an admissible angle")
    return hi, xi


def build_model(n: int, k: int, a: float = 1.0, theta: Optional[float] = None, b: Optional[float] = None) -> ModelSpec:
    """Parameters of a model metric with k-maximal local symmetry rank at 0.

    In the ``k = n-2`` case ``b`` may be given (it must satisfy
    ``a > (k-1) b``); the default is ``a / k``.  In the ``k <= n-3`` case
    ``b`` is determined by ``a`` and ``theta``; when ``theta`` is omitted the
    midpoint of the admissible interval is used.
    """
    if n < 3:
        raise BadIndex("need n >= 3")
    if not 1 <= k <= n - 2:
        raise BadIndex(f"k must lie in 1..{n - 2}")
    if not a > 0:
        raise BadInput("a must be positive")
    d = (n + k) // 2
    m = n - d
    U = np.zeros(m)
    U[0] = 1.0
    if k == n - 2:
        if theta is not None:
            raise BadInput("theta only applies to the k <= n-3 case")
        b = a / k if b is None else float(b)
        if not (b > 0 and a > (k - 1) * b):
            raise BadInput("k = n-2 case needs b > 0 and a > (k-1) b")
        grads = [U.tolist()] * k + [(-U).tolist()]
        base = [a] * k + [b]
        spec = ModelSpec(n, k, d, a, b, None, None, U.tolist(), grads, base,
                         mu=1.0 / (a * b), nu=1.0 / a**2)
    else:
        if b is not None:
            raise BadInput("b is derived from a and theta in the k <= n-3 case")
        lo, xi = _admissible_theta(n, k, d)
        if theta is None:
            theta = 0.5 * (lo + xi)
        if not 0 < theta < xi:
            raise BadInput(f"theta must lie in (0, {xi})")
        V = rotated_vertices(regular_simplex(m - 1), U, theta)
        uv = float(V[0] @ U)
        vv = float(V[0] @ V[1])
        b = a * vv / uv
        # with n-k odd there are fewer slots (d-k) than vertices (n-d)
        grads = [U.tolist()] * k + V[: d - k].tolist()
        base = [a] * k + [b] * (d - k)
        spec = ModelSpec(n, k, d, a, b, float(theta), xi, U.tolist(), grads, base,
                         mu=-(uv**2) / (a**2 * vv), nu=1.0 / a**2)
    spec.domain_radius = _domain_radius(spec)
    return spec.check()


def _domain_radius(spec: ModelSpec) -> float:
    """Radius of the largest x-ball around 0 on which every phi_i stays positive."""
    G = np.asarray(spec.grads)
    norms = np.linalg.norm(G, axis=1)
    with np.errstate(divide="ignore"):
        r = np.where(norms > 0, np.asarray(spec.base_vals) / np.where(norms > 0, norms, 1.0), np.inf)
    return float(np.min(r))


def model_metric_field(spec: ModelSpec) -> MetricField:
    g = warped_product(spec.base_vals, spec.grads)
    return g


def closed_form_sec(spec: ModelSpec, i: int, j: int) -> float:
    """``sec(K_i, K_j) = -<grad phi_i, grad phi_j> / (phi_i(0) phi_j(0))`` (0-based)."""
    if i == j:
        raise DegeneratePlane("closed-form sectional curvature needs i != j")
    G = np.asarray(spec.grads)
    c = spec.base_vals
    return float(-(G[i] @ G[j]) / (c[i] * c[j]))


def killing_frame(spec: ModelSpec) -> np.ndarray:
    """Chart components of ``K_i = d/dy_i / phi_i(0)``, one per row."""
    m = spec.flat_dim
    K = np.zeros((spec.d, spec.n))
    for i, c in enumerate(spec.base_vals):
        K[i, m + i] = 1.0 / c
    return K


def killing_field(spec: ModelSpec, i: int):
    """The coordinate field ``d/dy_i`` as a rule on points."""
    e = np.zeros(spec.n)
    e[spec.flat_dim + i] = 1.0

    def field_rule(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(e, x.shape).copy()

    return field_rule
