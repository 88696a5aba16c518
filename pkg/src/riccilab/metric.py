"""Chart metrics as batched evaluation rules.

Every rule maps an array of points with shape ``(..., n)`` to metric
matrices of shape ``(..., n, n)``.  Derivative arrays follow the index
convention ``dg[..., i, j, k] = d_k g_ij`` and
``d2g[..., i, j, k, l] = d_k d_l g_ij``.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BadInput

__all__ = [
    "Scheme",
    "MetricField",
    "euclidean",
    "constant_curvature",
    "warped_product",
    "custom_table",
    "polar_plane",
    "sphere_product",
]


class Scheme(enum.Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite_difference"


@functools.lru_cache(maxsize=None)
def _stencil(n):
    """Offsets (in units of h) for all first and second central differences."""
    eye = np.eye(n)
    rows = [np.zeros(n)]
    for k in range(n):
        rows += [eye[k], -eye[k], 2 * eye[k], -2 * eye[k]]
    for k, l in itertools.combinations(range(n), 2):
        rows += [eye[k] + eye[l], eye[k] - eye[l], -eye[k] + eye[l], -eye[k] - eye[l]]
    return np.array(rows)


@functools.lru_cache(maxsize=None)
def _first_stencil(n):
    eye = np.eye(n)
    return np.concatenate([np.zeros((1, n)), eye, -eye])


@dataclass(frozen=True)
class MetricField:
    """A Riemannian metric on a chart domain.

    ``eval`` (and the optional derivative rules) must be pure and reentrant;
    samplers call them from several workers at once.  With
    ``Scheme.FINITE_DIFFERENCE`` the derivatives come from central
    differences with step ``fd_step * (1 + |x|)``.
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None
    scheme: Scheme = Scheme.FINITE_DIFFERENCE
    fd_step: float = 1e-4
    name: str = "metric"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.scheme is Scheme.ANALYTIC and (self.d1 is None or self.d2 is None):
            raise BadInput("analytic scheme needs closed-form first and second derivatives")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise BadInput(f"point has {x.shape[-1]} coordinates, metric dimension is {self.dim}")
        return self.eval(x)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if self.domain is None:
            return np.ones(x.shape[:-1], dtype=bool)
        return np.asarray(self.domain(x), dtype=bool)

    def finite_difference(self, fd_step=None) -> "MetricField":
        """Same metric with derivatives taken by central differences."""
        return replace(
            self,
            scheme=Scheme.FINITE_DIFFERENCE,
            fd_step=self.fd_step if fd_step is None else fd_step,
            name=self.name + "[fd]",
        )

    def _steps(self, x):
        return self.fd_step * (1.0 + np.linalg.norm(x, axis=-1))

    def jet(self, x, order=2):
        """Return ``(g, dg)`` or ``(g, dg, d2g)`` at the points ``x``."""
        x = np.asarray(x, dtype=float)
        if self.scheme is Scheme.ANALYTIC:
            out = (self(x), self.d1(x))
            return out + (self.d2(x),) if order >= 2 else out
        n = self.dim
        h = self._steps(x)[..., None, None]
        if order < 2:
            off = _first_stencil(n)
            vals = self(x[..., None, :] + h * off)
            dg = np.moveaxis((vals[..., 1:n + 1, :, :] - vals[..., n + 1:, :, :]) / (2 * h[..., None]), -3, -1)
            return vals[..., 0, :, :], dg
        off = _stencil(n)
        vals = self(x[..., None, :] + h * off)
        h = h[..., None]
        g0 = vals[..., 0, :, :]
        dg = np.empty(x.shape[:-1] + (n, n, n))
        d2g = np.empty(x.shape[:-1] + (n, n, n, n))
        for k in range(n):
            fp, fm, f2p, f2m = (vals[..., 1 + 4 * k + s, :, :] for s in range(4))
            hk = h[..., 0, :, :]
            dg[..., k] = (fp - fm) / (2 * hk)
            d2g[..., k, k] = (-f2p + 16 * fp - 30 * g0 + 16 * fm - f2m) / (12 * hk**2)
        base = 1 + 4 * n
        for idx, (k, l) in enumerate(itertools.combinations(range(n), 2)):
            pp, pm, mp, mm = (vals[..., base + 4 * idx + s, :, :] for s in range(4))
            hk = h[..., 0, :, :]
            mixed = (pp - pm - mp + mm) / (4 * hk**2)
            d2g[..., k, l] = mixed
            d2g[..., l, k] = mixed
        return g0, dg, d2g


def _batch_shape(x):
    return np.asarray(x).shape[:-1]


def euclidean(n: int) -> MetricField:
    def ev(x):
        return np.broadcast_to(np.eye(n), _batch_shape(x) + (n, n)).copy()

    def d1(x):
        return np.zeros(_batch_shape(x) + (n,) * 3)

    def d2(x):
        return np.zeros(_batch_shape(x) + (n,) * 4)

    return MetricField(n, ev, d1, d2, scheme=Scheme.ANALYTIC, name=f"euclidean{n}",
                       meta={"kind": "euclidean", "n": n})


def constant_curvature(n: int, kappa: float = 1.0, radius: float = 2.0) -> MetricField:
    """Stereographic chart ``4|dx|^2 / (1 + kappa |x|^2)^2`` with sec = kappa.

    ``kappa = 1`` is the unit round sphere.  The scale is chosen so the
    origin has metric ``4 I``; coordinates satisfy ``|x| < radius`` for
    positive curvature and ``|x|^2 < 1/|kappa|`` (Poincare ball) otherwise.
    """
    kappa = float(kappa)
    eye = np.eye(n)

    def psi_parts(x):
        r2 = np.sum(x * x, axis=-1)
        w = 1.0 + kappa * r2
        return r2, w

    def ev(x):
        _, w = psi_parts(x)
        return (4.0 / w**2)[..., None, None] * eye

    def d1(x):
        _, w = psi_parts(x)
        dpsi = (-16.0 * kappa / w**3)[..., None] * x
        return eye[..., None] * dpsi[..., None, None, :]

    def d2(x):
        _, w = psi_parts(x)
        hess = (-16.0 * kappa / w**3)[..., None, None] * eye + (96.0 * kappa**2 / w**4)[..., None, None] * (
            x[..., :, None] * x[..., None, :]
        )
        return eye[..., None, None] * hess[..., None, None, :, :]

    def dom(x):
        r2 = np.sum(x * x, axis=-1)
        if kappa < 0:
            return r2 < 1.0 / abs(kappa)
        return r2 < radius**2

    return MetricField(n, ev, d1, d2, domain=dom, scheme=Scheme.ANALYTIC,
                       name=f"const_curv{n}({kappa:g})",
                       meta={"kind": "constant_curvature", "n": n, "kappa": kappa, "radius": radius})


def warped_product(base_vals: Sequence[float], grads: Sequence[Sequence[float]]) -> MetricField:
    """``dx_1^2 + ... + dx_m^2 + sum_i phi_i(x)^2 dy_i^2`` with affine ``phi_i``.

    ``phi_i(x) = base_vals[i] + <grads[i], x>``; coordinates are ordered
    ``(x_1, ..., x_m, y_1, ..., y_d)``.
    """
    c = np.asarray(base_vals, dtype=float)
    A = np.atleast_2d(np.asarray(grads, dtype=float))
    d, m = A.shape
    if c.shape != (d,):
        raise BadInput("need one base value per warping function")
    n = m + d

    def phis(x):
        return c + x[..., :m] @ A.T

    def ev(x):
        out = np.zeros(_batch_shape(x) + (n, n))
        out[..., range(m), range(m)] = 1.0
        out[..., range(m, n), range(m, n)] = phis(x) ** 2
        return out

    def d1(x):
        out = np.zeros(_batch_shape(x) + (n, n, n))
        ph = phis(x)
        for i in range(d):
            out[..., m + i, m + i, :m] = 2.0 * ph[..., i, None] * A[i]
        return out

    def d2(x):
        out = np.zeros(_batch_shape(x) + (n, n, n, n))
        for i in range(d):
            out[..., m + i, m + i, :m, :m] = 2.0 * np.outer(A[i], A[i])
        return out

    def dom(x):
        return np.all(phis(x) > 0, axis=-1)

    return MetricField(n, ev, d1, d2, domain=dom, scheme=Scheme.ANALYTIC, name=f"warped{n}",
                       meta={"kind": "warped_product", "base_vals": c.tolist(), "grads": A.tolist()})


def custom_table(coords: Sequence[str], entries: Sequence[Sequence[str]], domain: Optional[str] = None,
                 name: str = "custom") -> MetricField:
    """Metric from a table of coefficient expressions in the named coordinates.

    Expressions are parsed with sympy; first and second derivatives are
    differentiated symbolically, so the scheme is analytic.
    """
    import sympy as sp

    syms = sp.symbols(list(coords))
    if not isinstance(syms, (list, tuple)):
        syms = [syms]
    n = len(syms)
    local = {str(s): s for s in syms}
    mat = sp.Matrix([[sp.sympify(e, locals=local) for e in row] for row in entries])
    if mat.shape != (n, n):
        raise BadInput(f"table must be {n}x{n}")
    if mat != mat.T:
        raise BadInput("metric table must be symmetric")

    def compile_entries(exprs):
        # only non-zero entries get a compiled function
        compiled = []
        for idx, e in exprs:
            e = sp.simplify(e)
            if e != 0:
                compiled.append((idx, sp.lambdify(syms, e, "numpy")))
        return compiled

    g_terms = compile_entries(((i, j), mat[i, j]) for i in range(n) for j in range(n))
    d1_terms = compile_entries(
        ((i, j, k), sp.diff(mat[i, j], syms[k])) for i in range(n) for j in range(n) for k in range(n)
    )
    d2_terms = compile_entries(
        ((i, j, k, l), sp.diff(mat[i, j], syms[k], syms[l]))
        for i in range(n) for j in range(n) for k in range(n) for l in range(n)
    )

    def assemble(terms, rank):
        def rule(x):
            args = [x[..., a] for a in range(n)]
            out = np.zeros(_batch_shape(x) + (n,) * rank)
            for idx, fn in terms:
                out[(Ellipsis,) + idx] = fn(*args)
            return out

        return rule

    dom_rule = None
    if domain is not None:
        dom_expr = sp.sympify(domain, locals=local)
        dom_fn = sp.lambdify(syms, dom_expr, "numpy")

        def dom_rule(x):
            return np.broadcast_to(dom_fn(*[x[..., a] for a in range(n)]), _batch_shape(x))

    return MetricField(n, assemble(g_terms, 2), assemble(d1_terms, 3), assemble(d2_terms, 4),
                       domain=dom_rule, scheme=Scheme.ANALYTIC, name=name,
                       meta={"kind": "custom_table", "coords": list(coords),
                             "entries": [[str(e) for e in row] for row in entries], "domain": domain})


def polar_plane() -> MetricField:
    """``dr^2 + r^2 dtheta^2`` on ``r > 0``."""
    return custom_table(["r", "th"], [["1", "0"], ["0", "r**2"]], domain="r > 0", name="polar")


def sphere_product(flat_dim: int) -> MetricField:
    """Unit S^2 in spherical coordinates times flat R^m.

    Coordinates ``(th, ph, z_1, ..., z_m)``; ``d/dph`` and the ``d/dz_i``
    are commuting Killing fields.
    """
    coords = ["th", "ph"] + [f"z{i + 1}" for i in range(flat_dim)]
    n = len(coords)
    entries = [["0"] * n for _ in range(n)]
    entries[0][0] = "1"
    entries[1][1] = "sin(th)**2"
    for i in range(2, n):
        entries[i][i] = "1"
    return custom_table(coords, entries, domain="(th > 0) & (th < pi)", name=f"S2xR{flat_dim}")
