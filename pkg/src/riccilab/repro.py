"""End-to-end pipelines shared by the CLI, the experiment scripts and the acceptance suite."""

from __future__ import annotations

import itertools
import platform
import time
from datetime import datetime, timezone
from typing import Dict, List

import numpy as np

from .curvature import lie_derivative_metric, riemann, sectional
from .killing import find_nonpositive_pair, kernel_dimension, second_fundamental_form
from .metric import constant_curvature, euclidean, sphere_product
from .model import build_model, closed_form_sec, killing_field, killing_frame, model_metric_field
from .sewing import jacobi_taylor_check, pullback_metric, pullback_model, sew_sweep
from .verify import check_compsimp, min_ric_k, ric_lower_bound, sampled_lemma_bounds

__all__ = ["grid_pairs", "grid_case", "killing_cases", "sewing_case", "taylor_case", "full_repro", "versions"]

SEC_TOL_ANALYTIC = 1e-9
SEC_TOL_FD = 1e-4
LEMMA_TOL = 1e-8
LIE_TOL = 1e-10


def grid_pairs(nmax: int = 8, nmin: int = 3):
    return [(n, k) for n in range(nmin, nmax + 1) for k in range(1, n - 1)]


def _random_domain_points(spec, count, rng):
    """Points with ``|x| < 0.5 * domain radius`` and arbitrary y in ``[-1, 1]``."""
    m = spec.flat_dim
    x = rng.standard_normal((count, m))
    x *= (0.5 * spec.domain_radius * rng.random(count) ** (1.0 / m) / np.linalg.norm(x, axis=1))[:, None]
    y = rng.uniform(-1.0, 1.0, (count, spec.d))
    return np.concatenate([x, y], axis=1)


def grid_case(n: int, k: int, budget: int = 10_000, seed: int = 0, jobs: int = 1, lemma_samples: int = 1000,
              lie_points: int = 100) -> Dict:
    """Every model-grid check for one ``(n, k)``; ``verdict`` is pass iff all hold."""
    t0 = time.perf_counter()
    spec = build_model(n, k)
    g = model_metric_field(spec)
    p = np.zeros(n)
    K = killing_frame(spec)
    curv = riemann(g, p)
    curv_fd = riemann(g.finite_difference(), p)
    err_a = err_fd = 0.0
    for i, j in itertools.combinations(range(spec.d), 2):
        ref = closed_form_sec(spec, i, j)
        err_a = max(err_a, abs(sectional(g, p, K[i], K[j], curv=curv) - ref))
        err_fd = max(err_fd, abs(sectional(g, p, K[i], K[j], curv=curv_fd) - ref))
    comp = check_compsimp(g, p, K, k, seed=seed, curv=curv)
    res = min_ric_k(g, p, K, k, budget=budget, seed=seed, jobs=jobs, curv=curv)
    lower = ric_lower_bound(spec.d, k, spec.mu, spec.nu)
    ric_margin, sec_excess = sampled_lemma_bounds(g, p, K, k, spec.mu, spec.nu, n_samples=lemma_samples,
                                                  seed=seed, curv=curv)
    rng = np.random.default_rng(seed)
    pts = _random_domain_points(spec, lie_points, rng)
    lie = 0.0
    for i in range(spec.d):
        Kf = killing_field(spec, i)
        for x in pts:
            lie = max(lie, float(np.max(np.abs(lie_derivative_metric(g, Kf, x)))))
    checks = {
        "sec_analytic": err_a <= SEC_TOL_ANALYTIC,
        "sec_fd": err_fd <= SEC_TOL_FD,
        "compsimp": comp.all_true,
        "min_ric_positive": res.value > 0,
        "lemma_ric": ric_margin >= -LEMMA_TOL,
        "lemma_sec": sec_excess <= LEMMA_TOL,
        "killing": lie < LIE_TOL,
    }
    return {
        "n": n,
        "k": k,
        "d": spec.d,
        "spec": spec.to_dict(),
        "sec_error_analytic": err_a,
        "sec_error_fd": err_fd,
        "compsimp": comp.to_dict(),
        "min_ric_k": res.to_dict(),
        "ric_lower_bound": lower,
        "positivity_margin": res.value,
        "lemma_ric_margin": ric_margin,
        "lemma_sec_excess": sec_excess,
        "lie_derivative_max": lie,
        "checks": checks,
        "verdict": "pass" if all(checks.values()) else "fail",
        "seconds": time.perf_counter() - t0,
    }


def killing_cases(seed: int = 0) -> List[Dict]:
    """Over-dimensional Killing slices: flat R^n and a product with a round S^2."""
    out = []
    for n, k in [(4, 1), (5, 1), (6, 2), (7, 3)]:
        d = (n + k) // 2
        g = euclidean(n)
        p = np.zeros(n)
        tangent = list(range(d + 1))
        pair = find_nonpositive_pair(g, p, tangent, k, seed=seed)
        sff = second_fundamental_form(g, p, tangent)
        kd = kernel_dimension(sff, pair.u)
        ok = abs(pair.ric_value) <= 1e-8 and min(pair.cross_terms) >= -1e-8 and kd >= k
        out.append({"metric": f"euclidean{n}", "n": n, "k": k, "kernel_dimension": kd, **pair.to_dict(),
                    "verdict": "pass" if ok else "fail"})
    g = sphere_product(3)
    p = np.array([np.pi / 3, 0.0, 0.0, 0.0, 0.0])
    pair = find_nonpositive_pair(g, p, [1, 2, 3, 4], 1, seed=seed)
    out.append({"metric": "S2xR3", "n": 5, "k": 1, **pair.to_dict(),
                "verdict": "pass" if pair.ric_value <= 1e-8 else "fail"})
    return out


def sewing_case(delta0: float = 0.1, levels: int = 3, n: int = 4, k: int = 2) -> Dict:
    """Unit-sphere chart with the ``(n, k)`` model sewn in at the origin."""
    g = constant_curvature(n)
    p = np.zeros(n)
    gstar = pullback_model(g, p, build_model(n, k))
    reports = sew_sweep(g, gstar, p, delta0, levels)
    c1 = [r.c1_sample for r in reports]
    ratios = [c1[i] / c1[i + 1] for i in range(len(c1) - 1)]
    checks = {
        "bounds": all(r.passed for r in reports),
        "identity": all(r.inner_identity and r.outer_identity for r in reports),
        "monotone": all(c1[i + 1] < c1[i] for i in range(len(c1) - 1)),
        "ratio": all(1.5 <= q <= 3.0 for q in ratios),
    }
    return {"reports": [r.to_dict() for r in reports], "c1_ratios": ratios, "checks": checks,
            "verdict": "pass" if all(checks.values()) else "fail"}


def taylor_case(t0: float = 0.1, levels: int = 4, n: int = 3) -> Dict:
    """Round sphere against the radially pulled back flat metric."""
    g = constant_curvature(n)
    p = np.zeros(n)
    gstar = pullback_metric(g, p, euclidean(n))
    rep = jacobi_taylor_check(g, gstar, p, t0=t0, levels=levels)
    ratio = np.abs(np.asarray(rep.gap_over_t2))
    checks = {
        "t4_coefficient": rep.relative_error <= 0.1,
        "bounded": float(ratio.max() / ratio.min()) < 2.0,
        "derivative_limit": abs(rep.derivative_limit) < 1e-3,
    }
    return {"report": rep.to_dict(), "checks": checks, "verdict": "pass" if all(checks.values()) else "fail"}


def versions() -> Dict[str, str]:
    import scipy

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "riccilab": __version__}


def full_repro(nmax: int = 8, budget: int = 10_000, seed: int = 0, jobs: int = 1, sewing: bool = True,
               progress=None) -> Dict:
    """Manifest of all grid verdicts plus the Killing, sewing and Taylor experiments."""
    grid = []
    for n, k in grid_pairs(nmax):
        case = grid_case(n, k, budget=budget, seed=seed, jobs=jobs)
        case.pop("seconds")
        grid.append(case)
        if progress:
            progress(f"grid n={n} k={k}: {case['verdict']}")
    manifest = {
        "grid": grid,
        "killing": killing_cases(seed),
        "taylor": taylor_case(),
        "seeds": {"grid": seed},
        "versions": versions(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if sewing:
        manifest["sewing"] = sewing_case()
        if progress:
            progress(f"sewing sweep: {manifest['sewing']['verdict']}")
    verdicts = [c["verdict"] for c in grid] + [c["verdict"] for c in manifest["killing"]]
    verdicts.append(manifest["taylor"]["verdict"])
    if sewing:
        verdicts.append(manifest["sewing"]["verdict"])
    manifest["verdict"] = "pass" if all(v == "pass" for v in verdicts) else "fail"
    return manifest
