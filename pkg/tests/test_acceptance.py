"""Acceptance criteria, one test per criterion; a pass/fail line for each is printed in the summary."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from riccilab import repro
from riccilab.metric import constant_curvature
from riccilab.model import build_model, killing_frame, model_metric_field
from riccilab.sewing import geodesic_agreement, jacobi_residual, pullback_model
from riccilab.verify import grid_min_ric_k, min_ric_k

pytestmark = pytest.mark.slow


def record(number, ok, detail, fail_label="FAIL"):
    line = f"{'PASS' if ok else fail_label} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def grid():
    t0 = time.perf_counter()
    cases = [repro.grid_case(n, k, budget=10_000, seed=0) for n, k in repro.grid_pairs(8)]
    return cases, time.perf_counter() - t0


def test_criterion_1_model_grid(grid):
    cases, seconds = grid
    keys = ("sec_analytic", "sec_fd", "compsimp", "min_ric_positive")
    bad = [(c["n"], c["k"]) for c in cases if not all(c["checks"][key] for key in keys)]
    margin = min(c["positivity_margin"] for c in cases)
    err_a = max(c["sec_error_analytic"] for c in cases)
    err_fd = max(c["sec_error_fd"] for c in cases)
    # the range 3 <= n <= 8, 1 <= k <= n-2 holds 21 pairs
    ok = len(cases) == 21 and not bad and seconds < 300
    assert record(1, ok, f"{len(cases)} cases, failing {bad}, sec err {err_a:.2e}/{err_fd:.2e}, "
                         f"min margin {margin:.4g}, {seconds:.1f}s")


def test_criterion_2_sampled_bounds(grid):
    cases, _ = grid
    ric = min(c["lemma_ric_margin"] for c in cases)
    sec = max(c["lemma_sec_excess"] for c in cases)
    ok = ric >= -1e-8 and sec <= 1e-8
    assert record(2, ok, f"min Ric_(d-1) margin {ric:.3e}, max sec excess {sec:.3e}")


def test_criterion_3_killing_slices():
    cases = repro.killing_cases(0)
    worst = max(abs(c["ric_value"]) for c in cases)
    ok = all(c["verdict"] == "pass" for c in cases) and len(cases) == 5
    assert record(3, ok, f"{[c['metric'] + ':' + c['verdict'] for c in cases]}, max |ric| {worst:.2e}")


def test_criterion_4_oracle_equivalence():
    gaps = []
    t0 = time.perf_counter()
    for n, k in repro.grid_pairs(5):
        spec = build_model(n, k)
        g, p, K = model_metric_field(spec), np.zeros(n), killing_frame(spec)
        search = min_ric_k(g, p, K, k, budget=100_000, seed=0).value
        oracle, _ = grid_min_ric_k(g, p, K, k, n_points=1_000_000)
        gaps.append((n, k, search, oracle))
    worst = max(abs(s - o) for _, _, s, o in gaps)
    ok = all(s > 0 and o > 0 for _, _, s, o in gaps) and worst < 1e-3
    assert record(4, ok, f"{len(gaps)} cases, max |search - grid| {worst:.2e}, {time.perf_counter() - t0:.1f}s")


def test_criterion_5_sewing_sweep():
    t0 = time.perf_counter()
    case = repro.sewing_case(0.1, 3, n=4, k=2)
    seconds = time.perf_counter() - t0
    c1 = [r["c1_sample"] for r in case["reports"]]
    ok = case["verdict"] == "pass" and seconds < 600
    assert record(5, ok, f"c1 {['%.4g' % v for v in c1]}, ratios {['%.3f' % q for q in case['c1_ratios']]}, "
                         f"checks {case['checks']}, {seconds:.1f}s")


@pytest.fixture(scope="module")
def taylor():
    return repro.taylor_case(0.1, 4, n=3)


def test_criterion_6_taylor(taylor):
    rep = taylor["report"]
    ratio = np.abs(rep["gap_over_t2"])
    ok = taylor["verdict"] == "pass"
    assert record(6, ok, f"c4 {rep['t4_coefficient_est']:.8f} vs {rep['curvature_prediction']:.8f} "
                         f"(rel {rep['relative_error']:.1e}), gap/t^2 variation {ratio.max() / ratio.min():.4f}, "
                         f"extrapolated derivative {rep['derivative_limit']:.1e}")


@pytest.mark.xfail(strict=True, reason="the normalized gap is -t^2/3 + O(t^4) for this pair, so its derivative "
                                        "at t = 0.0125 is about 8.3e-3; only the t -> 0 limit can be below 1e-3")
def test_criterion_6_derivative_at_smallest_radius(taylor):
    rep = taylor["report"]
    d = rep["derivative_at_min_t"]
    ok = abs(d) < 1e-3
    record("6 (literal derivative at smallest t)", ok, f"{d:.3e} at t = {min(rep['ts'])}",
           fail_label="XFAIL")
    assert ok


def test_criterion_7_converse_gauss():
    g = constant_curvature(4)
    p = np.zeros(4)
    gs = pullback_model(g, p, build_model(4, 2))
    geo = geodesic_agreement(g, gs, p, n_rays=20, steps=20)
    jac = jacobi_residual(g, gs, p, n_rays=20, steps=20)
    ok = geo < 1e-6 and jac < 1e-4
    assert record(7, ok, f"20 rays, geodesic residual {geo:.2e}, Jacobi residual {jac:.2e}")


def test_criterion_8_killing_fields(grid):
    cases, _ = grid
    worst = max(c["lie_derivative_max"] for c in cases)
    ok = worst < 1e-10
    assert record(8, ok, f"max |L_K g| {worst:.2e} over 21 models x 100 points")
