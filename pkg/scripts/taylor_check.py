"""Fourth-order gap between the round sphere and its radially pulled back flat metric.

    python scripts/taylor_check.py --t0 0.1 --levels 4
"""

import argparse

from riccilab.io import dumps, write_atomic
from riccilab.repro import taylor_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--t0", type=float, default=0.1)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--out", default="results/taylor.json")
    args = ap.parse_args()

    case = taylor_case(args.t0, args.levels, n=args.n)
    rep = case["report"]
    print(f"{'t':>8} {'gap':>12} {'gap/t^2':>12}")
    for t, gap, r in zip(rep["ts"], rep["gaps"], rep["gap_over_t2"]):
        print(f"{t:8.5f} {gap:12.4e} {r:12.6f}")
    print(f"t^4 coefficient {rep['t4_coefficient_est']:.8f}, prediction {rep['curvature_prediction']:.8f}, "
          f"relative error {rep['relative_error']:.2e}")
    print(f"d/dt normalized gap: {rep['derivative_at_min_t']:.3e} at t={rep['ts'][-1]}, "
          f"extrapolated to t=0: {rep['derivative_limit']:.3e}")
    print("checks:", case["checks"])
    write_atomic(args.out, dumps(case))


if __name__ == "__main__":
    main()
