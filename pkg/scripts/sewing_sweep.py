"""Sew the (n, k) model into the unit-sphere chart for a halving sequence of deltas.

    python scripts/sewing_sweep.py --delta 0.1 --levels 3
"""

import argparse
import time

from riccilab.io import dumps, write_atomic
from riccilab.repro import sewing_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--out", default="results/sewing.json")
    args = ap.parse_args()

    t0 = time.perf_counter()
    case = sewing_case(args.delta, args.levels, n=args.n, k=args.k)
    print(f"{'delta':>8} {'c0':>10} {'c1':>10} {'C_est':>8} {'bound c1':>10} pass")
    for r in case["reports"]:
        print(f"{r['delta']:8.4f} {r['c0_sample']:10.3e} {r['c1_sample']:10.3e} {r['C_est']:8.4f} "
              f"{r['bound_c1']:10.3e} {r['pass']}")
    print("c1 ratios:", ", ".join(f"{q:.3f}" for q in case["c1_ratios"]))
    print(f"verdict {case['verdict']} in {time.perf_counter() - t0:.1f}s")
    write_atomic(args.out, dumps(case))


if __name__ == "__main__":
    main()
