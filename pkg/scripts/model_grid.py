"""Run every model-grid check and write one JSON record per (n, k).

    python scripts/model_grid.py --nmax 8 --budget 10000 --out results/grid.json
"""

import argparse
import time

from riccilab.io import dumps, write_atomic
from riccilab.repro import grid_case, grid_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nmax", type=int, default=8)
    ap.add_argument("--budget", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/grid.json")
    args = ap.parse_args()

    t0 = time.perf_counter()
    cases = []
    for n, k in grid_pairs(args.nmax):
        c = grid_case(n, k, budget=args.budget, seed=args.seed, jobs=args.jobs)
        cases.append(c)
        print(f"n={n} k={k} d={c['d']}  min Ric_k {c['positivity_margin']:.6f}  "
              f"lower bound {c['ric_lower_bound']:.6f}  {c['verdict']}  ({c['seconds']:.2f}s)")
    write_atomic(args.out, dumps(cases))
    ok = sum(c["verdict"] == "pass" for c in cases)
    print(f"{ok}/{len(cases)} pass in {time.perf_counter() - t0:.1f}s -> {args.out}")


if __name__ == "__main__":
    main()
