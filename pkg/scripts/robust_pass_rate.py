"""Solve random uncertain networks robustly and tally the route taken.

Each solve is checked for certification, robust <= nominal and an audit with
a few hundred samples.  Failures are listed with their error.
"""

import argparse
import collections
import time

from robust_sclp.bench import random_network
from robust_sclp.errors import SCLPError
from robust_sclp.model import build_matrices
from robust_sclp.oracle import audit_feasibility
from robust_sclp.robust import robust_sclp_simplex
from robust_sclp.sclp import sclp_simplex, verify_optimality


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--servers", type=int, default=2)
    ap.add_argument("--buffers", type=int, default=4)
    ap.add_argument("--seeds", type=int, default=40)
    ap.add_argument("--samples", type=int, default=300)
    args = ap.parse_args()
    tally = collections.Counter()
    failures = []
    t0 = time.time()
    for seed in range(args.seeds):
        d = build_matrices(random_network(seed, I=args.servers, K=args.buffers))
        try:
            sol = robust_sclp_simplex(d)
        except SCLPError as exc:
            tally[type(exc).__name__] += 1
            failures.append((seed, str(exc)[:120]))
            continue
        ok = (verify_optimality(d, sol).ok and sol.objective <= sclp_simplex(d).objective + 1e-9
              and audit_feasibility(d, sol, args.samples, seed).max_violation <= 1e-7)
        tally[(sol.info["method"], sol.info.get("budget_margin"), ok)] += 1
    for key, n in sorted(tally.items(), key=str):
        print(key, n)
    for f in failures:
        print("failed", *f)
    print(f"{time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
