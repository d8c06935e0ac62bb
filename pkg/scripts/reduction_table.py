"""Run the reduction-size experiment and print mean R by (theta, kappa).

    python scripts/reduction_table.py --reps 10 --workers 4 --csv reduction.csv
"""

import argparse
import time

from robust_sclp.bench import ExperimentConfig, reduction_experiment, summarize, to_csv, trend_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--csv")
    args = ap.parse_args()
    cfg = ExperimentConfig(reps=args.reps, seed=args.seed, workers=args.workers)
    t0 = time.time()
    rows = reduction_experiment(cfg)
    s = summarize(rows)
    print("theta  " + "  ".join(f"k={k:<5}" for k in cfg.kappas))
    for th in cfg.thetas:
        print(f"{th:<6} " + "  ".join(f"{s[(th, k)]:7.2f}" for k in cfg.kappas))
    print(trend_report(rows))
    print(f"{len(rows)} grid points in {time.time() - t0:.1f}s")
    if args.csv:
        with open(args.csv, "w") as fh:
            to_csv(rows, fh)


if __name__ == "__main__":
    main()
