"""Average learning curves over a set of generated specs, one CSV row per checkpoint.

    python scripts/learning_curves.py --nodes 20 --p-open 0.5 0.85 --specs 10 -o curves.csv

Also prints the uniform-policy baseline and the final improvement per p_open.
"""

import argparse
import csv
import sys

import numpy as np

from ppctp.ctp import generate_spec
from ppctp.dfs import uniform_policy
from ppctp.evaluation import evaluate, learning_curve
from ppctp.learner import LearnConfig

CHECKPOINTS = (10, 100, 500, 1000, 2000, 5000, 10_000)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, nargs="+", default=[20])
    ap.add_argument("--p-open", type=float, nargs="+", default=[0.5, 0.85])
    ap.add_argument("--specs", type=int, default=10)
    ap.add_argument("--iters", type=int, default=10_000)
    ap.add_argument("--rollouts", type=int, default=1000)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--method", default="map-sample")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("-o", "--output", default="-")
    args = ap.parse_args()

    checkpoints = tuple(c for c in CHECKPOINTS if c <= args.iters)
    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    w = csv.writer(out)
    w.writerow(["nodes", "p_open", "iteration", "mean_cost", "uniform_cost"])
    for n in args.nodes:
        for p in args.p_open:
            curves, base = [], []
            for seed in range(args.specs):
                spec = generate_spec(n, p, seed)
                cfg = LearnConfig(iterations=args.iters, cost_scale=args.scale,
                                  checkpoints=checkpoints, seed=seed, method=args.method)
                curve = learning_curve(spec, cfg, args.rollouts, seed, args.workers)
                curves.append([r.mean_cost for _, r in curve.points])
                base.append(evaluate(spec, uniform_policy(spec), args.rollouts, seed,
                                     args.workers).mean_cost)
            mean = np.mean(curves, axis=0)
            for it, c in zip(checkpoints, mean):
                w.writerow([n, p, it, f"{c:.4f}", f"{np.mean(base):.4f}"])
            out.flush()
            print(f"nodes={n} p={p}: uniform {np.mean(base):.3f}, final {mean[-1]:.3f}, "
                  f"improvement {1 - mean[-1] / np.mean(base):+.1%}", file=sys.stderr)


if __name__ == "__main__":
    main()
