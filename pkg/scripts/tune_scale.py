"""Sweep the cost scale on held-out 20-node specs and report mean improvement.

    python scripts/tune_scale.py --scales 1 3 10 --seeds 100 101 102 103
"""

import argparse

import numpy as np

from ppctp.ctp import generate_spec
from ppctp.dfs import uniform_policy
from ppctp.evaluation import evaluate
from ppctp.learner import LearnConfig, extract_policy, learn


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scales", type=float, nargs="+", default=[1.0, 3.0, 10.0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[100, 101, 102, 103])
    ap.add_argument("--p-open", type=float, nargs="+", default=[0.5, 0.85])
    ap.add_argument("--nodes", type=int, default=20)
    ap.add_argument("--iters", type=int, default=10_000)
    ap.add_argument("--rollouts", type=int, default=1000)
    args = ap.parse_args()

    for scale in args.scales:
        gains = {"map-sample": [], "posterior-mean": []}
        for p in args.p_open:
            for seed in args.seeds:
                spec = generate_spec(args.nodes, p, seed)
                base = evaluate(spec, uniform_policy(spec), args.rollouts, seed).mean_cost
                res = learn(spec, LearnConfig(iterations=args.iters, cost_scale=scale, seed=seed))
                for method, g in gains.items():
                    cost = evaluate(spec, extract_policy(res.posterior, method),
                                    args.rollouts, seed).mean_cost
                    g.append(1 - cost / base)
        print(f"scale={scale:g} " + " ".join(
            f"{m}={np.mean(g):+.3f}" for m, g in gains.items()), flush=True)


if __name__ == "__main__":
    main()
