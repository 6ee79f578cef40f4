"""Command-line entry point: gen, learn, eval, curve, render, oracle."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import List, Optional

from . import io
from .ctp import generate_spec
from .dfs import Policy, uniform_policy
from .errors import CtpError, InfeasibleError, ValidationError
from .evaluation import evaluate, exact_expected_cost, learning_curve
from .learner import METHODS, LearnConfig, extract_policy, learn


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _checkpoints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad checkpoint list {text!r}") from None


def _st(text: str):
    if text in ("max", "random"):
        return text
    try:
        s, t = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--st must be max, random or u,v") from None
    return (s, t)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ppctp", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a random triangulated spec")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--p-open", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--st", type=_st, default="max")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("learn", help="learn a policy posterior by MH")
    p.add_argument("--spec", required=True)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--burn-in", type=float, default=0.10)
    p.add_argument("--checkpoints", type=_checkpoints, default=[])
    p.add_argument("--method", choices=METHODS, default="map-sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("eval", help="Monte Carlo evaluation of a policy")
    p.add_argument("--spec", required=True)
    p.add_argument("--policy", required=True, help="posterior/policy JSON, or 'uniform'")
    p.add_argument("--method", choices=METHODS, default="map-sample")
    p.add_argument("--rollouts", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("curve", help="learning curve as CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--burn-in", type=float, default=0.10)
    p.add_argument("--checkpoints", type=_checkpoints, required=True)
    p.add_argument("--method", choices=METHODS, default="map-sample")
    p.add_argument("--rollouts", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("render", help="DOT rendering of a posterior")
    p.add_argument("--spec", required=True)
    p.add_argument("--posterior", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("oracle", help="exact expected cost on small graphs")
    p.add_argument("--spec", required=True)
    p.add_argument("--policy", required=True, help="posterior/policy JSON, or 'uniform'")
    p.add_argument("--method", choices=METHODS, default="map-sample")
    return ap


def _echo(**fields) -> None:
    print("repro " + json.dumps(fields, sort_keys=True), file=sys.stderr)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _load_policy(path: str, spec, method: str) -> Policy:
    if path == "uniform":
        return uniform_policy(spec)
    d = io.load_json(path)
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind == "posterior":
        return extract_policy(io.posterior_from_dict(d, spec), method)
    if kind == "policy":
        return io.policy_from_dict(d, spec)
    raise ValidationError(f"{path}: kind must be 'posterior' or 'policy'")


def _config(args) -> LearnConfig:
    return LearnConfig(iterations=args.iters, burn_in_fraction=args.burn_in,
                       cost_scale=args.scale, checkpoints=tuple(args.checkpoints),
                       seed=args.seed, method=args.method)


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.cmd == "gen":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            spec = generate_spec(args.nodes, args.p_open, args.seed, args.st)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        io.save_spec(spec, args.output)
        _echo(cmd="gen", seed=args.seed, nodes=args.nodes, p_open=args.p_open,
              st=list(args.st) if isinstance(args.st, tuple) else args.st,
              spec_hash=io.spec_hash(spec))
        return 0

    spec = io.load_spec(args.spec)
    h = io.spec_hash(spec)

    if args.cmd == "learn":
        config = _config(args)
        _echo(cmd="learn", seed=config.seed, config=config.to_dict(), spec_hash=h)
        res = learn(spec, config)
        header = {"config": config.to_dict(), "seed": config.seed,
                  "acceptance_rate": res.acceptance_rate,
                  "st_rule": "recorded in spec (s, t)",
                  "checkpoints": {str(k): io.policy_to_dict(p, spec)["nodes"]
                                  for k, p in res.checkpoints.items()}}
        _write(args.output, io.dumps(io.posterior_to_dict(res.posterior, spec, header)))
        return 0

    if args.cmd == "eval":
        policy = _load_policy(args.policy, spec, args.method)
        _echo(cmd="eval", seed=args.seed, rollouts=args.rollouts, method=args.method,
              spec_hash=h)
        rep = evaluate(spec, policy, args.rollouts, args.seed, args.workers)
        header = {"spec_hash": h, "policy": args.policy if args.policy == "uniform" else "file",
                  "method": args.method, "rollouts": args.rollouts}
        _write(args.output, io.dumps(io.report_to_dict(rep, header)))
        return 0

    if args.cmd == "curve":
        config = _config(args)
        _echo(cmd="curve", seed=config.seed, config=config.to_dict(), rollouts=args.rollouts,
              spec_hash=h)
        curve = learning_curve(spec, config, args.rollouts, args.seed, args.workers)
        _write(args.output, curve.to_csv())
        return 0

    if args.cmd == "render":
        d = io.load_json(args.posterior)
        if not isinstance(d, dict) or d.get("kind") != "posterior":
            raise ValidationError(f"{args.posterior}: kind must be 'posterior'")
        if d.get("spec_hash") != h:
            raise ValidationError("spec_hash: posterior was produced for a different spec")
        post = io.posterior_from_dict(d, spec)
        _echo(cmd="render", spec_hash=h)
        _write(args.output, io.render_policy(spec, post, d["spec_hash"]))
        return 0

    if args.cmd == "oracle":
        policy = _load_policy(args.policy, spec, args.method)
        _echo(cmd="oracle", method=args.method, spec_hash=h)
        print(repr(exact_expected_cost(spec, policy)))
        return 0

    raise ValidationError(f"unknown command {args.cmd}")  # pragma: no cover


def main(argv: Optional[List[str]] = None) -> int:
    try:
        return run(argv)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CtpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
