"""Monte Carlo policy evaluation, an exact oracle for tiny graphs, learning curves."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np

from .ctp import CtpSpec, RngSource, draw_instance, is_connected
from .dfs import Policy, stdfs
from .errors import InfeasibleEvaluationError, OracleTooLargeError, ValidationError
from .learner import LearnConfig, learn

Z95 = 1.96
ORACLE_MAX_EDGES = 12
ORACLE_MAX_BRANCHES = 10**6


@dataclass(frozen=True)
class EvalReport:
    mean_cost: float
    ci_lo: float
    ci_hi: float
    rollouts_used: int
    rollouts_rejected: int
    sd: float = 0.0
    master_seed: int = 0

    @property
    def stderr(self) -> float:
        return self.sd / math.sqrt(self.rollouts_used)

    def to_dict(self) -> dict:
        return asdict(self)


def rollout(spec: CtpSpec, policy: Policy, master_seed: int, index: int) -> Optional[float]:
    """Distance of rollout ``index``, or None if its instance is disconnected."""
    rng = np.random.default_rng([master_seed, index])
    src = RngSource(rng)
    instance = draw_instance(spec, src)
    if not is_connected(spec, instance):
        return None
    return stdfs(spec, instance, policy, src).distance


def _rollout_chunk(args) -> List[Optional[float]]:
    spec, policy, master_seed, lo, hi = args
    return [rollout(spec, policy, master_seed, i) for i in range(lo, hi)]


def evaluate(spec: CtpSpec, policy: Policy, rollouts: int, master_seed: int,
             workers: int = 1) -> EvalReport:
    """Mean travel distance over connected instances with a normal 95% CI.

    Rollout ``i`` is seeded by ``(master_seed, i)``, so the report does not
    depend on ``workers``.
    """
    if rollouts < 2:
        raise ValidationError("need at least 2 rollouts")
    if workers <= 1:
        results = [rollout(spec, policy, master_seed, i) for i in range(rollouts)]
    else:
        bounds = np.linspace(0, rollouts, workers + 1).astype(int)
        jobs = [(spec, policy, master_seed, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(workers) as ex:
            results = [d for chunk in ex.map(_rollout_chunk, jobs) for d in chunk]
    costs = [d for d in results if d is not None]
    if not costs:
        raise InfeasibleEvaluationError(f"all {rollouts} instances were disconnected")
    n = len(costs)
    mean = math.fsum(costs) / n
    sd = math.sqrt(math.fsum((c - mean) ** 2 for c in costs) / (n - 1)) if n > 1 else 0.0
    half = Z95 * sd / math.sqrt(n)
    return EvalReport(mean, mean - half, mean + half, n, rollouts - n, sd, master_seed)


def exact_expected_cost(spec: CtpSpec, policy: Policy) -> float:
    """E[distance | s-t connected], by enumerating instances and walk branches.

    Independent of :func:`stdfs`: the walk is re-derived recursively here.
    """
    m = len(spec.edges)
    if m > ORACLE_MAX_EDGES:
        raise OracleTooLargeError(f"{m} edges exceeds the oracle limit of {ORACLE_MAX_EDGES}")
    eids = [e.id for e in spec.edges]
    branches = [0]
    outcomes = []
    for states in itertools.product((True, False), repeat=m):
        prob = 1.0
        for e, st in zip(spec.edges, states):
            prob *= e.p_open if st else 1.0 - e.p_open
        if prob == 0.0:
            continue
        inst = dict(zip(eids, states))
        if _reachable(spec, inst):
            outcomes.append((prob, _expected_walk(spec, inst, policy, branches)))
    if not outcomes:
        raise InfeasibleEvaluationError("no instance connects s and t")
    z = math.fsum(p for p, _ in outcomes)
    return math.fsum((p / z) * c for p, c in outcomes)


def _reachable(spec: CtpSpec, inst) -> bool:
    # depth-first flood fill, separate from ctp.is_connected
    stack, seen = [spec.s], {spec.s}
    while stack:
        v = stack.pop()
        if v == spec.t:
            return True
        for e in spec.edges:
            if inst[e.id] and v in (e.u, e.v):
                u = e.v if v == e.u else e.u
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
    return False


def _expected_walk(spec: CtpSpec, inst, policy: Policy, branches) -> float:
    """Expected remaining distance from the state (current node, visited, path)."""

    def go(v: int, visited: frozenset, path: Tuple[Tuple[int, float], ...]) -> float:
        branches[0] += 1
        if branches[0] > ORACLE_MAX_BRANCHES:
            raise OracleTooLargeError("walk tree exceeds the oracle branch limit")
        options = []
        for eid, p in zip(spec.incident[v], policy[v]):
            e = spec.edge_by_id[eid]
            u = e.v if v == e.u else e.u
            if inst[eid] and u not in visited:
                options.append((p, u, e.weight))
        if not options:
            if not path:
                return 0.0
            parent, w = path[-1]
            return w + go(parent, visited, path[:-1])
        mass = sum(p for p, _, _ in options)
        out = 0.0
        for p, u, w in options:
            if p == 0.0:
                continue
            rest = 0.0 if u == spec.t else go(u, visited | {u}, path + ((v, w),))
            out += (p / mass) * (w + rest)
        return out

    return go(spec.s, frozenset([spec.s]), ())


@dataclass(frozen=True)
class LearningCurve:
    points: Tuple[Tuple[int, EvalReport], ...]

    def __post_init__(self):
        its = [i for i, _ in self.points]
        if any(b <= a for a, b in zip(its, its[1:])):
            raise ValidationError("curve iterations must be strictly increasing")

    def to_csv(self) -> str:
        lines = ["iteration,mean_cost,ci_lo,ci_hi,rollouts_used,rollouts_rejected"]
        for it, r in self.points:
            lines.append(f"{it},{r.mean_cost!r},{r.ci_lo!r},{r.ci_hi!r},"
                         f"{r.rollouts_used},{r.rollouts_rejected}")
        return "\n".join(lines) + "\n"


def learning_curve(spec: CtpSpec, config: LearnConfig, rollouts: int, master_seed: int,
                   workers: int = 1) -> LearningCurve:
    """Learn once, then evaluate every checkpoint policy on the same rollout seeds."""
    if not config.checkpoints:
        raise ValidationError("learning curve needs at least one checkpoint")
    result = learn(spec, config)
    points = tuple((it, evaluate(spec, result.checkpoints[it], rollouts, master_seed, workers))
                   for it in config.checkpoints)
    return LearningCurve(points)
