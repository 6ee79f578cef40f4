"""Policy learning as inference over a CTP probabilistic program."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .ctp import CtpSpec, draw_instance, is_connected
from .dfs import Policy, stdfs
from .errors import ModelInfeasibleError, ValidationError
from .inference import Bernoulli, SymmetricDirichlet, Trace, run_chain

ATTEMPT_BUDGET = 10_000
METHODS = ("map-sample", "posterior-mean")


def score(cost: float, scale: float = 1.0) -> Bernoulli:
    """Distribution against which the value 1 is observed: Bernoulli(exp(-scale*cost)).

    Its log likelihood for 1 is exactly ``-scale * cost``.
    """
    if cost < 0:
        raise ValidationError(f"cost must be >= 0, got {cost}")
    if not scale > 0:
        raise ValidationError(f"scale must be > 0, got {scale}")
    return Bernoulli.from_log_prob(-scale * cost)


def build_model(spec: CtpSpec, scale: float = 1.0, attempt_budget: int = ATTEMPT_BUDGET) -> Callable:
    """The CTP policy-learning program.

    Draws a Dirichlet(1) policy for every node, then redraws instances until
    one connects s and t, walks it with StDFS and scores the travel distance.
    Returns the policy. The walk result is left on ``ctx.walk`` for inspection.
    """
    nodes = [n.id for n in spec.nodes]

    def program(ctx):
        probs = {v: ctx.sample(("policy", v), SymmetricDirichlet(spec.degree(v))) for v in nodes}
        policy = Policy(probs)
        for k in range(attempt_budget):
            prefix = ("attempt", k)
            instance = draw_instance(spec, ctx, prefix)
            if is_connected(spec, instance):
                walk = stdfs(spec, instance, policy, ctx, prefix)
                break
        else:
            raise ModelInfeasibleError(f"no connected instance in {attempt_budget} attempts")
        ctx.observe(1, score(walk.distance, scale))
        ctx.walk = walk
        return policy

    return program


@dataclass
class LearnConfig:
    iterations: int = 10_000
    burn_in_fraction: float = 0.10
    cost_scale: float = 1.0
    checkpoints: Tuple[int, ...] = ()
    seed: int = 0
    method: str = "map-sample"

    def __post_init__(self):
        self.checkpoints = tuple(sorted(set(int(c) for c in self.checkpoints)))
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValidationError("burn_in_fraction must lie in [0, 1)")
        if not self.cost_scale > 0:
            raise ValidationError("cost_scale must be > 0")
        if any(c < 1 or c > self.iterations for c in self.checkpoints):
            raise ValidationError(f"checkpoints must lie in [1, {self.iterations}]")
        if self.method not in METHODS:
            raise ValidationError(f"unknown extraction method {self.method!r}")

    @property
    def burn_in(self) -> int:
        return int(math.floor(self.burn_in_fraction * self.iterations))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checkpoints"] = list(self.checkpoints)
        return d


class PolicyPosterior:
    """Streaming (Welford) mean and variance of every policy coordinate.

    Also keeps the recorded sample with the highest log joint.
    """

    def __init__(self, incident: Dict[int, Tuple[int, ...]]):
        self.incident = dict(incident)
        self.sample_count = 0
        self.mean = {v: np.zeros(len(es)) for v, es in self.incident.items()}
        self._m2 = {v: np.zeros(len(es)) for v, es in self.incident.items()}
        self.best_policy: Optional[Policy] = None
        self.best_log_joint = -math.inf
        self._variance: Optional[Dict[int, np.ndarray]] = None

    def update(self, policy: Policy, log_joint: float) -> None:
        self.sample_count += 1
        self._variance = None
        n = self.sample_count
        for v in self.incident:
            x = np.asarray(policy[v], dtype=float)
            d = x - self.mean[v]
            self.mean[v] += d / n
            self._m2[v] += d * (x - self.mean[v])
        if self.best_policy is None or log_joint > self.best_log_joint:
            self.best_policy = policy
            self.best_log_joint = log_joint

    @property
    def variance(self) -> Dict[int, np.ndarray]:
        """Unbiased sample variance; zero with fewer than two samples."""
        if self._variance is None:
            if self.sample_count < 2:
                self._variance = {v: np.zeros_like(m) for v, m in self._m2.items()}
            else:
                self._variance = {v: np.maximum(m / (self.sample_count - 1), 0.0)
                                  for v, m in self._m2.items()}
        return self._variance

    @classmethod
    def from_arrays(cls, incident, mean, variance, best, best_log_joint, sample_count):
        post = cls(incident)
        post.sample_count = int(sample_count)
        post.mean = {v: np.asarray(mean[v], dtype=float) for v in post.incident}
        scale = max(post.sample_count - 1, 0)
        post._m2 = {v: np.asarray(variance[v], dtype=float) * scale for v in post.incident}
        post._variance = {v: np.asarray(variance[v], dtype=float) for v in post.incident}
        post.best_policy = Policy({v: tuple(best[v]) for v in post.incident}) if best else None
        post.best_log_joint = best_log_joint
        return post


def extract_policy(posterior: PolicyPosterior, method: str = "map-sample") -> Policy:
    if posterior.sample_count < 1:
        raise ValidationError("posterior has no samples")
    if method == "map-sample":
        return posterior.best_policy
    if method == "posterior-mean":
        probs = {}
        for v, m in posterior.mean.items():
            m = np.clip(m, 0.0, None)
            probs[v] = tuple((m / m.sum()).tolist())
        return Policy(probs)
    raise ValidationError(f"unknown extraction method {method!r}")


@dataclass
class LearnResult:
    posterior: PolicyPosterior
    checkpoints: Dict[int, Policy]
    final_trace: Trace
    accepted: int = 0
    config: LearnConfig = field(default_factory=LearnConfig)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.config.iterations


def learn(spec: CtpSpec, config: LearnConfig) -> LearnResult:
    """Run one MH chain on the CTP program and summarize the policy samples.

    Samples after ``config.burn_in`` iterations feed the posterior. A checkpoint
    that falls inside burn-in reports the chain's current policy.
    """
    program = build_model(spec, config.cost_scale)
    rng = np.random.default_rng(config.seed)
    posterior = PolicyPosterior(spec.incident)
    checkpoints: Dict[int, Policy] = {}
    wanted = set(config.checkpoints)
    burn_in = config.burn_in
    accepted = 0

    def observer(i: int, trace: Trace, acc: bool) -> None:
        nonlocal accepted
        accepted += acc
        if i > burn_in:
            posterior.update(trace.output, trace.log_joint)
        if i in wanted:
            if posterior.sample_count:
                checkpoints[i] = extract_policy(posterior, config.method)
            else:
                checkpoints[i] = trace.output

    final = run_chain(program, config.iterations, rng, observer)
    return LearnResult(posterior, checkpoints, final, accepted, config)
