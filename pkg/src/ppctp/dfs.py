"""Stochastic depth-first search (StDFS) over a CTP instance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Set, Tuple

from .ctp import CtpSpec, Instance
from .errors import ValidationError, ZeroMassError
from .inference import Categorical

ZERO_MASS = 1e-12


@dataclass(frozen=True)
class Policy:
    """Per-node selection probabilities over ``spec.incident[v]`` (ascending edge id)."""

    probs: Mapping[int, Tuple[float, ...]]

    def __getitem__(self, v: int) -> Tuple[float, ...]:
        return self.probs[v]

    def validate(self, spec: CtpSpec) -> None:
        for v, inc in spec.incident.items():
            vec = self.probs.get(v)
            if vec is None or len(vec) != len(inc):
                raise ValidationError(f"policy vector for node {v} must have length {len(inc)}")
            if any(p < 0 for p in vec) or abs(math.fsum(vec) - 1) > 1e-9:
                raise ValidationError(f"policy vector for node {v} is not a distribution")


@dataclass
class WalkResult:
    reached: bool
    distance: float
    edge_direction_counts: Dict[Tuple[int, int], int] = field(default_factory=dict)
    steps: int = 0


def uniform_policy(spec: CtpSpec) -> Policy:
    probs = {}
    for v, inc in spec.incident.items():
        if not inc:
            raise ValidationError(f"node {v} is isolated")
        probs[v] = (1.0 / len(inc),) * len(inc)
    return Policy(probs)


def admissible_edges(spec: CtpSpec, instance: Instance, visited: Set[int], v: int) -> List[int]:
    """Open incident edges of v leading to unvisited nodes, ascending id."""
    return [eid for eid in spec.incident[v]
            if instance.open[eid] and spec.edge_by_id[eid].other(v) not in visited]


def selection_weights(spec: CtpSpec, policy: Policy, v: int, admissible: Sequence[int]) -> Tuple[float, ...]:
    """Policy at v restricted to ``admissible`` and renormalized, over all incident edges."""
    inc = spec.incident[v]
    vec = policy[v]
    allowed = set(admissible)
    mass = math.fsum(p for eid, p in zip(inc, vec) if eid in allowed)
    if mass <= ZERO_MASS:
        raise ZeroMassError(f"policy mass {mass} on admissible edges at node {v}")
    return tuple(p / mass if eid in allowed else 0.0 for eid, p in zip(inc, vec))


def renormalized_selection_logprob(spec: CtpSpec, policy: Policy, v: int,
                                   admissible: Sequence[int], chosen: int) -> float:
    if chosen not in admissible:
        raise ValidationError(f"edge {chosen} is not admissible at node {v}")
    w = selection_weights(spec, policy, v, admissible)
    return math.log(w[spec.incident[v].index(chosen)])


def stdfs(spec: CtpSpec, instance: Instance, policy: Policy, source, prefix: tuple = ()) -> WalkResult:
    """Walk from s until t is entered or every reachable node is exhausted.

    Selections are requested from ``source`` at ``prefix + ("step", i)`` as
    categoricals over the incident edges of the current node.
    """
    edge_by_id = spec.edge_by_id
    v = spec.s
    visited = {v}
    stack: List[Tuple[int, int]] = []  # (parent, edge taken from parent)
    counts: Dict[Tuple[int, int], int] = {}
    legs: List[float] = []
    step = 0
    while True:
        adm = admissible_edges(spec, instance, visited, v)
        if adm:
            w = selection_weights(spec, policy, v, adm)
            idx = source.sample(prefix + ("step", step), Categorical(w))
            step += 1
            eid = spec.incident[v][idx]
            e = edge_by_id[eid]
            u = e.other(v)
            legs.append(e.weight)
            counts[(eid, v)] = counts.get((eid, v), 0) + 1
            stack.append((v, eid))
            visited.add(u)
            v = u
            if v == spec.t:
                return WalkResult(True, math.fsum(legs), counts, step)
        else:
            if not stack:
                return WalkResult(False, math.fsum(legs), counts, step)
            parent, eid = stack.pop()
            legs.append(edge_by_id[eid].weight)
            counts[(eid, v)] = counts.get((eid, v), 0) + 1
            v = parent
