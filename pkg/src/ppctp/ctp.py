"""Stochastic Canadian Traveller Problem: specs, generation, instances."""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .delaunay import delaunay
from .errors import DegeneracyError, GenerationError, ValidationError
from .inference import Bernoulli

PERCOLATION_WARN = 0.35
RESAMPLE_ATTEMPTS = 100


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    weight: float
    p_open: float

    def other(self, node: int) -> int:
        return self.v if node == self.u else self.u


@dataclass(frozen=True)
class CtpSpec:
    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]
    s: int
    t: int

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate node id")
        ids = set(ids)
        if self.s not in ids or self.t not in ids:
            raise ValidationError(f"s={self.s} or t={self.t} not a node")
        if self.s == self.t:
            raise ValidationError("s and t must differ")
        pairs = set()
        eids = set()
        for e in self.edges:
            if e.id in eids:
                raise ValidationError(f"duplicate edge id {e.id}")
            eids.add(e.id)
            if e.u == e.v:
                raise ValidationError(f"edge {e.id} is a self-loop")
            if e.u not in ids or e.v not in ids:
                raise ValidationError(f"edge {e.id} has an unknown endpoint")
            pair = frozenset((e.u, e.v))
            if pair in pairs:
                raise ValidationError(f"edge {e.id} duplicates ({e.u}, {e.v})")
            pairs.add(pair)
            if not (e.weight > 0 and math.isfinite(e.weight)):
                raise ValidationError(f"edge {e.id} weight must be positive")
            if not (0 < e.p_open <= 1):
                raise ValidationError(f"edge {e.id} p_open must lie in (0, 1]")

    @cached_property
    def edge_by_id(self) -> Dict[int, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def node_by_id(self) -> Dict[int, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def incident(self) -> Dict[int, Tuple[int, ...]]:
        """Incident edge ids per node, ascending (the canonical policy order)."""
        inc: Dict[int, List[int]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            inc[e.u].append(e.id)
            inc[e.v].append(e.id)
        return {v: tuple(sorted(es)) for v, es in inc.items()}

    def degree(self, v: int) -> int:
        return len(self.incident[v])


@dataclass(frozen=True)
class Instance:
    """Open/blocked state of every edge of one spec."""

    open: Mapping[int, bool]


def total_weight(spec: CtpSpec) -> float:
    return math.fsum(e.weight for e in spec.edges)


def euclidean(a: Node, b: Node) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def spec_from_points(points: Sequence[Tuple[float, float]], p_open: float,
                     st_rule: Union[str, Tuple[int, int]] = "max",
                     rng: np.random.Generator = None) -> CtpSpec:
    nodes = tuple(Node(i, float(x), float(y)) for i, (x, y) in enumerate(points))
    pairs = delaunay(points)
    edges = tuple(Edge(k, u, v, euclidean(nodes[u], nodes[v]), float(p_open))
                  for k, (u, v) in enumerate(pairs))
    s, t = choose_st(nodes, st_rule, rng)
    return CtpSpec(nodes, edges, s, t)


def choose_st(nodes: Sequence[Node], st_rule, rng=None) -> Tuple[int, int]:
    if st_rule in ("max", "max-euclidean"):
        best = None
        for i, a in enumerate(nodes):
            for b in nodes[i + 1:]:
                d = euclidean(a, b)
                if best is None or d > best[0]:
                    best = (d, a.id, b.id)
        return best[1], best[2]
    if st_rule == "random":
        if rng is None:
            raise ValidationError("random s/t rule needs an rng")
        i, j = rng.choice(len(nodes), size=2, replace=False)
        return nodes[int(i)].id, nodes[int(j)].id
    try:
        s, t = st_rule
    except (TypeError, ValueError):
        raise ValidationError(f"unknown s/t rule {st_rule!r}") from None
    return int(s), int(t)


def generate_spec(n: int, p_open: float, seed, st_rule="max") -> CtpSpec:
    """Triangulate ``n`` uniform points on the unit square.

    Uniform i.i.d. points are a Poisson process conditioned on its count.
    Degenerate point sets are redrawn.
    """
    if n < 3:
        raise ValidationError(f"need at least 3 nodes, got {n}")
    if not 0 < p_open <= 1:
        raise ValidationError(f"p_open must lie in (0, 1], got {p_open}")
    if p_open < PERCOLATION_WARN:
        warnings.warn(f"p_open={p_open} is near the bond percolation threshold (~0.33); "
                      "most instances will be disconnected", stacklevel=2)
    rng = np.random.default_rng(seed)
    for _ in range(RESAMPLE_ATTEMPTS):
        pts = rng.random((n, 2)).tolist()
        try:
            return spec_from_points(pts, p_open, st_rule, rng)
        except DegeneracyError:
            continue
    raise GenerationError(f"degenerate point sets in {RESAMPLE_ATTEMPTS} attempts")


def draw_instance(spec: CtpSpec, source, prefix: tuple = ()) -> Instance:
    """Independently open each edge with probability ``p_open``.

    ``source`` is anything with ``sample(address, dist)``: a recording trace
    context (addresses ``prefix + ("edge", id)``) or an :class:`RngSource`.
    """
    return Instance({e.id: bool(source.sample(prefix + ("edge", e.id), Bernoulli(e.p_open)))
                     for e in spec.edges})


class RngSource:
    """Choice source that draws straight from the prior without recording."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def sample(self, address, dist):
        return dist.sample(self.rng)


def is_connected(spec: CtpSpec, instance: Instance) -> bool:
    """True iff t is reachable from s over open edges (breadth-first)."""
    seen = {spec.s}
    queue = deque([spec.s])
    while queue:
        v = queue.popleft()
        for eid in spec.incident[v]:
            if not instance.open[eid]:
                continue
            u = spec.edge_by_id[eid].other(v)
            if u == spec.t:
                return True
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return False


def diamond(p_open: float = 1.0, heavy: float = 10.0) -> CtpSpec:
    """Four-edge fixture: s-a:1, s-b:1, a-t:1, b-t:heavy. Nodes s=0, a=1, b=2, t=3."""
    nodes = (Node(0, 0.0, 0.5), Node(1, 0.5, 1.0), Node(2, 0.5, 0.0), Node(3, 1.0, 0.5))
    edges = (Edge(0, 0, 1, 1.0, p_open), Edge(1, 0, 2, 1.0, p_open),
             Edge(2, 1, 3, 1.0, p_open), Edge(3, 2, 3, heavy, p_open))
    return CtpSpec(nodes, edges, 0, 3)
