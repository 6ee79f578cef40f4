"""Trace-based probabilistic programs and lightweight single-site MH.

A *program* is any callable ``program(ctx)`` that asks ``ctx.sample(address,
dist)`` for latent values, scores data with ``ctx.observe(value, dist)`` and
returns an output. Addresses are tuples of strings and integers; they must be
unique within one execution.

Everything is kept in log space.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ModelInfeasibleError,
    NoLatentEntriesError,
    RunawayProgramError,
    ValidationError,
)

Address = Tuple[Hashable, ...]
NEG_INF = -math.inf
DEFAULT_STEP_BUDGET = 10**7
INIT_ATTEMPTS = 10_000


# ---------------------------------------------------------------------------
# Distributions


@dataclass(frozen=True)
class Bernoulli:
    """Bernoulli over {0, 1}.

    ``log_p`` is the authoritative parameter so that very small success
    probabilities (``exp(-cost)``) keep an exact log density.
    """

    p: float
    log_p: float = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValidationError(f"Bernoulli p={self.p} outside [0, 1]")
        if self.log_p is None:
            object.__setattr__(self, "log_p", math.log(self.p) if self.p > 0 else NEG_INF)

    @classmethod
    def from_log_prob(cls, log_p: float) -> "Bernoulli":
        if log_p > 0:
            raise ValidationError(f"log probability {log_p} > 0")
        return cls(math.exp(log_p), log_p)

    def log_density(self, value) -> float:
        if value == 1 or value is True:
            return self.log_p
        if value == 0 or value is False:
            if self.log_p == 0.0:
                return NEG_INF
            return math.log1p(-math.exp(self.log_p))
        return NEG_INF

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.random() < self.p)

    def __str__(self):
        return f"Bernoulli({self.p!r})"


@dataclass(frozen=True)
class Categorical:
    """Categorical over indices ``0..len(weights)-1``. Zero weights are allowed."""

    weights: Tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w:
            raise ValidationError("Categorical needs at least one weight")
        if any(x < 0 or math.isnan(x) for x in w):
            raise ValidationError(f"negative categorical weight in {w}")
        if abs(math.fsum(w) - 1.0) > 1e-9:
            raise ValidationError(f"categorical weights sum to {math.fsum(w)}, not 1")
        object.__setattr__(self, "weights", w)

    def log_density(self, value) -> float:
        if not isinstance(value, (int, np.integer)) or not 0 <= value < len(self.weights):
            return NEG_INF
        wi = self.weights[value]
        return math.log(wi) if wi > 0 else NEG_INF

    def sample(self, rng: np.random.Generator) -> int:
        cum = list(itertools.accumulate(self.weights))
        i = min(bisect.bisect_right(cum, rng.random() * cum[-1]), len(cum) - 1)
        while self.weights[i] == 0.0:  # rounding at the top end
            i -= 1
        return i

    def __str__(self):
        return "Categorical(" + ", ".join(repr(w) for w in self.weights) + ")"


@dataclass(frozen=True)
class SymmetricDirichlet:
    """Dirichlet with all concentrations equal to 1 (uniform on the simplex)."""

    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValidationError(f"Dirichlet dimension must be >= 1, got {self.k}")

    def log_density(self, value) -> float:
        try:
            if len(value) != self.k:
                return NEG_INF
        except TypeError:
            return NEG_INF
        if any(not (x > 0.0) for x in value) or abs(math.fsum(value) - 1.0) > 1e-9:
            return NEG_INF
        return math.lgamma(self.k)

    def sample(self, rng: np.random.Generator) -> Tuple[float, ...]:
        if self.k == 1:
            return (1.0,)
        return tuple(rng.dirichlet(np.ones(self.k)).tolist())

    def __str__(self):
        return f"SymmetricDirichlet({self.k})"


@dataclass(frozen=True)
class UniformContinuous:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValidationError(f"uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def log_density(self, value) -> float:
        if self.lo <= value <= self.hi:
            return -math.log(self.hi - self.lo)
        return NEG_INF

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))

    def __str__(self):
        return f"UniformContinuous({self.lo!r}, {self.hi!r})"


Distribution = Any  # any of the classes above


def log_density(dist: Distribution, value) -> float:
    """Log probability (or density) of ``value``; ``-inf`` outside the support."""
    return dist.log_density(value)


def sample(dist: Distribution, rng: np.random.Generator):
    return dist.sample(rng)


# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True)
class TraceEntry:
    address: Address
    dist: Distribution
    value: Any
    log_prior: float


@dataclass(frozen=True)
class Observation:
    dist: Distribution
    value: Any
    log_lik: float


@dataclass(frozen=True)
class Trace:
    """One execution of a program. Treat as immutable."""

    entries: Mapping[Address, TraceEntry]
    observations: Tuple[Observation, ...]
    output: Any
    log_joint: float

    def __len__(self):
        return len(self.entries)

    def dump(self) -> str:
        """One line per latent entry: address, distribution, value, log prior."""
        lines = []
        for e in self.entries.values():
            addr = "/".join(str(a) for a in e.address)
            lines.append(f"{addr}\t{e.dist}\t{e.value}\t{e.log_prior!r}")
        return "\n".join(lines)


def log_joint(trace: Trace) -> float:
    return trace.log_joint


def recompute_log_joint(trace: Trace) -> float:
    """Rescore every entry and observation from scratch."""
    terms = [log_density(e.dist, e.value) for e in trace.entries.values()]
    terms += [log_density(o.dist, o.value) for o in trace.observations]
    if any(t == NEG_INF for t in terms):
        return NEG_INF
    return math.fsum(terms)


class _Context:
    """Answers sample requests for one execution and records the trace.

    Values come from, in order of precedence: the proposal site, the
    constraint map, the previous trace (if still in support), a fresh prior draw.
    """

    def __init__(self, rng, old: Optional[Trace] = None, site: Optional[Address] = None,
                 site_value=None, constraints: Optional[Mapping[Address, Any]] = None,
                 budget: int = DEFAULT_STEP_BUDGET):
        self.rng = rng
        self.old = old.entries if old is not None else {}
        self.site = site
        self.site_value = site_value
        self.constraints = constraints or {}
        self.budget = budget
        self.steps = 0
        self.entries: dict = {}
        self.observations: list = []
        self.fresh: list = []  # addresses whose value was not carried over
        self.total = 0.0

    def _tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise RunawayProgramError(f"program exceeded {self.budget} choice points")

    def sample(self, address: Address, dist: Distribution):
        self._tick()
        if address in self.entries:
            raise ValidationError(f"duplicate address {address!r}")
        reused = False
        if address == self.site:
            value = self.site_value
            lp = dist.log_density(value)
        elif address in self.constraints:
            value = self.constraints[address]
            lp = dist.log_density(value)
            reused = True
        else:
            lp = NEG_INF
            prev = self.old.get(address)
            if prev is not None:
                value = prev.value
                lp = dist.log_density(value)
                reused = lp != NEG_INF
            if not reused:
                value = dist.sample(self.rng)
                lp = dist.log_density(value)
        if not reused:
            self.fresh.append(address)
        self.entries[address] = TraceEntry(address, dist, value, lp)
        self.total += lp
        return value

    def observe(self, value, dist: Distribution) -> float:
        self._tick()
        lp = dist.log_density(value)
        self.observations.append(Observation(dist, value, lp))
        self.total += lp
        return lp

    def run(self, program: Callable) -> Trace:
        output = program(self)
        total = self.total if not math.isnan(self.total) else NEG_INF
        return Trace(self.entries, tuple(self.observations), output, total)


def run_forward(program: Callable, rng: np.random.Generator,
                constraints: Optional[Mapping[Address, Any]] = None,
                budget: int = DEFAULT_STEP_BUDGET) -> Trace:
    """Execute ``program`` once, drawing every latent from its prior.

    Addresses listed in ``constraints`` take the given value instead (used for
    replay and trace surgery); their log prior is still recorded.
    """
    return _Context(rng, constraints=constraints, budget=budget).run(program)


def mh_step(program: Callable, trace: Trace, rng: np.random.Generator,
            budget: int = DEFAULT_STEP_BUDGET) -> Tuple[Trace, bool]:
    """One single-site Metropolis-Hastings transition with prior proposals."""
    n_old = len(trace.entries)
    if n_old == 0:
        raise NoLatentEntriesError("no latent entries to propose on")
    addresses = list(trace.entries)
    site = addresses[int(rng.integers(n_old))]
    old_entry = trace.entries[site]
    new_value = old_entry.dist.sample(rng)

    ctx = _Context(rng, old=trace, site=site, site_value=new_value, budget=budget)
    new = ctx.run(program)
    if new.log_joint == NEG_INF:
        return trace, False

    fresh = ctx.fresh
    fresh_set = set(fresh)
    # old entries whose values the new trace did not carry over; the proposal
    # site counts on both sides
    stale = math.fsum(
        e.log_prior for a, e in trace.entries.items()
        if a not in new.entries or a in fresh_set
    )
    fresh_lp = math.fsum(new.entries[a].log_prior for a in fresh)
    delta = (new.log_joint - trace.log_joint
             + math.log(n_old) - math.log(len(new.entries))
             + stale - fresh_lp)
    if delta >= 0 or math.log(rng.random()) < delta:
        return new, True
    return trace, False


def initialize(program: Callable, rng: np.random.Generator,
               attempts: int = INIT_ATTEMPTS, budget: int = DEFAULT_STEP_BUDGET) -> Trace:
    """Forward-run until the trace has finite log joint (rejection initialization)."""
    for _ in range(attempts):
        trace = run_forward(program, rng, budget=budget)
        if trace.log_joint > NEG_INF:
            return trace
    raise ModelInfeasibleError(f"no finite-probability trace in {attempts} forward runs")


def run_chain(program: Callable, iterations: int, rng: np.random.Generator,
              observer: Optional[Callable[[int, Trace, bool], None]] = None,
              budget: int = DEFAULT_STEP_BUDGET) -> Trace:
    """Initialize, then apply ``iterations`` MH steps.

    ``observer(i, trace, accepted)`` is called after step ``i`` (1-based).
    """
    if iterations < 1:
        raise ValidationError("iterations must be >= 1")
    trace = initialize(program, rng, budget=budget)
    if not trace.entries:
        raise NoLatentEntriesError("no latent entries to propose on")
    for i in range(1, iterations + 1):
        trace, accepted = mh_step(program, trace, rng, budget=budget)
        if observer is not None:
            observer(i, trace, accepted)
    return trace


def enumerate_posterior(weights: Mapping[Any, float]) -> dict:
    """Normalize unnormalized log weights ``{state: log w}`` into probabilities."""
    m = max(weights.values())
    z = math.fsum(math.exp(w - m) for w in weights.values())
    return {k: math.exp(w - m) / z for k, w in weights.items()}


def total_variation(p: Mapping[Any, float], q: Mapping[Any, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def histogram(values: Sequence[Any]) -> dict:
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    n = len(values)
    return {k: c / n for k, c in counts.items()}
