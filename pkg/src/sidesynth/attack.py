"""Adaptive attack loop: entropy, mutual information and input heuristics.

The attacker's knowledge is a constraint ``C_h`` on the secret, kept both
as a formula and as a compiled automaton with its exact model count.  With
a uniform prior over the models of ``C_h`` the remaining uncertainty is
``log2 #C_h``, and the expected information gain of an input ``l`` is
computed from the class sizes ``m_i = #(C_h & psi_i[l := value])``.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import logging
import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import automata as A
from . import constraints as C
from .constraints import HIGH, LOW, StringDomain
from .dsl import Program
from .errors import (ConfigurationError, ContradictionError, ExhaustedError,
                     PartitionError)
from .solver import has_cross_positions
from .symexec import UNIT_COST, CostModel, ObservationConstraint, run_concrete

__all__ = [
    "KnowledgeState", "HeuristicConfig", "StepRecord", "AttackTrace", "Oracle",
    "entropy", "class_counts", "mutual_info", "observe", "update", "get_input",
    "get_neighbor_input", "attack_input_m", "attack_input_ra", "attack_input_sa",
    "attack_input_ga", "crossover", "run_attack", "secret_rng", "HEURISTICS",
]

log = logging.getLogger(__name__)


# -- knowledge ------------------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeState:
    """``C_h`` as a formula and an automaton, plus the inputs tried so far."""

    c_h: C.Formula
    ka: A.KnowledgeAutomaton
    tried: tuple
    domain: StringDomain
    excluded: Optional[A.Dfa] = field(default=None, repr=False, compare=False)

    @classmethod
    def initial(cls, domain: StringDomain, c_h: C.Formula = C.TRUE) -> "KnowledgeState":
        return cls(c_h, A.KnowledgeAutomaton.from_formula(c_h, domain), (), domain)

    @property
    def count(self) -> int:
        return self.ka.count

    @property
    def projectable(self) -> bool:
        """Whether ``C_h`` can be renamed to a constraint on ``l``."""
        return self.domain.high_len == self.domain.low_len

    @property
    def c_l(self) -> C.Formula:
        return C.project_to_low(self.c_h, self.tried, self.domain)

    @functools.cached_property
    def low_dfa(self) -> A.Dfa:
        """Automaton of ``C_l``.

        ``h`` and ``l`` share alphabet and length here, so the knowledge
        automaton read as a language over ``l`` already is the renamed
        constraint; only the tried inputs remain to be removed.
        """
        if not self.projectable:
            raise ExhaustedError("no projection from h to l when their lengths differ")
        if self.excluded is None:
            return self.ka.dfa
        return A.intersect(self.ka.dfa, self.excluded)

    def in_c_l(self, value: str) -> bool:
        return self.projectable and self.low_dfa.accepts(value)

    def secret(self) -> Optional[str]:
        """The secret once it is determined, else None."""
        if self.ka.count != 1:
            return None
        return "".join(A.first_word(self.ka.dfa, self.ka.length))


def entropy(ks: KnowledgeState) -> float:
    """Remaining uncertainty in bits, ``log2 #C_h``."""
    if ks.count < 1:
        raise ContradictionError("knowledge has no models left")
    return math.log2(ks.count)


@functools.lru_cache(maxsize=16384)
def _instantiated(psi: C.Formula, value: str, domain: StringDomain) -> A.Dfa:
    return A.compile(C.substitute(psi, LOW, value, domain), domain, HIGH)


@functools.lru_cache(maxsize=1024)
def _two_track(psi: C.Formula, domain: StringDomain) -> Optional[A.Dfa]:
    """Pair automaton of ``psi`` when it only relates equal positions of h and l."""
    if has_cross_positions(psi):
        return None
    return A.compile_joint(psi, domain)


def _class_count(ks, psi, l_val):
    joint = _two_track(psi, ks.domain)
    if joint is not None:
        return A.count_section(ks.ka.dfa, joint, l_val, ks.domain)
    return A.count_intersection(ks.ka.dfa, _instantiated(psi, l_val, ks.domain), ks.ka.length)


def class_counts(ks: KnowledgeState, psis: Sequence[ObservationConstraint],
                 l_val: str) -> list:
    """``#(C_h & psi_i[l := l_val])`` for every class, checked to partition ``C_h``."""
    ks.domain.check(l_val, LOW)
    counts = [_class_count(ks, p.formula, l_val) for p in psis]
    if sum(counts) != ks.count:
        raise PartitionError(f"class counts {counts} do not add up to {ks.count} for l={l_val!r}")
    return counts


def _information(counts, total) -> float:
    if total <= 1:
        return 0.0
    return sum(m / total * (math.log2(total) - math.log2(m)) for m in counts if m)


def mutual_info(ks: KnowledgeState, psis: Sequence[ObservationConstraint], l_val: str) -> float:
    """Expected entropy reduction from observing the program on ``l_val``."""
    return _information(class_counts(ks, psis, l_val), ks.count)


def update(ks: KnowledgeState, psi: ObservationConstraint, l_val: str) -> KnowledgeState:
    """Conjoin the observed class, instantiated at ``l_val``, to ``C_h``."""
    phi = C.substitute(psi.formula, LOW, l_val, ks.domain)
    dfa = A.intersect(ks.ka.dfa, _instantiated(psi.formula, l_val, ks.domain))
    ka = A.KnowledgeAutomaton(dfa, A.count_models(dfa, ks.ka.length), ks.ka.length)
    if ka.count == 0:
        raise ContradictionError(f"observation of class {psi.observation} on {l_val!r} "
                                 "contradicts the current knowledge")
    excluded = None
    if ks.projectable:
        drop = A.compile(C.StrNeqConst(LOW, l_val), ks.domain, LOW)
        excluded = drop if ks.excluded is None else A.intersect(ks.excluded, drop)
    return KnowledgeState(C.simplify(C.conj(ks.c_h, phi)), ka, ks.tried + (l_val,),
                          ks.domain, excluded)


# -- oracle -------------------------------------------------------------------------

@dataclass(frozen=True)
class Oracle:
    """The program run on a fixed secret; answers with execution costs."""

    program: Program
    secret: str
    cost_model: CostModel = UNIT_COST
    domain: Optional[StringDomain] = None

    def __call__(self, l_val: str) -> int:
        return run_concrete(self.program, self.secret, l_val, self.cost_model, self.domain)[1]


def observe(oracle: Oracle, l_val: str, psis: Sequence[ObservationConstraint]) -> int:
    """Index of the observation class the oracle's cost falls in."""
    cost = oracle(l_val)
    for i, psi in enumerate(psis):
        if psi.covers(cost):
            return i
    raise ConfigurationError(f"cost {cost} on input {l_val!r} matches no observation class")


# -- input generation ----------------------------------------------------------------

def _random_string(domain: StringDomain, rng: random.Random) -> str:
    return "".join(rng.choice(domain.alphabet) for _ in range(domain.low_len))


def get_input(ks: KnowledgeState, restricted: bool, rng: random.Random) -> str:
    """Restricted: uniform model of ``C_l``.  Otherwise uniform over all of ``l``'s domain.

    Without a projection (``|h| != |l|``) restricted requests are served
    unrestricted.
    """
    if not restricted or not ks.projectable:
        return _random_string(ks.domain, rng)
    try:
        return A.sample_uniform(ks.low_dfa, ks.domain.low_len, rng)
    except ValueError:
        raise ExhaustedError("every model of C_l has been tried") from None


def get_neighbor_input(current: str, ks: KnowledgeState, restricted: bool,
                       rng: random.Random, retries: int = 10) -> str:
    """``current`` with one position changed to a different character."""
    alphabet = ks.domain.alphabet

    def mutate():
        if len(alphabet) < 2 or not current:
            return current
        pos = rng.randrange(len(current))
        choices = [c for c in alphabet if c != current[pos]]
        return current[:pos] + rng.choice(choices) + current[pos + 1:]

    if not restricted or not ks.projectable:
        return mutate()
    for _ in range(retries):
        cand = mutate()
        if ks.in_c_l(cand):
            return cand
    return get_input(ks, True, rng)


def crossover(a: str, b: str, cut: int) -> tuple:
    return a[:cut] + b[cut:], b[:cut] + a[cut:]


# -- heuristics ----------------------------------------------------------------------

@dataclass(frozen=True)
class HeuristicConfig:
    kind: str = "m"
    restricted: bool = True
    k: int = 20
    t0: float = 10.0
    t_min: float = 0.001
    cooling: float = 0.1
    pop_size: int = 20
    offspring_size: int = 10
    best_n: int = 10
    mutation_rate: Optional[float] = None
    neighbor_retries: int = 10
    seed: int = 0
    step_limit: int = 200
    time_limit: Optional[float] = 60.0
    stall_steps: int = 3

    def validate(self) -> "HeuristicConfig":
        if self.kind not in HEURISTICS:
            raise ConfigurationError(f"unknown heuristic {self.kind!r}")
        if self.k < 1:
            raise ConfigurationError("K must be at least 1")
        if not (self.t0 > self.t_min > 0 and 0 < self.cooling < 1):
            raise ConfigurationError("annealing needs t0 > t_min > 0 and 0 < cooling < 1")
        if self.pop_size < 2 or self.offspring_size < 1 or not 0 <= self.best_n <= self.pop_size:
            raise ConfigurationError("need pop_size >= 2, offspring_size >= 1, best_n <= pop_size")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ConfigurationError("mutation_rate must lie in [0, 1]")
        if self.step_limit < 0 or self.stall_steps < 1:
            raise ConfigurationError("step_limit must be >= 0 and stall_steps >= 1")
        return self

    @property
    def label(self) -> str:
        return f"{self.kind.upper()}-{'R' if self.restricted else 'NR'}"


class _Objective:
    """Mutual information with per-step memoisation."""

    def __init__(self, ks, psis):
        self.ks, self.psis, self.memo = ks, psis, {}

    def __call__(self, l_val):
        v = self.memo.get(l_val)
        if v is None:
            v = self.memo[l_val] = mutual_info(self.ks, self.psis, l_val)
        return v


def attack_input_m(ks, psis, cfg, rng, objective=None) -> str:
    return get_input(ks, True, rng)


def attack_input_ra(ks, psis, cfg, rng, objective=None) -> str:
    objective = objective or _Objective(ks, psis)
    best, best_i = None, 0.0
    for _ in range(cfg.k):
        cand = get_input(ks, cfg.restricted, rng)
        value = objective(cand)
        if best is None:
            best = cand
        if value > best_i:
            best, best_i = cand, value
    return best


def attack_input_sa(ks, psis, cfg, rng, objective=None) -> str:
    objective = objective or _Objective(ks, psis)
    t = cfg.t0
    l_val = get_input(ks, cfg.restricted, rng)
    info = objective(l_val)
    best = l_val
    while t >= cfg.t_min:
        l_val = get_neighbor_input(l_val, ks, cfg.restricted, rng, cfg.neighbor_retries)
        new = objective(l_val)
        if new > info or math.exp((new - info) / t) > rng.random():
            info, best = new, l_val
        t -= t * cfg.cooling
    return best


def attack_input_ga(ks, psis, cfg, rng, objective=None) -> str:
    objective = objective or _Objective(ks, psis)
    alphabet = ks.domain.alphabet
    n = ks.domain.low_len
    rate = cfg.mutation_rate if cfg.mutation_rate is not None else (1 / n if n else 0)
    pop = [get_input(ks, cfg.restricted, rng) for _ in range(cfg.pop_size)]
    best, best_i = pop[0], 0.0
    for _ in range(cfg.k):
        fit = [objective(x) for x in pop]
        for x, f in zip(pop, fit):
            if f > best_i:
                best, best_i = x, f
        offspring = []
        while len(offspring) < cfg.offspring_size:
            weights = fit if sum(fit) > 0 else None
            a, b = rng.choices(pop, weights=weights, k=2)
            child = crossover(a, b, rng.randint(1, n - 1))[0] if n > 1 else a
            child = "".join(rng.choice(alphabet) if rng.random() < rate else c for c in child)
            offspring.append(child)
        ranked = sorted(range(len(pop)), key=lambda i: -fit[i])[:cfg.best_n]
        pop = [pop[i] for i in ranked] + offspring
    return best


HEURISTICS = {"m": attack_input_m, "ra": attack_input_ra,
              "sa": attack_input_sa, "ga": attack_input_ga}


# -- traces --------------------------------------------------------------------------

TRACE_HEADER = ("step", "input", "observation", "class", "entropy_bits",
                "model_count", "elapsed_ms")


@dataclass(frozen=True)
class StepRecord:
    step: int
    input: str
    observation: int
    class_index: int
    entropy_bits: float
    model_count: int
    elapsed_ms: Optional[float] = None
    expected_gain: float = 0.0


@dataclass
class AttackTrace:
    benchmark: str
    heuristic: str
    restricted: bool
    seed: int
    secret: str
    h_init_bits: float
    steps: list = field(default_factory=list)
    outcome: str = "incomplete"
    reason: str = ""
    recovered: Optional[str] = None
    emitted_outside_c_l: int = 0

    @property
    def complete(self) -> bool:
        return self.outcome == "complete"

    @property
    def h_final_bits(self) -> float:
        return self.steps[-1].entropy_bits if self.steps else self.h_init_bits

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for s in self.steps:
            w.writerow([s.step, s.input, s.observation, s.class_index,
                        f"{s.entropy_bits:.12f}", s.model_count,
                        "" if s.elapsed_ms is None else f"{s.elapsed_ms:.3f}"])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"benchmark": self.benchmark, "heuristic": self.heuristic,
                "restricted": self.restricted, "seed": self.seed,
                "h_init_bits": self.h_init_bits, "h_final_bits": self.h_final_bits,
                "steps": len(self.steps), "outcome": self.outcome}

    def to_json(self) -> str:
        data = self.summary()
        data.update(secret=self.secret, reason=self.reason, recovered=self.recovered,
                    emitted_outside_c_l=self.emitted_outside_c_l)
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def secret_rng(seed: int, secret: str) -> random.Random:
    """Independent, reproducible stream for one (seed, secret) run."""
    return random.Random(f"{seed}:{secret}")


def run_attack(program: Program, psis: Sequence[ObservationConstraint], ks0: KnowledgeState,
               secret: str, cfg: HeuristicConfig, *, cost_model: CostModel = UNIT_COST,
               benchmark: str = "", timing: bool = True,
               rng: Optional[random.Random] = None,
               on_input: Optional[Callable[[KnowledgeState, str], None]] = None) -> AttackTrace:
    """Attack ``secret`` until its entropy is zero or no progress is possible.

    Stops as incomplete when the step or time budget runs out, when ``C_l``
    has no untried model left, or when the chosen input's expected gain was
    zero for ``cfg.stall_steps`` consecutive steps.  ``on_input`` sees every
    emitted input together with the state it was chosen in.
    """
    cfg.validate()
    domain = ks0.domain
    domain.check(secret, HIGH)
    if not ks0.ka.dfa.accepts(secret):
        raise ContradictionError("the secret does not satisfy the initial knowledge")
    rng = rng or secret_rng(cfg.seed, secret)
    oracle = Oracle(program, secret, cost_model, domain)
    pick = HEURISTICS[cfg.kind]
    ks = ks0
    trace = AttackTrace(benchmark or program.name, cfg.label, cfg.restricted, cfg.seed,
                        secret, entropy(ks0))
    start = time.monotonic()
    stalled = 0
    while True:
        if ks.count == 1:
            trace.outcome, trace.reason = "complete", ""
            trace.recovered = ks.secret()
            break
        if len(trace.steps) >= cfg.step_limit:
            trace.reason = "step-limit"
            break
        if cfg.time_limit is not None and time.monotonic() - start > cfg.time_limit:
            trace.reason = "time-limit"
            break
        t0 = time.monotonic()
        objective = _Objective(ks, psis)
        try:
            l_val = pick(ks, psis, cfg, rng, objective)
        except ExhaustedError:
            trace.reason = "exhausted"
            break
        if cfg.restricted and not ks.projectable:
            trace.emitted_outside_c_l += 1
        if on_input is not None:
            on_input(ks, l_val)
        gain = objective(l_val)
        idx = observe(oracle, l_val, psis)
        ks = update(ks, psis[idx], l_val)
        if not ks.ka.dfa.accepts(secret):
            raise ContradictionError("the secret fell out of the knowledge constraint")
        elapsed = (time.monotonic() - t0) * 1000 if timing else None
        trace.steps.append(StepRecord(len(trace.steps) + 1, l_val, psis[idx].observation, idx,
                                      entropy(ks), ks.count, elapsed, gain))
        stalled = stalled + 1 if gain == 0 else 0
        if stalled >= cfg.stall_steps:
            trace.reason = "no-gain"
            break
    log.info("%s %s secret=%s: %s after %d steps, %.4f bits left", trace.benchmark,
             cfg.label, secret, trace.outcome, len(trace.steps), trace.h_final_bits)
    return trace
