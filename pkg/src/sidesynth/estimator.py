"""Estimator-style facade over the analysis and attack pipeline.

``fit`` runs the offline phase (symbolic execution and observation
merging) on a program; ``attack``/``predict`` run the online phase against
concrete secrets.  Hyper-parameters live in ``__init__`` unchanged, so the
usual ``get_params``/``set_params``/``clone`` machinery applies.

    >>> synth = AttackSynthesizer(heuristic="m", alphabet="0123456789").fit("PCI")
    >>> synth.predict(["1337"])
    ['1337']
"""
from __future__ import annotations

import logging
from typing import Iterable

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .attack import AttackTrace, HeuristicConfig, KnowledgeState, run_attack, secret_rng
from .benchmarks import BENCHMARKS, get_benchmark
from .constraints import HIGH, LOWER, StringDomain
from .dsl import Program, parse_program
from .errors import ConfigurationError
from .symexec import CostModel, merge_observations, sym_exec

__all__ = ["AttackSynthesizer", "resolve_program", "validate_secrets"]

log = logging.getLogger(__name__)


def resolve_program(source, len_high=None, len_low=None):
    """Program plus the benchmark entry it came from (or None).

    ``source`` is a :class:`Program`, a benchmark id or DSL text.
    """
    entry = None
    if isinstance(source, Program):
        program = source
    elif isinstance(source, str) and source.strip().upper() in BENCHMARKS:
        entry = get_benchmark(source.strip())
        program = entry.program()
    elif isinstance(source, str):
        program = parse_program(source)
    else:
        raise ConfigurationError(f"cannot make a program out of {type(source).__name__}")
    if len_high is not None or len_low is not None:
        program = program.with_lengths(len_high, len_low)
    return program, entry


def validate_secrets(secrets: Iterable[str], domain: StringDomain) -> list:
    if isinstance(secrets, str):
        secrets = [secrets]
    out = [domain.check(s, HIGH) for s in secrets]
    if not out:
        raise ConfigurationError("no secrets given")
    return out


class AttackSynthesizer(BaseEstimator):
    """Synthesize side-channel attacks for one program.

    Parameters mirror the command-line flags; ``alphabet=None`` keeps the
    benchmark's default alphabet (lowercase letters for DSL text).
    """

    def __init__(self, heuristic="m", restricted=True, delta=0, alphabet=None,
                 len_high=None, len_low=None, k=20, t0=10.0, t_min=0.001, cooling=0.1,
                 pop_size=20, offspring_size=10, best_n=10, seed=0, step_limit=200,
                 time_limit=60.0, stall_steps=3, cost_weights=None, timing=True):
        self.heuristic = heuristic
        self.restricted = restricted
        self.delta = delta
        self.alphabet = alphabet
        self.len_high = len_high
        self.len_low = len_low
        self.k = k
        self.t0 = t0
        self.t_min = t_min
        self.cooling = cooling
        self.pop_size = pop_size
        self.offspring_size = offspring_size
        self.best_n = best_n
        self.seed = seed
        self.step_limit = step_limit
        self.time_limit = time_limit
        self.stall_steps = stall_steps
        self.cost_weights = cost_weights
        self.timing = timing

    def heuristic_config(self) -> HeuristicConfig:
        return HeuristicConfig(
            kind=str(self.heuristic).lower(), restricted=bool(self.restricted), k=self.k,
            t0=self.t0, t_min=self.t_min, cooling=self.cooling, pop_size=self.pop_size,
            offspring_size=self.offspring_size, best_n=self.best_n, seed=self.seed,
            step_limit=self.step_limit, time_limit=self.time_limit,
            stall_steps=self.stall_steps).validate()

    def cost_model(self) -> CostModel:
        return CostModel.from_dict(dict(self.cost_weights or {}))

    def _validate_params(self):
        if not isinstance(self.delta, int) or self.delta < 0:
            raise ConfigurationError("delta must be a non-negative integer")
        self.heuristic_config()
        self.cost_model()

    def fit(self, X, y=None):
        """Generate observation constraints for ``X`` (program, benchmark id or source)."""
        self._validate_params()
        program, entry = resolve_program(X, self.len_high, self.len_low)
        if self.alphabet is not None:
            alphabet = self.alphabet
        else:
            alphabet = entry.alphabet if entry is not None else LOWER
        self.program_ = program
        self.benchmark_ = entry.id if entry is not None else program.name
        self.domain_ = StringDomain(alphabet, program.high_len, program.low_len)
        self.paths_ = sym_exec(program, self.cost_model(), self.domain_)
        self.observation_constraints_ = merge_observations(self.paths_, self.delta)
        self.n_paths_ = len(self.paths_)
        self.n_classes_ = len(self.observation_constraints_)
        log.info("%s: %d paths, %d observation classes", self.benchmark_,
                 self.n_paths_, self.n_classes_)
        return self

    def initial_state(self) -> KnowledgeState:
        check_is_fitted(self, "observation_constraints_")
        return KnowledgeState.initial(self.domain_)

    def attack_one(self, secret: str, on_input=None) -> AttackTrace:
        check_is_fitted(self, "observation_constraints_")
        (secret,) = validate_secrets([secret], self.domain_)
        cfg = self.heuristic_config()
        return run_attack(self.program_, self.observation_constraints_, self.initial_state(),
                          secret, cfg, cost_model=self.cost_model(), benchmark=self.benchmark_,
                          timing=self.timing, rng=secret_rng(cfg.seed, secret),
                          on_input=on_input)

    def attack(self, secrets) -> list:
        """One :class:`AttackTrace` per secret."""
        check_is_fitted(self, "observation_constraints_")
        return [self.attack_one(s) for s in validate_secrets(secrets, self.domain_)]

    def predict(self, secrets) -> list:
        """Recovered secret per attack, or None where the attack was incomplete."""
        return [t.recovered for t in self.attack(secrets)]

    def score(self, secrets, y=None) -> float:
        """Mean fraction of the initial entropy removed by the attacks."""
        traces = self.attack(secrets)
        return sum(1 - t.h_final_bits / t.h_init_bits if t.h_init_bits else 1.0
                   for t in traces) / len(traces)
