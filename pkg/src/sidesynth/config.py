"""Run configuration: one flat ``key = value`` file per run.

Keys are the long command-line flag names, grouped into ``[run]``,
``[heuristic]`` and ``[cost]`` sections.  Saving and reloading a config
yields an equal object, and an equal config reruns to identical traces.
"""
from __future__ import annotations

import configparser
import io
import os
import random
from dataclasses import dataclass, field, fields
from typing import Optional

from .constraints import DIGITS, LOWER, HIGH, StringDomain
from .errors import ConfigurationError

__all__ = ["RunConfig", "resolve_alphabet", "resolve_seed", "resolve_secrets", "parse_bool"]

ALPHABETS = {"digits": DIGITS, "lower": LOWER}
SEED_ENV = "SIDESYNTH_SEED"


def resolve_alphabet(name: Optional[str]) -> Optional[str]:
    """``digits``/``lower`` or a literal list of characters; None stays None."""
    if name is None:
        return None
    return ALPHABETS.get(name.lower(), name)


def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"expected true or false, got {text!r}")


def resolve_secrets(spec, domain: StringDomain, seed: int) -> list:
    """Explicit secrets, or ``random:N`` drawn reproducibly from ``seed``."""
    if isinstance(spec, str) and spec.startswith("random:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad secrets spec {spec!r}") from None
        if n < 1:
            raise ConfigurationError("random:N needs N >= 1")
        rng = random.Random(f"secrets:{seed}")
        return ["".join(rng.choice(domain.alphabet) for _ in range(domain.high_len))
                for _ in range(n)]
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    return [domain.check(s.strip(), HIGH) for s in items if s.strip()]


# (section, attribute, type); config keys use dashes
_LAYOUT = [
    ("run", "benchmark", str), ("run", "program", str), ("run", "alphabet", str),
    ("run", "len_high", int), ("run", "len_low", int), ("run", "delta", int),
    ("run", "secrets", str), ("run", "seed", int), ("run", "out", str),
    ("heuristic", "heuristic", str), ("heuristic", "restricted", bool),
    ("heuristic", "k", int), ("heuristic", "t0", float), ("heuristic", "t_min", float),
    ("heuristic", "cooling", float), ("heuristic", "pop_size", int),
    ("heuristic", "offspring_size", int), ("heuristic", "best_n", int),
    ("heuristic", "steps", int), ("heuristic", "time_limit", float),
    ("heuristic", "stall_steps", int),
]


@dataclass
class RunConfig:
    benchmark: Optional[str] = None
    program: Optional[str] = None
    alphabet: Optional[str] = None
    len_high: Optional[int] = None
    len_low: Optional[int] = None
    delta: int = 0
    secrets: Optional[str] = None
    seed: int = 0
    out: Optional[str] = None
    heuristic: str = "m"
    restricted: bool = True
    k: int = 20
    t0: float = 10.0
    t_min: float = 0.001
    cooling: float = 0.1
    pop_size: int = 20
    offspring_size: int = 10
    best_n: int = 10
    steps: int = 200
    time_limit: Optional[float] = 60.0
    stall_steps: int = 3
    cost: dict = field(default_factory=dict)

    def estimator_params(self) -> dict:
        return dict(heuristic=self.heuristic, restricted=self.restricted, delta=self.delta,
                    alphabet=resolve_alphabet(self.alphabet), len_high=self.len_high,
                    len_low=self.len_low, k=self.k, t0=self.t0, t_min=self.t_min,
                    cooling=self.cooling, pop_size=self.pop_size,
                    offspring_size=self.offspring_size, best_n=self.best_n, seed=self.seed,
                    step_limit=self.steps, time_limit=self.time_limit,
                    stall_steps=self.stall_steps, cost_weights=dict(self.cost) or None)

    def dumps(self) -> str:
        cp = configparser.ConfigParser()
        for section, attr, _ in _LAYOUT:
            value = getattr(self, attr)
            if value is None:
                continue
            if not cp.has_section(section):
                cp.add_section(section)
            cp.set(section, attr.replace("_", "-"), str(value).lower()
                   if isinstance(value, bool) else repr(value) if isinstance(value, float)
                   else str(value))
        if self.cost:
            cp.add_section("cost")
            for kind, w in sorted(self.cost.items()):
                cp.set("cost", kind, str(w))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigurationError(f"unreadable config: {exc}") from None
        known = {(s, a.replace("_", "-")): (a, t) for s, a, t in _LAYOUT}
        values = {}
        for section in cp.sections():
            if section == "cost":
                values["cost"] = {k: int(v) for k, v in cp.items("cost")}
                continue
            for key, raw in cp.items(section):
                try:
                    attr, typ = known[(section, key)]
                except KeyError:
                    raise ConfigurationError(f"unknown key [{section}] {key}") from None
                try:
                    values[attr] = parse_bool(raw) if typ is bool else typ(raw)
                except ValueError:
                    raise ConfigurationError(f"bad value for {key}: {raw!r}") from None
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def replace(self, **changes) -> "RunConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig(**data)
