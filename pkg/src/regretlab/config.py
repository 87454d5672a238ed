"""Experiment configuration in a plain ``key = value`` text format.

Grammar, one setting per line::

    # comments start with '#', blank lines are ignored
    env = riverswim:n_states=6        # generator name, then key=value params
    agents = psrl, ucrl2              # comma separated
    horizon = 100000
    seeds = 0-19                      # ranges and/or comma separated integers
    preset = practical                # theory | practical, for psrl
    rho = 0.05                        # psrl failure probability
    delta = 0.05                      # ucrl2 confidence parameter
    jobs = 1                          # worker processes
    out = results                     # output directory
    checks = beta_anti, chernoff      # names for the `check` subcommand
    trials = 100000                   # optional trial-count override for checks
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from .environments import GENERATORS, parse_env_spec
from .mdp import UsageError

AGENTS = ("psrl", "ucrl2")
PRESETS = ("theory", "practical")
KEYS = ("env", "agents", "horizon", "seeds", "preset", "rho", "delta", "jobs", "out",
        "checks", "trials")


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "riverswim:n_states=6"
    agents: tuple[str, ...] = ("psrl",)
    horizon: int = 1000
    seeds: tuple[int, ...] = (0,)
    preset: str = "practical"
    rho: float = 0.05
    delta: float = 0.05
    jobs: int = 1
    out: str = "results"
    checks: tuple[str, ...] = field(default=())
    trials: int | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise UsageError(f"horizon must be >= 1, got {self.horizon}")
        if not self.seeds:
            raise UsageError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise UsageError("seeds must be distinct")
        name, _ = parse_env_spec(self.env)
        if name not in GENERATORS:
            raise UsageError(f"unknown environment {name!r}; known: {sorted(GENERATORS)}")
        for agent in self.agents:
            if agent not in AGENTS:
                raise UsageError(f"unknown agent {agent!r}; known: {list(AGENTS)}")
        if not self.agents:
            raise UsageError("at least one agent is required")
        if self.preset not in PRESETS:
            raise UsageError(f"unknown preset {self.preset!r}; expected one of {list(PRESETS)}")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")

    def override(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0-3,7"`` -> ``(0, 1, 2, 3, 7)``."""
    seeds = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        lo, dash, hi = part.partition("-")
        try:
            if dash:
                a, b = int(lo), int(hi)
                if b < a:
                    raise UsageError(f"empty seed range {part!r}")
                seeds.extend(range(a, b + 1))
            else:
                seeds.append(int(part))
        except ValueError as exc:
            raise UsageError(f"bad seed entry {part!r}") from exc
    return tuple(seeds)


def _names(text: str) -> tuple[str, ...]:
    return tuple(filter(None, (x.strip() for x in text.split(","))))


def _number(key, text, kind):
    try:
        return kind(text)
    except ValueError as exc:
        raise UsageError(f"{key} expects a {kind.__name__}, got {text!r}") from exc


def parse_config_text(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq:
            raise UsageError(f"line {lineno}: expected 'key = value'")
        if key not in KEYS:
            raise UsageError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise UsageError(f"line {lineno}: duplicate key {key!r}")
        if key in ("agents", "checks"):
            values[key] = _names(value)
        elif key == "seeds":
            values[key] = parse_seeds(value)
        elif key in ("horizon", "jobs", "trials"):
            values[key] = _number(key, value, int)
        elif key in ("rho", "delta"):
            values[key] = _number(key, value, float)
        else:
            values[key] = value
    return ExperimentConfig(**values)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())
