"""key=value experiment configuration.

File format: UTF-8, one ``key=value`` per line, ``#`` starts a comment,
later keys override earlier ones, command-line flags override the file.
Keys (dashes and underscores are interchangeable):

    command     verify | coherence | sine-sum | scaling | flat-rip | decompose | char-sums | recover
    p           odd prime                      (exclusive with p_range)
    p_range     LO:HI, primes in [LO, HI]      (scaling default 1000:300000)
    sigma       [0, 0.5)          default 0.1
    delta       (0, 0.5), > sigma default 0.3
    epsilon     > 0               default 0.1
    m1len       integer or auto   default auto
    m2len       integer or auto   default auto
    trials      >= 1              default 100
    seed        0 .. 2^64-1       default 20170923
    convention  paper | unit      default paper (recover: unit)
    out         path or -         default - (stdout)
    mode        free | theorem    default free
    k           >= 1              flat-rip order / largest recovery sparsity
    num_primes  >= 5              primes in a scaling sweep, default 20
    method      omp | ista        default omp
    workers     >= 1              default 1; never changes results
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from typing import Mapping

from ._runtime import DEFAULT_SEED
from .zpz import is_prime

COMMANDS = ("verify", "coherence", "sine-sum", "scaling", "flat-rip", "decompose", "char-sums", "recover")
DEFAULT_SCALING_RANGE = (1000, 300_000)
DEFAULT_P = {"recover": 97, "char-sums": 199}


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("\n".join(self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "verify"
    p: int | None = None
    p_range: tuple[int, int] | None = None
    sigma: float = 0.1
    delta: float = 0.3
    epsilon: float = 0.1
    m1len: int | None = None
    m2len: int | None = None
    trials: int = 100
    seed: int = DEFAULT_SEED
    convention: str = "paper"
    out: str = "-"
    mode: str = "free"
    k: int | None = None
    num_primes: int = 20
    method: str = "omp"
    workers: int = 1

    @property
    def alpha(self) -> float:
        return self.sigma + (self.delta - self.sigma) / 2

    def canonical(self) -> str:
        """Settings that determine results, one per line; excludes out and workers."""
        skip = {"out", "workers"}
        return "\n".join(f"{f.name}={getattr(self, f.name)!r}"
                         for f in dataclasses.fields(self) if f.name not in skip)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _int(v: str) -> int:
    return int(v.strip(), 0)


def _opt_int(v: str) -> int | None:
    return None if v.strip().lower() == "auto" else _int(v)


def _range(v: str) -> tuple[int, int]:
    lo, sep, hi = v.partition(":")
    if not sep:
        raise ValueError("expected LO:HI")
    return _int(lo), _int(hi)


def _choice(*options):
    def parse(v: str) -> str:
        v = v.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


_PARSERS = {
    "command": _choice(*COMMANDS),
    "p": _int,
    "p_range": _range,
    "sigma": float,
    "delta": float,
    "epsilon": float,
    "m1len": _opt_int,
    "m2len": _opt_int,
    "trials": _int,
    "seed": _int,
    "convention": _choice("paper", "unit"),
    "out": str.strip,
    "mode": _choice("free", "theorem"),
    "k": _int,
    "num_primes": _int,
    "method": _choice("omp", "ista"),
    "workers": _int,
}


def _norm_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config(text: str = "", overrides: Mapping[str, object] | None = None,
                 command: str | None = None) -> ExperimentConfig:
    """Validated config from file text plus overrides; raises ConfigError listing every violation."""
    errors: list[str] = []
    values: dict[str, object] = {}
    origin: dict[str, str] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            errors.append(f"line {lineno}: expected key=value, got {raw.strip()!r}")
            continue
        key = _norm_key(key)
        if key not in _PARSERS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = _PARSERS[key](value)
            origin[key] = f"line {lineno}"
        except ValueError as exc:
            errors.append(f"line {lineno}: bad value for {key}: {value.strip()!r} ({exc})")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = _norm_key(key)
        if key not in _PARSERS:
            errors.append(f"override: unknown key {key!r}")
            continue
        try:
            values[key] = _PARSERS[key](str(value)) if isinstance(value, str) else value
            origin[key] = f"--{key.replace('_', '-')}"
            # a flag for p replaces a file's p_range and vice versa
            other = {"p": "p_range", "p_range": "p"}.get(key)
            if other and origin.get(other, "").startswith("line"):
                values.pop(other)
                origin.pop(other)
        except ValueError as exc:
            errors.append(f"--{key}: bad value {value!r} ({exc})")

    if command is not None:
        values["command"] = command
        origin["command"] = "command line"

    def where(*keys):
        for key in keys:
            if key in origin:
                return origin[key]
        return "defaults"

    cmd = values.get("command", "verify")
    if "p" in values and "p_range" in values:
        errors.append(f"{where('p_range', 'p')}: give either p or p_range, not both")
    elif "p" not in values and "p_range" not in values:
        if cmd == "scaling":
            values["p_range"] = DEFAULT_SCALING_RANGE
        else:
            values["p"] = DEFAULT_P.get(cmd, 101)
    if "convention" not in values and cmd == "recover":
        values["convention"] = "unit"

    cfg_fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    cfg = ExperimentConfig(**{k: v for k, v in values.items() if k in cfg_fields})

    if cfg.p is not None and (cfg.p < 3 or not is_prime(cfg.p)):
        errors.append(f"{where('p')}: p must be an odd prime, got {cfg.p}")
    if cfg.p_range is not None:
        lo, hi = cfg.p_range
        if lo < 3 or hi < lo:
            errors.append(f"{where('p_range')}: p_range needs 3 <= LO <= HI, got {lo}:{hi}")
    if not 0.0 <= cfg.sigma < 0.5:
        errors.append(f"{where('sigma')}: sigma must lie in [0, 0.5)")
    if not 0.0 < cfg.delta < 0.5:
        errors.append(f"{where('delta')}: delta must lie in (0, 0.5)")
    if cfg.delta <= cfg.sigma:
        errors.append(f"{where('delta', 'sigma')}: delta must exceed sigma")
    if cfg.epsilon <= 0:
        errors.append(f"{where('epsilon')}: epsilon must be positive")
    for key in ("m1len", "m2len"):
        v = getattr(cfg, key)
        if v is not None and v < 1:
            errors.append(f"{where(key)}: {key} must be positive or auto")
    if cfg.trials < 1:
        errors.append(f"{where('trials')}: trials must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        errors.append(f"{where('seed')}: seed must be a 64-bit unsigned integer")
    if cfg.k is not None and cfg.k < 1:
        errors.append(f"{where('k')}: k must be >= 1")
    if cfg.num_primes < 5:
        errors.append(f"{where('num_primes')}: num_primes must be >= 5")
    if cfg.workers < 1:
        errors.append(f"{where('workers')}: workers must be >= 1")
    if errors:
        raise ConfigError(errors)
    return cfg
