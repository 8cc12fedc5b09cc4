"""Pipeline configuration from a line-oriented ``key=value`` file."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from . import tables
from .scenario_sim import BehaviorConfig


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownKey(ConfigError):
    def __init__(self, line: int, key: str):
        super().__init__(f"line {line}: unknown key {key!r}")
        self.line = line
        self.key = key


class MissingRequired(ConfigError):
    def __init__(self, key: str):
        super().__init__(f"missing required key {key!r}")
        self.key = key


@dataclass
class PipelineConfig:
    seed: int
    reliability_mix: tuple[int, ...] = (62, 64, 66, 68, 70)
    cohort_sizes: tuple[int, int, int] = (91, 25, 14)
    clustering_mode: str = "per_level"
    noise_sd: float = 0.1
    k_max: int = 8
    grid_depths: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    grid_min_leaf: tuple[int, ...] = (1, 2, 4, 8)
    test_fraction: float = 0.2
    stratify: bool = False
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    out: Path = Path("output")
    jobs: int = 1

    def __post_init__(self):
        if self.clustering_mode not in ("per_level", "pooled"):
            raise ConfigError(f"clustering_mode must be per_level or pooled, got {self.clustering_mode!r}")
        bad = [lvl for lvl in self.reliability_mix if lvl not in tables.SDT_COUNTS]
        if bad or not self.reliability_mix:
            raise ConfigError(f"reliability_mix must use levels {sorted(tables.SDT_COUNTS)}, got {self.reliability_mix}")
        if len(self.cohort_sizes) != 3 or any(n <= 0 for n in self.cohort_sizes):
            raise ConfigError(f"cohort_sizes needs three positive integers, got {self.cohort_sizes}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")

    @property
    def grid(self) -> list[tuple[int, int]]:
        return [(d, m) for d in self.grid_depths for m in self.grid_min_leaf]

    def snapshot(self) -> dict:
        """Settings that determine outputs; ``out`` and ``jobs`` are excluded."""
        b = self.behavior
        return {
            "seed": self.seed,
            "reliability_mix": list(self.reliability_mix),
            "cohort_sizes": list(self.cohort_sizes),
            "clustering_mode": self.clustering_mode,
            "noise_sd": self.noise_sd,
            "k_max": self.k_max,
            "grid_depths": list(self.grid_depths),
            "grid_min_leaf": list(self.grid_min_leaf),
            "test_fraction": self.test_fraction,
            "stratify": self.stratify,
            "behavior": {
                "blind_follow_rate": dict(b.blind_follow_rate),
                "cross_check_accuracy": b.cross_check_accuracy,
                "cross_check_time_ms": list(b.cross_check_time_ms),
                "cross_check_tracking": list(b.cross_check_tracking),
                "blind_time_ms": list(b.blind_time_ms),
                "blind_tracking": list(b.blind_tracking),
                "e_max": b.e_max,
            },
        }


def _ints(v):
    return tuple(int(x) for x in v.split(","))


def _floats(v):
    return tuple(float(x) for x in v.split(","))


def _pair(v):
    out = _floats(v)
    if len(out) != 2:
        raise ValueError("expected two comma-separated numbers")
    return out


def _bool(v):
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# key -> (parser, destination); destination "behavior.x" targets BehaviorConfig
KEYS = {
    "seed": (int, "seed"),
    "reliability_mix": (_ints, "reliability_mix"),
    "cohort_sizes": (_ints, "cohort_sizes"),
    "clustering_mode": (str, "clustering_mode"),
    "noise_sd": (float, "noise_sd"),
    "k_max": (int, "k_max"),
    "grid_depths": (_ints, "grid_depths"),
    "grid_min_leaf": (_ints, "grid_min_leaf"),
    "test_fraction": (float, "test_fraction"),
    "stratify": (_bool, "stratify"),
    "out": (Path, "out"),
    "jobs": (int, "jobs"),
    "blind_follow_bdm": (float, "behavior.blind_follow_rate.BDM"),
    "blind_follow_disbeliever": (float, "behavior.blind_follow_rate.Disbeliever"),
    "blind_follow_oscillator": (float, "behavior.blind_follow_rate.Oscillator"),
    "cross_check_accuracy": (float, "behavior.cross_check_accuracy"),
    "cross_check_time_ms": (_pair, "behavior.cross_check_time_ms"),
    "cross_check_tracking": (_pair, "behavior.cross_check_tracking"),
    "blind_time_ms": (_pair, "behavior.blind_time_ms"),
    "blind_tracking": (_pair, "behavior.blind_tracking"),
    "e_max": (float, "behavior.e_max"),
}


def parse_config_text(text: str, overrides: dict | None = None) -> PipelineConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise UnknownKey(lineno, key)
        try:
            values[key] = KEYS[key][0](value)
        except ValueError as e:
            raise ParseError(lineno, f"bad value for {key}: {e}") from None
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if "seed" not in values:
        raise MissingRequired("seed")

    top, rates, behavior = {}, dict(tables.BLIND_FOLLOW_RATE), {}
    for key, value in values.items():
        dest = KEYS[key][1]
        if dest.startswith("behavior.blind_follow_rate."):
            rates[dest.rsplit(".", 1)[1]] = value
        elif dest.startswith("behavior."):
            behavior[dest.split(".", 1)[1]] = value
        else:
            top[dest] = value
    top["behavior"] = dataclasses.replace(BehaviorConfig(), blind_follow_rate=rates, **behavior)
    return PipelineConfig(**top)


def parse_config(path, overrides: dict | None = None) -> PipelineConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), overrides)
