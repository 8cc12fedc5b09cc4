"""Synthetic surveillance experiment: trial schedules, scoring, and agents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tables
from .profiles import CharacteristicsProfile, sample_profile
from .trust_core import (
    DetectorOutcome,
    TrustParams,
    TrustState,
    TrustTrajectory,
    sample_trust,
    update_state,
)

OUTCOME_CLASSES = ("Hit", "Miss", "FA", "CR")
N_TRIALS = 100
TRIAL_MS = 10_000.0
TRACKING_SAMPLES = 200


class SampleCountMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ReliabilityLevel:
    percent: int
    counts: tuple[int, int, int, int]

    def __post_init__(self):
        if sum(self.counts) != N_TRIALS:
            raise ValueError(f"counts {self.counts} do not sum to {N_TRIALS}")
        hits, _, _, crs = self.counts
        if hits + crs != self.percent:
            raise ValueError(f"counts {self.counts} do not give {self.percent}% reliability")

    @classmethod
    def of(cls, percent: int) -> "ReliabilityLevel":
        try:
            return cls(percent, tables.SDT_COUNTS[percent])
        except KeyError:
            raise ValueError(f"no reliability level {percent}%; choose from {sorted(tables.SDT_COUNTS)}") from None

    @property
    def n_signal(self) -> int:
        return self.counts[0] + self.counts[1]


@dataclass(frozen=True)
class TrialSpec:
    index: int
    outcome_class: str

    @property
    def threat(self) -> bool:
        return self.outcome_class in ("Hit", "Miss")

    @property
    def alert(self) -> bool:
        return self.outcome_class in ("Hit", "FA")

    @property
    def detector_correct(self) -> bool:
        return self.outcome_class in ("Hit", "CR")

    @property
    def outcome(self) -> DetectorOutcome:
        return DetectorOutcome.from_class(self.outcome_class)


@dataclass(frozen=True)
class TrialSchedule:
    level: int
    trials: tuple[TrialSpec, ...]

    def __len__(self) -> int:
        return len(self.trials)

    @property
    def outcome_classes(self) -> list[str]:
        return [t.outcome_class for t in self.trials]

    @property
    def successes(self) -> np.ndarray:
        return np.array([t.detector_correct for t in self.trials], dtype=bool)


@dataclass(frozen=True)
class SdtConfig:
    criterion_c: float = tables.SDT_CRITERION
    sensitivity_dprime: float = tables.SDT_DPRIME
    n_signal: int = 50
    n_total: int = N_TRIALS

    def __post_init__(self):
        if not 0 < self.n_signal <= self.n_total:
            raise ValueError("need 0 < n_signal <= n_total")


@dataclass(frozen=True)
class BehaviorConfig:
    """Generative behavior of a simulated operator.

    These rates and ranges are simulator assumptions, not measured values;
    only the per-archetype blind-follow rates come from observed ratios.
    """

    blind_follow_rate: dict = field(default_factory=lambda: dict(tables.BLIND_FOLLOW_RATE))
    cross_check_accuracy: float = 0.95
    cross_check_time_ms: tuple[float, float] = (2000.0, 8000.0)
    cross_check_tracking: tuple[float, float] = (0.4, 0.8)
    blind_time_ms: tuple[float, float] = (300.0, 1200.0)
    blind_tracking: tuple[float, float] = (0.1, 0.4)
    e_max: float = 250.0


@dataclass
class AgentRecord:
    agent_id: str
    archetype: str
    level: int
    generating_params: TrustParams
    schedule: TrialSchedule
    trajectory: TrustTrajectory
    profile: CharacteristicsProfile | None
    behaviors: list[str]
    detection: np.ndarray
    tracking: np.ndarray

    @property
    def totals(self) -> tuple[float, float, float]:
        tracking = float(self.tracking.sum())
        detection = float(self.detection.sum())
        return tracking, detection, tracking + detection


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def sdt_rates(config: SdtConfig) -> tuple[float, float]:
    d, c = config.sensitivity_dprime, config.criterion_c
    return normal_cdf(d / 2 - c), normal_cdf(-d / 2 - c)


def sdt_counts(config: SdtConfig) -> tuple[int, int, int, int]:
    """(hits, misses, false alarms, correct rejections) implied by c and d'.

    Rounds half away from zero. These do not reproduce every tabulated row;
    the tabulated counts remain the ground truth for schedules.
    """
    hit_rate, fa_rate = sdt_rates(config)
    n_noise = config.n_total - config.n_signal
    hits = int(math.floor(hit_rate * config.n_signal + 0.5))
    fas = int(math.floor(fa_rate * n_noise + 0.5))
    return hits, config.n_signal - hits, fas, n_noise - fas


def generate_schedule(level: ReliabilityLevel | int, seed) -> TrialSchedule:
    if not isinstance(level, ReliabilityLevel):
        level = ReliabilityLevel.of(level)
    classes = np.repeat(np.arange(4), level.counts)
    order = np.random.default_rng(seed).permutation(classes)
    trials = tuple(TrialSpec(i + 1, OUTCOME_CLASSES[c]) for i, c in enumerate(order))
    return TrialSchedule(level.percent, trials)


def detection_score(correct: bool, threat_present: bool, detection_time_ms: float) -> float:
    if not 0.0 <= detection_time_ms <= TRIAL_MS:
        raise ValueError(f"detection time {detection_time_ms} outside [0, {TRIAL_MS}]")
    if not correct:
        return 0.0
    if threat_present:
        return 5.0 - 5.0 * detection_time_ms / TRIAL_MS
    return 5.0


def tracking_score(error_samples, e_max: float = 250.0) -> int:
    """10 minus the index of the RMSE's bin among 10 equal bins over [0, e_max)."""
    errors = np.asarray(error_samples, dtype=float)
    if errors.shape != (TRACKING_SAMPLES,):
        raise SampleCountMismatch(f"expected {TRACKING_SAMPLES} samples, got {errors.size}")
    rmse = math.sqrt(float(np.mean(errors * errors)))
    bin_index = math.floor(rmse / (e_max / 10.0))
    return int(min(10, max(0, 10 - bin_index)))


def _tracking_errors(rng, target_rmse: float) -> np.ndarray:
    raw = rng.standard_normal(TRACKING_SAMPLES)
    return raw * (target_rmse / math.sqrt(float(np.mean(raw * raw))))


def simulate_operator(
    agent_id: str,
    archetype: str,
    params: TrustParams,
    schedule: TrialSchedule,
    behavior: BehaviorConfig | None = None,
    seed=None,
    profile: CharacteristicsProfile | None = None,
) -> AgentRecord:
    behavior = behavior or BehaviorConfig()
    rng = np.random.default_rng(seed)
    rate = behavior.blind_follow_rate[archetype]
    state = TrustState.initial(params)
    reports, behaviors = [], []
    detection = np.empty(len(schedule))
    tracking = np.empty(len(schedule), dtype=int)
    for i, trial in enumerate(schedule.trials):
        state = update_state(state, trial.outcome, params)
        reports.append(sample_trust(state, rng))
        blind = bool(rng.random() < rate)
        if blind:
            correct = trial.detector_correct
            time_ms = rng.uniform(*behavior.blind_time_ms)
            error_level = rng.uniform(*behavior.blind_tracking)
        else:
            correct = bool(rng.random() < behavior.cross_check_accuracy)
            time_ms = rng.uniform(*behavior.cross_check_time_ms)
            error_level = rng.uniform(*behavior.cross_check_tracking)
        behaviors.append("BlindFollow" if blind else "CrossCheck")
        detection[i] = detection_score(correct, trial.threat, time_ms)
        errors = _tracking_errors(rng, error_level * behavior.e_max)
        tracking[i] = tracking_score(errors, behavior.e_max)
    trajectory = TrustTrajectory(agent_id, np.array(reports), schedule.successes)
    return AgentRecord(
        agent_id, archetype, schedule.level, params, schedule, trajectory,
        profile, behaviors, detection, tracking,
    )


def perturb_params(params: TrustParams, rng: np.random.Generator, noise_sd: float) -> TrustParams:
    noise = rng.normal(0.0, noise_sd, size=4) if noise_sd > 0 else np.zeros(4)
    return TrustParams(*(float(v) for v in np.asarray(params.as_tuple()) * np.exp(noise)))


def agent_seed(root_seed: int, index: int) -> np.random.SeedSequence:
    """Per-agent seed, stable under any scheduling order."""
    return np.random.SeedSequence([int(root_seed), int(index)])


def _simulate_one(args):
    index, agent_id, archetype, level, root_seed, noise_sd, behavior = args
    params_rng, schedule_seq, behavior_seq, profile_rng = (
        np.random.default_rng(s) for s in agent_seed(root_seed, index).spawn(4)
    )
    params = perturb_params(TrustParams(*tables.ARCHETYPE_PARAMS[archetype]), params_rng, noise_sd)
    schedule = generate_schedule(level, schedule_seq)
    profile = sample_profile(archetype, profile_rng)
    return simulate_operator(agent_id, archetype, params, schedule, behavior, behavior_seq, profile)


def cohort_plan(sizes: Sequence[int], level_mix: Sequence[int]):
    """(index, agent_id, archetype, level) for each agent, archetypes in blocks, levels round-robin."""
    if len(sizes) != 3 or any(n <= 0 for n in sizes):
        raise ValueError(f"need three positive cohort sizes, got {sizes}")
    if not level_mix:
        raise ValueError("level_mix is empty")
    plan = []
    for archetype, n in zip(tables.ARCHETYPES, sizes):
        for _ in range(n):
            i = len(plan)
            plan.append((i, f"A{i + 1:03d}", archetype, int(level_mix[i % len(level_mix)])))
    return plan


def generate_cohort(
    sizes: Sequence[int] = (91, 25, 14),
    level_mix: Sequence[int] = (62, 64, 66, 68, 70),
    seed: int = 0,
    noise_sd: float = 0.1,
    behavior: BehaviorConfig | None = None,
    map_fn=map,
) -> list[AgentRecord]:
    """Simulate a full cohort; ``map_fn`` may be an ordered parallel map."""
    behavior = behavior or BehaviorConfig()
    jobs = [(i, aid, arch, lvl, seed, noise_sd, behavior) for i, aid, arch, lvl in cohort_plan(sizes, level_mix)]
    return list(map_fn(_simulate_one, jobs))
