"""Beta-distribution model of trust in an automated aid.

Trust after the i-th trial is a Beta(alpha_i, beta_i) variable whose shape
parameters accumulate experience: every success of the aid adds
``gain_success`` to alpha, every failure adds ``gain_failure`` to beta.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln

EPS = 1e-4


class DetectorOutcome(enum.Enum):
    SUCCESS = 1
    FAILURE = 0

    @classmethod
    def from_class(cls, outcome_class: str) -> "DetectorOutcome":
        """Hit and correct rejection are successes; miss and false alarm are failures."""
        if outcome_class in ("Hit", "CR"):
            return cls.SUCCESS
        if outcome_class in ("Miss", "FA"):
            return cls.FAILURE
        raise ValueError(f"unknown outcome class {outcome_class!r}")


@dataclass(frozen=True)
class TrustParams:
    alpha0: float
    beta0: float
    gain_success: float
    gain_failure: float

    def __post_init__(self):
        values = self.as_tuple()
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite trust parameters {values}")
        if self.alpha0 <= 0 or self.beta0 <= 0:
            raise ValueError("alpha0 and beta0 must be positive")
        if self.gain_success < 0 or self.gain_failure < 0:
            raise ValueError("gains must be non-negative")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha0, self.beta0, self.gain_success, self.gain_failure)

    def scaled(self, c: float) -> "TrustParams":
        return TrustParams(*(c * v for v in self.as_tuple()))


@dataclass(frozen=True)
class TrustState:
    alpha: float
    beta: float
    trial_index: int = 0

    @classmethod
    def initial(cls, params: TrustParams) -> "TrustState":
        return cls(params.alpha0, params.beta0, 0)


@dataclass(frozen=True, eq=False)
class TrustTrajectory:
    """Reported trust per trial, paired with the aid's outcome on that trial.

    ``reports`` are clamped into [EPS, 1 - EPS]; ``outcomes`` is a boolean
    array, True where the aid succeeded.
    """

    agent_id: str
    reports: np.ndarray
    outcomes: np.ndarray
    clamped: int = field(default=0, compare=False)

    def __post_init__(self):
        raw = np.asarray(self.reports, dtype=float)
        outcomes = np.asarray(
            [o is DetectorOutcome.SUCCESS if isinstance(o, DetectorOutcome) else bool(o) for o in self.outcomes],
            dtype=bool,
        )
        if raw.shape != outcomes.shape or raw.ndim != 1:
            raise ValueError(f"reports and outcomes differ in length: {raw.shape} vs {outcomes.shape}")
        reports = clamp_trust(raw)
        object.__setattr__(self, "clamped", int(np.count_nonzero(reports != raw)))
        reports.setflags(write=False)
        outcomes.setflags(write=False)
        object.__setattr__(self, "reports", reports)
        object.__setattr__(self, "outcomes", outcomes)

    def __len__(self) -> int:
        return len(self.reports)

    def __eq__(self, other):
        if not isinstance(other, TrustTrajectory):
            return NotImplemented
        return (
            self.agent_id == other.agent_id
            and np.array_equal(self.reports, other.reports)
            and np.array_equal(self.outcomes, other.outcomes)
        )

    def head(self, n: int) -> "TrustTrajectory":
        return TrustTrajectory(self.agent_id, self.reports[:n], self.outcomes[:n])


def clamp_trust(values, eps: float = EPS):
    return np.clip(values, eps, 1.0 - eps)


def update_state(state: TrustState, outcome: DetectorOutcome, params: TrustParams) -> TrustState:
    if outcome is DetectorOutcome.SUCCESS:
        return TrustState(state.alpha + params.gain_success, state.beta, state.trial_index + 1)
    return TrustState(state.alpha, state.beta + params.gain_failure, state.trial_index + 1)


def predict(state: TrustState) -> float:
    """Expected trust, alpha / (alpha + beta)."""
    return state.alpha / (state.alpha + state.beta)


def state_after(params: TrustParams, n_success: int, n_failure: int) -> TrustState:
    if n_success < 0 or n_failure < 0:
        raise ValueError("counts must be non-negative")
    return TrustState(
        params.alpha0 + n_success * params.gain_success,
        params.beta0 + n_failure * params.gain_failure,
        n_success + n_failure,
    )


def beta_log_density(t: float, alpha: float, beta: float) -> float:
    if not 0.0 < t < 1.0:
        raise ValueError(f"t={t} outside (0, 1)")
    if alpha <= 0 or beta <= 0:
        raise ValueError(f"shape parameters must be positive, got ({alpha}, {beta})")
    log_b = math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)
    return (alpha - 1.0) * math.log(t) + (beta - 1.0) * math.log1p(-t) - log_b


def sample_trust(state: TrustState, rng: np.random.Generator) -> float:
    return float(rng.beta(state.alpha, state.beta))


def shape_paths(params, outcomes) -> tuple[np.ndarray, np.ndarray]:
    """alpha_i and beta_i after each trial of an outcome sequence."""
    a0, b0, ws, wf = params.as_tuple() if isinstance(params, TrustParams) else params
    outcomes = np.asarray(outcomes, dtype=bool)
    n_success = np.cumsum(outcomes)
    n_failure = np.arange(1, len(outcomes) + 1) - n_success
    return a0 + ws * n_success, b0 + wf * n_failure


def predicted_means(params, outcomes) -> np.ndarray:
    """Expected trust after each trial, the closed-form count expression."""
    alpha, beta = shape_paths(params, outcomes)
    return alpha / (alpha + beta)


def log_likelihood(params, reports, outcomes) -> float:
    """Sum of Beta log-densities of the reports along the outcome path."""
    alpha, beta = shape_paths(params, outcomes)
    reports = np.asarray(reports, dtype=float)
    terms = (alpha - 1.0) * np.log(reports) + (beta - 1.0) * np.log1p(-reports) - betaln(alpha, beta)
    return float(terms.sum())
