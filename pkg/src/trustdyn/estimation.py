"""Per-agent parameter fitting: MLE for cohort members, MAP for a new agent.

Optimization runs in log-parameter space with a bounded Nelder-Mead simplex,
started from the best points of a fixed 3^4 lattice (plus the prior mode
when there is one).
"""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import betaln

from .trust_core import TrustParams, TrustTrajectory, predict, state_after

LOWER = np.array([1e-2, 1e-2, 1e-3, 1e-3])
UPPER = np.array([1e4, 1e4, 1e2, 1e2])
LOG_LOWER = np.log(LOWER)
LOG_UPPER = np.log(UPPER)

# Three starting values per parameter, log-spaced inside the bounds.
LATTICE_AXES = (
    (2.0, 40.0, 800.0),
    (2.0, 40.0, 800.0),
    (0.03, 0.5, 8.0),
    (0.03, 0.5, 8.0),
)
LATTICE = np.log(np.array(list(itertools.product(*LATTICE_AXES))))

SD_FLOOR = 1e-3
MAX_ITER = 2000
F_TOL = 1e-6
X_TOL = 1e-5
_LOG_2PI = math.log(2.0 * math.pi)


class DegenerateTrajectory(UserWarning):
    """Outcome history is one-sided, so one gain cannot be identified."""


class NonConvergence(RuntimeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InsufficientCohort(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    params: TrustParams
    objective_value: float
    n_restarts_used: int
    converged: bool
    degenerate: bool = False


@dataclass(frozen=True)
class CohortPrior:
    """Independent Gaussians on the log of each parameter."""

    log_mean: tuple[float, float, float, float]
    log_sd: tuple[float, float, float, float]
    cohort_size: int

    def __post_init__(self):
        if self.cohort_size < 2:
            raise InsufficientCohort("a cohort prior needs at least 2 members")
        if any(sd <= 0 for sd in self.log_sd):
            raise ValueError("prior log-sd must be positive")

    @property
    def mode(self) -> TrustParams:
        return TrustParams(*np.exp(self.log_mean))

    def log_density(self, log_theta) -> float:
        z = (np.asarray(log_theta) - self._mu) / self._sd
        return float(self._const - 0.5 * np.dot(z, z))

    @functools.cached_property
    def _mu(self):
        return np.array(self.log_mean)

    @functools.cached_property
    def _sd(self):
        return np.array(self.log_sd)

    @functools.cached_property
    def _const(self):
        return -float(np.sum(np.log(self._sd))) - 2.0 * _LOG_2PI


class _LogLikelihood:
    """Vectorized log-likelihood of a report sequence as a function of log(theta)."""

    def __init__(self, reports, outcomes):
        reports = np.asarray(reports, dtype=float)
        outcomes = np.asarray(outcomes, dtype=bool)
        self.n = len(reports)
        self.log_t = np.log(reports)
        self.log_1mt = np.log1p(-reports)
        self.n_success = np.cumsum(outcomes).astype(float)
        self.n_failure = np.arange(1, self.n + 1) - self.n_success

    def __call__(self, x) -> float:
        if self.n == 0:
            return 0.0
        a0, b0, ws, wf = np.exp(x)
        alpha = a0 + ws * self.n_success
        beta = b0 + wf * self.n_failure
        return float(np.sum((alpha - 1.0) * self.log_t + (beta - 1.0) * self.log_1mt - betaln(alpha, beta)))


def _simplex(x0, free, step):
    """Axis-aligned initial simplex around x0, stepping inward at the bounds."""
    x0 = x0[free]
    lo, hi = LOG_LOWER[free], LOG_UPPER[free]
    pts = [x0]
    for j in range(len(x0)):
        p = x0.copy()
        p[j] = p[j] + step if p[j] + step <= hi[j] else p[j] - step
        p[j] = min(max(p[j], lo[j]), hi[j])
        pts.append(p)
    return np.array(pts)


def _maximize(objective, starts, pinned: dict[int, float], n_polish: int, step: float, xatol: float = X_TOL):
    """Screen ``starts``, polish the best ``n_polish`` with Nelder-Mead.

    Returns (best log-theta, best value, number of polished runs, any converged).
    """
    free = np.array([j not in pinned for j in range(4)])

    def full(z):
        x = np.empty(4)
        x[free] = z
        for j, v in pinned.items():
            x[j] = v
        return x

    starts = np.clip(np.atleast_2d(np.asarray(starts, dtype=float)), LOG_LOWER, LOG_UPPER)
    for j, v in pinned.items():
        starts[:, j] = v
    values = np.array([objective(s) for s in starts])
    best_x, best_f = starts[0].copy(), -np.inf
    for s, f in zip(starts, values):
        if f > best_f:
            best_x, best_f = s.copy(), f

    order = np.argsort(-values, kind="stable")
    seen: list[np.ndarray] = []
    chosen = []
    for i in order:
        if any(np.array_equal(starts[i], s) for s in seen):
            continue
        seen.append(starts[i])
        chosen.append(starts[i])
        if len(chosen) == n_polish:
            break

    bounds = list(zip(LOG_LOWER[free], LOG_UPPER[free]))
    converged = False
    for x0 in chosen:
        res = minimize(
            lambda z: -objective(full(z)),
            x0[free],
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "maxiter": MAX_ITER,
                "fatol": F_TOL,
                "xatol": xatol,
                "initial_simplex": _simplex(x0, free, step),
            },
        )
        converged = converged or bool(res.success)
        f = -float(res.fun)
        if f > best_f:
            best_x, best_f = full(res.x), f
    return best_x, best_f, len(chosen), converged


def _pinned_gains(outcomes) -> dict[int, float]:
    outcomes = np.asarray(outcomes, dtype=bool)
    pinned = {}
    if not outcomes.any():
        pinned[2] = LOG_LOWER[2]
    if outcomes.all():
        pinned[3] = LOG_LOWER[3]
    return pinned


def _to_params(x) -> TrustParams:
    return TrustParams(*(float(v) for v in np.clip(np.exp(x), LOWER, UPPER)))


def fit_mle(trajectory: TrustTrajectory, n_polish: int = 3, step: float = 0.5) -> FitResult:
    """Maximum-likelihood parameters for one fully observed trajectory.

    A one-sided outcome history pins the unidentifiable gain at its lower
    bound and emits :class:`DegenerateTrajectory`.
    """
    if len(trajectory) == 0:
        raise ValueError("cannot fit an empty trajectory")
    pinned = _pinned_gains(trajectory.outcomes)
    if pinned:
        warnings.warn(
            f"agent {trajectory.agent_id}: one-sided outcome history, gain pinned at lower bound",
            DegenerateTrajectory,
            stacklevel=2,
        )
    loglik = _LogLikelihood(trajectory.reports, trajectory.outcomes)
    x, f, used, converged = _maximize(loglik, LATTICE, pinned, n_polish, step)
    result = FitResult(_to_params(x), f, used, converged, degenerate=bool(pinned))
    if not converged:
        raise NonConvergence(f"agent {trajectory.agent_id}: no restart converged", result)
    return result


def fit_prior(cohort_params: Sequence[TrustParams]) -> CohortPrior:
    if len(cohort_params) < 2:
        raise InsufficientCohort(f"need at least 2 cohort members, got {len(cohort_params)}")
    logs = np.log(np.array([p.as_tuple() for p in cohort_params]))
    mean = logs.mean(axis=0)
    sd = np.maximum(logs.std(axis=0, ddof=0), SD_FLOOR)
    return CohortPrior(tuple(float(v) for v in mean), tuple(float(v) for v in sd), len(cohort_params))


def leave_one_out_priors(cohort_params: Sequence[TrustParams]) -> list[CohortPrior]:
    """Prior for each member built from every other member."""
    return [fit_prior([p for j, p in enumerate(cohort_params) if j != i]) for i in range(len(cohort_params))]


def fit_map(
    trajectory: TrustTrajectory,
    prior: CohortPrior,
    n_observed: int | None = None,
    start: TrustParams | None = None,
    n_polish: int = 3,
    step: float = 0.5,
    use_lattice: bool = True,
    xatol: float = X_TOL,
) -> FitResult:
    """Posterior mode of theta given the first ``n_observed`` reports.

    With ``start`` and ``use_lattice=False`` this becomes a cheap warm-started
    refinement, which is how :func:`map_replay` advances trial by trial.
    """
    n = len(trajectory) if n_observed is None else n_observed
    if not 0 <= n <= len(trajectory):
        raise ValueError(f"n_observed={n} outside [0, {len(trajectory)}]")
    outcomes = trajectory.outcomes[:n]
    degenerate = n == 0 or bool(_pinned_gains(outcomes))
    loglik = _LogLikelihood(trajectory.reports[:n], outcomes)

    def objective(x):
        return loglik(x) + prior.log_density(x)

    starts = [np.array(prior.log_mean)]
    if start is not None:
        starts.insert(0, np.log(start.as_tuple()))
    if use_lattice:
        starts.extend(LATTICE)
    x, f, used, converged = _maximize(objective, np.array(starts), {}, n_polish, step, xatol)
    result = FitResult(_to_params(x), f, used, converged, degenerate=degenerate)
    if not converged:
        raise NonConvergence(f"agent {trajectory.agent_id}: no restart converged", result)
    return result


def map_replay(trajectory: TrustTrajectory, prior: CohortPrior, step: float = 0.1, xatol: float = 1e-4):
    """Online personalization over the whole trajectory.

    Before trial m the parameters are refit on reports 1..m-1 and the model
    predicts trust after trial m. Returns (predictions, final FitResult).
    """
    n = len(trajectory)
    predictions = np.empty(n)
    n_success = np.cumsum(trajectory.outcomes)
    fit = None
    for m in range(1, n + 1):
        start = None if fit is None else fit.params
        fit = fit_map(trajectory, prior, n_observed=m - 1, start=start, n_polish=1, step=step, use_lattice=False, xatol=xatol)
        s = int(n_success[m - 1])
        predictions[m - 1] = predict(state_after(fit.params, s, m - s))
    return predictions, fit
