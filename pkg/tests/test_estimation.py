import math

import numpy as np
import pytest
from scipy import optimize

from trustdyn import tables
from trustdyn.estimation import (
    CohortPrior,
    DegenerateTrajectory,
    InsufficientCohort,
    fit_map,
    fit_mle,
    fit_prior,
    leave_one_out_priors,
    map_replay,
)
from trustdyn.scenario_sim import generate_cohort, generate_schedule
from trustdyn.trust_core import TrustParams, TrustTrajectory, log_likelihood, predict, predicted_means, state_after

BDM = TrustParams(*tables.ARCHETYPE_PARAMS["BDM"])


def noiseless(params, level=70, seed=0, agent="x"):
    outcomes = generate_schedule(level, seed).successes
    return TrustTrajectory(agent, predicted_means(params, outcomes), outcomes)


def test_noiseless_bdm_recovers_mean_trajectory():
    traj = noiseless(BDM)
    fit = fit_mle(traj)
    assert fit.converged and not fit.degenerate
    err = np.abs(predicted_means(fit.params, traj.outcomes) - traj.reports).max()
    assert err <= 0.02


def test_constant_half_alternating():
    outcomes = np.arange(100) % 2 == 0
    fit = fit_mle(TrustTrajectory("c", np.full(100, 0.5), outcomes))
    assert abs(predict(state_after(fit.params, 50, 50)) - 0.5) <= 0.05


def test_mle_is_a_local_optimum_vs_scipy_powell():
    # independent optimizer started from the returned point must not find a better value
    rng = np.random.default_rng(2)
    outcomes = generate_schedule(66, 1).successes
    traj = TrustTrajectory("r", rng.beta(20, 12, size=100), outcomes)
    fit = fit_mle(traj)
    x0 = np.log(fit.params.as_tuple())
    res = optimize.minimize(
        lambda x: -log_likelihood(np.exp(x), traj.reports, traj.outcomes), x0, method="Powell",
        bounds=[(math.log(1e-2), math.log(1e4))] * 2 + [(math.log(1e-3), math.log(1e2))] * 2,
    )
    assert -res.fun <= fit.objective_value + 1e-3


def test_single_trial_is_degenerate():
    with pytest.warns(DegenerateTrajectory):
        fit = fit_mle(TrustTrajectory("one", [0.6], [True]))
    assert fit.degenerate
    assert fit.params.gain_failure == pytest.approx(1e-3)


def test_empty_trajectory_rejected():
    with pytest.raises(ValueError):
        fit_mle(TrustTrajectory("none", [], []))


def test_prior_floor_and_two_point_stats():
    p = TrustParams(2, 3, 1, 1)
    prior = fit_prior([p, p])
    assert prior.log_sd == (1e-3,) * 4
    e2 = math.exp(2)
    prior = fit_prior([TrustParams(1, 1, 1, 1), TrustParams(e2, e2, e2, e2)])
    np.testing.assert_allclose(prior.log_mean, 1.0)
    np.testing.assert_allclose(prior.log_sd, 1.0)


def test_prior_needs_two_members():
    with pytest.raises(InsufficientCohort):
        fit_prior([BDM])


def test_leave_one_out_excludes_self():
    ps = [TrustParams(1, 1, 1, 1), TrustParams(2, 2, 2, 2), TrustParams(4, 4, 4, 4)]
    loo = leave_one_out_priors(ps)
    assert loo[0].log_mean == pytest.approx((math.log(2) * 1.5,) * 4)
    assert all(p.cohort_size == 2 for p in loo)


def test_prior_log_density_matches_scipy():
    from scipy import stats

    prior = CohortPrior((0.1, 0.2, -1.0, 0.5), (0.3, 1.0, 2.0, 0.7), 10)
    x = np.array([0.0, 1.0, -2.0, 0.1])
    expected = sum(stats.norm.logpdf(x[i], prior.log_mean[i], prior.log_sd[i]) for i in range(4))
    assert prior.log_density(x) == pytest.approx(expected, rel=1e-12)


def test_map_without_data_is_prior_mode():
    prior = CohortPrior((5.0, 4.5, 0.3, -0.2), (0.5, 0.5, 0.5, 0.5), 20)
    fit = fit_map(noiseless(BDM), prior, n_observed=0)
    assert fit.degenerate
    np.testing.assert_allclose(fit.params.as_tuple(), prior.mode.as_tuple(), rtol=1e-4)


def test_diffuse_prior_approaches_mle():
    rng = np.random.default_rng(11)
    traj = TrustTrajectory("d", rng.beta(30, 15, size=100), generate_schedule(68, 4).successes)
    mle = fit_mle(traj)
    prior = CohortPrior(tuple(np.log(mle.params.as_tuple())), (10.0,) * 4, 50)
    got = fit_map(traj, prior)
    assert abs(log_likelihood(got.params, traj.reports, traj.outcomes) - mle.objective_value) <= 1e-3


def test_tight_prior_dominates():
    prior = CohortPrior(tuple(np.log(BDM.as_tuple())), (0.01,) * 4, 50)
    # reports drawn from the prior-mode model itself
    outcomes = [True, False, True, True, False]
    alpha, beta = BDM.alpha0, BDM.beta0
    reports = []
    rng = np.random.default_rng(8)
    for o in outcomes:
        alpha, beta = (alpha + BDM.gain_success, beta) if o else (alpha, beta + BDM.gain_failure)
        reports.append(rng.beta(alpha, beta))
    traj = TrustTrajectory("t", reports, outcomes)
    got = fit_map(traj, prior, n_observed=5)
    np.testing.assert_allclose(got.params.as_tuple(), BDM.as_tuple(), rtol=0.05)


def test_map_replay_first_prediction_uses_prior_mode():
    prior = CohortPrior(tuple(np.log(BDM.as_tuple())), (0.3,) * 4, 50)
    traj = noiseless(BDM).head(12)
    preds, final = map_replay(traj, prior)
    first = state_after(prior.mode, int(traj.outcomes[0]), 1 - int(traj.outcomes[0]))
    assert preds[0] == pytest.approx(predict(first), abs=1e-4)
    assert len(preds) == 12
    assert final.converged


def test_cohort_prior_means_near_generating():
    records = generate_cohort(seed=5)
    gen = np.log(np.array([r.generating_params.as_tuple() for r in records]))
    fits = [fit_mle(r.trajectory).params for r in records[:129]]
    prior = fit_prior(fits)
    diff = np.abs(np.array(prior.log_mean) - gen[:129].mean(axis=0))
    assert np.all(diff <= 0.2), diff
