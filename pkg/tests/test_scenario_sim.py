from collections import Counter

import numpy as np
import pytest
from scipy import stats

from trustdyn import tables
from trustdyn.scenario_sim import (
    BehaviorConfig,
    ReliabilityLevel,
    SampleCountMismatch,
    SdtConfig,
    detection_score,
    generate_cohort,
    generate_schedule,
    normal_cdf,
    sdt_counts,
    sdt_rates,
    simulate_operator,
    tracking_score,
)
from trustdyn.trust_core import TrustParams


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    # 1.6449 is the quantile rounded to 4 places; its CDF is 0.9500048
    assert normal_cdf(1.6448536) == pytest.approx(0.95, abs=1e-6)
    assert normal_cdf(1.6449) == pytest.approx(0.9500048, abs=1e-7)
    for x in np.linspace(-6, 6, 25):
        assert normal_cdf(x) == pytest.approx(stats.norm.cdf(x), abs=1e-15)


def test_sdt_chance():
    assert sdt_rates(SdtConfig(0.0, 0.0)) == (0.5, 0.5)


def test_sdt_counts_residual_against_tabulated_row():
    got = sdt_counts(SdtConfig(-0.20, 1.09, 50, 100))
    # rounded rates 0.772 and 0.365; the tabulated 70% row is (40, 10, 20, 30)
    assert got == (39, 11, 18, 32)
    assert got != tables.SDT_COUNTS[70]


@pytest.mark.parametrize("level", sorted(tables.SDT_COUNTS))
def test_schedule_counts(level):
    hit, miss, fa, cr = tables.SDT_COUNTS[level]
    for seed in range(20):
        counts = Counter(generate_schedule(level, seed).outcome_classes)
        assert counts == Counter({"Hit": hit, "Miss": miss, "FA": fa, "CR": cr})


def test_schedule_determinism():
    a, b = generate_schedule(66, 3), generate_schedule(66, 3)
    assert a.outcome_classes == b.outcome_classes
    c = generate_schedule(66, 4)
    assert a.outcome_classes != c.outcome_classes
    assert sorted(a.outcome_classes) == sorted(c.outcome_classes)


def test_reliability_level_validation():
    with pytest.raises(ValueError):
        ReliabilityLevel.of(65)
    with pytest.raises(ValueError):
        ReliabilityLevel(70, (40, 10, 20, 31))


def test_trial_semantics():
    sched = generate_schedule(62, 0)
    for t in sched.trials:
        assert t.threat == (t.outcome_class in ("Hit", "Miss"))
        assert t.alert == (t.outcome_class in ("Hit", "FA"))
        assert t.detector_correct == (t.outcome_class in ("Hit", "CR"))
    assert sched.successes.sum() == 62


def test_detection_score_branches():
    assert detection_score(False, True, 1234) == 0.0
    assert detection_score(False, False, 0) == 0.0
    assert detection_score(True, True, 5000) == 2.5
    assert detection_score(True, True, 0) == 5.0
    assert detection_score(True, True, 10000) == 0.0
    assert detection_score(True, False, 9000) == 5.0
    with pytest.raises(ValueError):
        detection_score(True, True, 10001)


def test_tracking_score_bins():
    assert tracking_score(np.zeros(200)) == 10
    assert tracking_score(np.full(200, 250.0)) == 0
    assert tracking_score(np.full(200, 400.0)) == 0
    assert tracking_score(np.full(200, 125.0)) == 5
    assert tracking_score(np.full(200, 24.999)) == 10
    assert tracking_score(np.full(200, 25.0)) == 9
    with pytest.raises(SampleCountMismatch):
        tracking_score(np.zeros(199))


def test_disbeliever_mean_log_trust():
    params = TrustParams(*tables.ARCHETYPE_PARAMS["Disbeliever"])
    means = []
    for seed in range(50):
        rec = simulate_operator(f"d{seed}", "Disbeliever", params, generate_schedule(70, seed), seed=1000 + seed)
        means.append(np.log(rec.trajectory.reports).mean())
    assert np.mean(means) == pytest.approx(-2.099, abs=0.4)


def test_full_blind_follow_copies_detector():
    behavior = BehaviorConfig(blind_follow_rate={"BDM": 1.0})
    sched = generate_schedule(64, 1)
    rec = simulate_operator("b", "BDM", TrustParams(*tables.ARCHETYPE_PARAMS["BDM"]), sched, behavior, seed=2)
    assert set(rec.behaviors) == {"BlindFollow"}
    for t, score in zip(sched.trials, rec.detection):
        # blind responses take at most 1200 ms, so a correct one always scores above zero
        assert (score > 0) == t.detector_correct


def test_cohort_sizes_and_noise_free_params():
    records = generate_cohort(noise_sd=0.0, seed=1)
    assert len(records) == 130
    assert Counter(r.archetype for r in records) == {"BDM": 91, "Disbeliever": 25, "Oscillator": 14}
    for r in records:
        assert r.generating_params.as_tuple() == tables.ARCHETYPE_PARAMS[r.archetype]
    assert len({r.agent_id for r in records}) == 130


def test_cohort_determinism():
    a = generate_cohort(sizes=(5, 3, 2), seed=9)
    b = generate_cohort(sizes=(5, 3, 2), seed=9)
    for x, y in zip(a, b):
        assert x.trajectory == y.trajectory
        assert x.behaviors == y.behaviors
        assert np.array_equal(x.detection, y.detection)
        assert dict(x.profile) == dict(y.profile)
    c = generate_cohort(sizes=(5, 3, 2), seed=10)
    assert a[0].trajectory != c[0].trajectory


def test_cohort_levels_round_robin():
    records = generate_cohort(sizes=(5, 3, 2), level_mix=(62, 70), seed=0)
    assert [r.level for r in records] == [62, 70] * 5
    for r in records:
        assert r.schedule.successes.sum() == r.level
