import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.cluster import KMeans

from trustdyn.clustering import (
    AmbiguousLabeling,
    LengthMismatch,
    TooFewPoints,
    TrajectoryFeatures,
    best_kmeans,
    cluster_cohort,
    compute_features,
    elbow_select,
    kmeans,
    label_clusters,
    scree,
)
from trustdyn.trust_core import EPS, TrustTrajectory


def test_features_two_point():
    f = compute_features(TrustTrajectory("a", [0.5, 0.5], [True, False]), [0.7, 0.3])
    assert f.rmse == pytest.approx(0.2, abs=1e-12)
    assert f.avg_log_trust == pytest.approx(math.log(0.5), abs=1e-12)


def test_features_perfect_trust():
    t = np.full(10, 1 - EPS)
    f = compute_features(TrustTrajectory("a", t, [True] * 10), t)
    assert f.rmse == 0.0
    assert f.avg_log_trust == pytest.approx(-1e-4, rel=1e-3)


def test_features_length_mismatch():
    with pytest.raises(LengthMismatch):
        compute_features(TrustTrajectory("a", [0.5, 0.5], [True, False]), [0.5])


def test_features_validation():
    with pytest.raises(ValueError):
        TrajectoryFeatures(0.1, 0.1)
    with pytest.raises(ValueError):
        TrajectoryFeatures(-0.1, 1.5)


def test_single_cluster_closed_form():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(20, 2))
    model, labels = kmeans(pts, 1, seed=0)
    np.testing.assert_allclose(model.raw_centroids()[0], pts.mean(axis=0), atol=1e-12)
    z = (pts - pts.mean(axis=0)) / pts.std(axis=0)
    assert model.wcss == pytest.approx(len(pts) * z.var(axis=0).sum(), rel=1e-12)
    assert set(labels) == {0}


def _brute_force_partition(z, k):
    best, best_labels = math.inf, None
    for labels in itertools.product(range(k), repeat=len(z)):
        labels = np.array(labels)
        if len(set(labels)) < k or labels[0] != 0:
            continue
        w = sum(((z[labels == j] - z[labels == j].mean(axis=0)) ** 2).sum() for j in range(k))
        if w < best - 1e-12:
            best, best_labels = w, labels
    return best, best_labels


def _same_partition(a, b):
    return len(set(zip(a, b))) == len(set(a)) == len(set(b))


def test_separated_triples_match_brute_force():
    rng = np.random.default_rng(1)
    pts = np.concatenate([c + 0.05 * rng.normal(size=(3, 2)) for c in ((0, 0), (5, 1), (1, 6))])
    model, labels = best_kmeans(pts, 3, seed=2)
    z = (pts - pts.mean(axis=0)) / pts.std(axis=0)
    w, brute = _brute_force_partition(z, 3)
    assert _same_partition(labels, brute)
    assert model.wcss == pytest.approx(w, rel=1e-9)


def test_duplicates_terminate():
    pts = np.ones((6, 2))
    model, labels = kmeans(pts, 2, seed=0)
    assert model.iterations_run <= 300
    assert model.wcss == 0.0
    assert len(set(labels)) == 2


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        kmeans(np.ones((2, 2)), 3, seed=0)


def test_kmeans_determinism():
    pts = np.random.default_rng(3).normal(size=(40, 2))
    a, la = best_kmeans(pts, 4, seed=5)
    b, lb = best_kmeans(pts, 4, seed=5)
    assert np.array_equal(la, lb)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.wcss == b.wcss


def test_wcss_history_non_increasing():
    pts = np.random.default_rng(4).normal(size=(60, 2))
    model, _ = kmeans(pts, 5, seed=1)
    h = np.array(model.wcss_history)
    assert np.all(np.diff(h) <= 1e-9)


def test_wcss_agrees_with_sklearn():
    rng = np.random.default_rng(6)
    pts = np.concatenate([c + 0.3 * rng.normal(size=(15, 2)) for c in ((0, 0), (4, 0), (0, 4))])
    z = (pts - pts.mean(axis=0)) / pts.std(axis=0)
    ref = KMeans(3, n_init=10, random_state=0).fit(z).inertia_
    assert best_kmeans(pts, 3, seed=0)[0].wcss == pytest.approx(ref, rel=1e-9)


def test_destandardized_centroids_in_bounding_box():
    pts = np.random.default_rng(7).uniform(-3, 1, size=(50, 2))
    model, _ = best_kmeans(pts, 4, seed=0)
    raw = model.raw_centroids()
    assert np.all(raw >= pts.min(axis=0) - 1e-12) and np.all(raw <= pts.max(axis=0) + 1e-12)


def test_elbow_examples():
    assert elbow_select([100, 20, 18, 17, 16]) == 2
    assert elbow_select([10, 8, 6, 4, 2]) == 2
    with pytest.raises(ValueError):
        elbow_select([1, 2, 3])
    with pytest.raises(ValueError):
        elbow_select([5, 4])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 100.0), min_size=3, max_size=10))
def test_elbow_in_interior(drops):
    w = 1000.0 - np.cumsum([0.0] + drops[:-1])
    k = elbow_select(w)
    assert 2 <= k <= len(w) - 1


def test_labels_reference_centroids():
    rows = [(-0.554, 0.057), (-2.099, 0.064), (-0.970, 0.243)]
    assert label_clusters(rows) == ["BDM", "Disbeliever", "Oscillator"]
    for perm in itertools.permutations(range(3)):
        got = label_clusters([rows[i] for i in perm])
        assert got == [["BDM", "Disbeliever", "Oscillator"][i] for i in perm]


def test_labels_rule_application():
    assert label_clusters([(-1, 0.3), (-3, 0.01), (-0.5, 0.02)]) == ["Oscillator", "Disbeliever", "BDM"]


def test_labels_ambiguous():
    with pytest.raises(AmbiguousLabeling):
        label_clusters([(-1, 0.3), (-3, 0.3), (-0.5, 0.02)])
    with pytest.raises(AmbiguousLabeling):
        label_clusters([(-1, 0.3), (-3, 0.01), (-3, 0.02)])
    with pytest.raises(ValueError):
        label_clusters([(-1, 0.3), (-3, 0.01)])


def test_scree_monotone_and_cohort_modes():
    rng = np.random.default_rng(8)
    centers = [(-0.55, 0.05), (-2.1, 0.06), (-0.97, 0.24)]
    feats, levels = [], []
    for i, (c, n) in enumerate(zip(centers, (60, 20, 10))):
        for j in range(n):
            a, r = c[0] + 0.05 * rng.normal(), abs(c[1] + 0.01 * rng.normal())
            feats.append(TrajectoryFeatures(a, r))
            levels.append((62, 66, 70)[j % 3])
    curve = scree(feats, seed=0)
    assert np.all(np.diff(curve) <= 1e-9)
    ids = [f"A{i}" for i in range(len(feats))]
    truth = ["BDM"] * 60 + ["Disbeliever"] * 20 + ["Oscillator"] * 10
    for mode in ("pooled", "per_level"):
        assignments, total, k = cluster_cohort(ids, feats, levels, seed=1, mode=mode)
        assert k == 3
        assert [a.label for a in assignments] == truth
        assert [a.agent_id for a in assignments] == ids
