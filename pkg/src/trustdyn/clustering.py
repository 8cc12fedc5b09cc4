"""Trajectory features, seeded k-means with an elbow scan, archetype labels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .trust_core import TrustTrajectory

K_MAX = 8
MAX_ITER = 300
TIE_TOL = 1e-12


class LengthMismatch(ValueError):
    pass


class TooFewPoints(ValueError):
    pass


class AmbiguousLabeling(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryFeatures:
    avg_log_trust: float
    rmse: float

    def __post_init__(self):
        if self.avg_log_trust > 0:
            raise ValueError(f"avg_log_trust must be <= 0, got {self.avg_log_trust}")
        if not 0.0 <= self.rmse <= 1.0:
            raise ValueError(f"rmse must lie in [0, 1], got {self.rmse}")


@dataclass(frozen=True)
class ClusterAssignment:
    agent_id: str
    label: str
    features: TrajectoryFeatures
    centroid_distance: float


@dataclass(frozen=True, eq=False)
class KMeansModel:
    k: int
    centroids: np.ndarray  # standardized space
    wcss: float
    iterations_run: int
    seed: int
    center: np.ndarray
    scale: np.ndarray
    wcss_history: tuple[float, ...] = ()

    def raw_centroids(self) -> np.ndarray:
        return self.centroids * self.scale + self.center

    def standardize(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.center) / self.scale


def compute_features(trajectory: TrustTrajectory, predictions) -> TrajectoryFeatures:
    t = np.asarray(trajectory.reports, dtype=float)
    t_hat = np.asarray(predictions, dtype=float)
    if t.shape != t_hat.shape:
        raise LengthMismatch(f"{len(t)} reports vs {len(t_hat)} predictions")
    return TrajectoryFeatures(
        avg_log_trust=float(np.mean(np.log(t))),
        rmse=float(math.sqrt(np.mean((t - t_hat) ** 2))),
    )


def _as_array(points) -> np.ndarray:
    rows = [(p.avg_log_trust, p.rmse) if isinstance(p, TrajectoryFeatures) else p for p in points]
    return np.atleast_2d(np.asarray(rows, dtype=float))


def standardization(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    center = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return center, scale


def _sq_dists(z, centroids):
    return ((z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _plus_plus(z, k, rng):
    centroids = [z[rng.integers(len(z))]]
    for _ in range(1, k):
        d2 = _sq_dists(z, np.array(centroids)).min(axis=1)
        total = d2.sum()
        if total <= 0:
            centroids.append(z[rng.integers(len(z))])
        else:
            centroids.append(z[rng.choice(len(z), p=d2 / total)])
    return np.array(centroids)


def kmeans(points, k: int, seed: int):
    """One k-means run on z-scored features: k-means++ seeding then Lloyd updates.

    Returns (model, assignments). An emptied cluster is reseeded with the
    point farthest from its current centroid.
    """
    x = _as_array(points)
    if k < 1 or len(x) < k:
        raise TooFewPoints(f"need at least k={k} points, got {len(x)}")
    center, scale = standardization(x)
    z = (x - center) / scale
    rng = np.random.default_rng(seed)
    centroids = _plus_plus(z, k, rng)
    labels = _sq_dists(z, centroids).argmin(axis=1)
    history = []
    iterations = 0
    for iterations in range(1, MAX_ITER + 1):
        for j in range(k):
            members = z[labels == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
        history.append(float(_sq_dists(z, centroids)[np.arange(len(z)), labels].sum()))
        new_labels = _sq_dists(z, centroids).argmin(axis=1)
        for j in range(k):
            if not np.any(new_labels == j):
                d = _sq_dists(z, centroids)[np.arange(len(z)), new_labels]
                far = int(np.argmax(d))
                centroids[j] = z[far]
                new_labels[far] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    d = _sq_dists(z, centroids)[np.arange(len(z)), labels]
    wcss = float(d.sum())
    history.append(wcss)
    model = KMeansModel(k, centroids.copy(), wcss, iterations, seed, center, scale, tuple(history))
    return model, labels


def best_kmeans(points, k: int, seed: int, n_init: int = 10):
    """Lowest-WCSS run among ``n_init`` seeds derived from ``seed``."""
    best = None
    for s in np.random.SeedSequence(seed).generate_state(n_init):
        model, labels = kmeans(points, k, int(s))
        if best is None or model.wcss < best[0].wcss - 1e-12:
            best = (model, labels)
    return best


def scree(points, seed: int, k_max: int = K_MAX, n_init: int = 10, max_retries: int = 5) -> list[float]:
    """WCSS for k = 1..k_max, rerunning any k that fails to improve on k-1."""
    k_max = min(k_max, len(_as_array(points)))
    wcss = []
    for k in range(1, k_max + 1):
        value = best_kmeans(points, k, seed + 1000 * k, n_init)[0].wcss
        retry = 0
        while wcss and value > wcss[-1] + 1e-12 and retry < max_retries:
            retry += 1
            value = min(value, best_kmeans(points, k, seed + 1000 * k + retry, 2 * n_init)[0].wcss)
        wcss.append(value)
    return wcss


def elbow_select(wcss_by_k: Sequence[float]) -> int:
    """k whose point lies farthest below the chord from the first to the last k.

    Ties, including a perfectly straight curve, go to the smallest interior k.
    """
    w = np.asarray(wcss_by_k, dtype=float)
    if len(w) < 3:
        raise ValueError("elbow selection needs WCSS for at least k = 1..3")
    if np.any(np.diff(w) > 1e-9 * max(1.0, abs(w[0]))):
        raise ValueError(f"WCSS must be non-increasing in k: {list(w)}")
    k = np.arange(1, len(w) + 1, dtype=float)
    dk, dw = k[-1] - k[0], w[-1] - w[0]
    chord = w[0] + dw * (k - k[0]) / dk
    # perpendicular distance, signed positive below the chord
    dist = (chord - w) * dk / math.hypot(dk, dw)
    interior = dist[1:-1]
    best = interior.max()
    tol = TIE_TOL * max(1.0, abs(w[0]))
    return int(np.flatnonzero(interior >= best - tol)[0]) + 2


def label_clusters(centroids) -> list[str]:
    """Archetype label for each of three centroids given as (avg_log_trust, rmse).

    Highest RMSE is the oscillator; of the rest, lower average log trust is
    the disbeliever.
    """
    if isinstance(centroids, KMeansModel):
        centroids = centroids.raw_centroids()
    c = np.asarray(centroids, dtype=float)
    if c.shape != (3, 2):
        raise ValueError(f"labeling needs exactly three 2-d centroids, got shape {c.shape}")
    order = np.argsort(-c[:, 1], kind="stable")
    if abs(c[order[0], 1] - c[order[1], 1]) <= TIE_TOL:
        raise AmbiguousLabeling("two centroids tie on rmse")
    osc, rest = order[0], order[1:]
    if abs(c[rest[0], 0] - c[rest[1], 0]) <= TIE_TOL:
        raise AmbiguousLabeling("two centroids tie on average log trust")
    dis = rest[0] if c[rest[0], 0] < c[rest[1], 0] else rest[1]
    labels = ["BDM"] * 3
    labels[osc] = "Oscillator"
    labels[dis] = "Disbeliever"
    return labels


def assign_archetypes(
    agent_ids: Sequence[str],
    features: Sequence[TrajectoryFeatures],
    seed: int,
    n_init: int = 10,
) -> tuple[list[ClusterAssignment], KMeansModel]:
    """Three-cluster k-means on one group of agents, labeled by archetype."""
    model, labels = best_kmeans(features, 3, seed, n_init)
    names = label_clusters(model)
    z = model.standardize(_as_array(features))
    out = []
    for aid, f, zi, j in zip(agent_ids, features, z, labels):
        dist = float(np.sqrt(((zi - model.centroids[j]) ** 2).sum()))
        out.append(ClusterAssignment(aid, names[j], f, dist))
    return out, model


def cluster_cohort(
    agent_ids: Sequence[str],
    features: Sequence[TrajectoryFeatures],
    levels: Sequence[int],
    seed: int,
    mode: str = "per_level",
    k_max: int = K_MAX,
    n_init: int = 10,
):
    """Scree curve, elbow k, and archetype labels for a whole cohort.

    ``per_level`` sums WCSS across reliability levels for the scree curve and
    clusters each level separately; ``pooled`` treats all agents as one group.
    Returns (assignments in input order, scree list, elbow k).
    """
    if mode == "pooled":
        groups = {None: list(range(len(agent_ids)))}
    elif mode == "per_level":
        groups = {}
        for i, lvl in enumerate(levels):
            groups.setdefault(lvl, []).append(i)
    else:
        raise ValueError(f"unknown clustering mode {mode!r}")

    total = None
    for g, (key, idx) in enumerate(sorted(groups.items(), key=lambda kv: (kv[0] is None, kv[0]))):
        pts = [features[i] for i in idx]
        curve = scree(pts, seed + 7919 * g, min(k_max, len(pts)), n_init)
        curve = curve + [curve[-1]] * (k_max - len(curve))
        total = curve if total is None else [a + b for a, b in zip(total, curve)]
    k = elbow_select(total)

    assignments: list[ClusterAssignment | None] = [None] * len(agent_ids)
    for g, (key, idx) in enumerate(sorted(groups.items(), key=lambda kv: (kv[0] is None, kv[0]))):
        got, _ = assign_archetypes([agent_ids[i] for i in idx], [features[i] for i in idx], seed + 7919 * g, n_init)
        for i, a in zip(idx, got):
            assignments[i] = a
    return assignments, total, k
