"""Group comparisons across archetypes: ANOVA, Bonferroni post-hoc, chi-squared."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import tables
from .special import chi2_sf, f_sf, t_two_sided


class DegenerateMargins(ValueError):
    pass


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float
    zero_within_variance: bool = False


@dataclass(frozen=True)
class PairwiseResult:
    t_stat: np.ndarray
    raw_p: np.ndarray
    adjusted_p: np.ndarray
    n_pairs: int


@dataclass(frozen=True)
class ContingencyResult:
    chi2: float
    df: int
    p_value: float


def _check_groups(groups) -> list[np.ndarray]:
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least two groups")
    if any(len(a) < 2 for a in arrays):
        raise ValueError("every group needs at least two observations")
    return arrays


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """F = MS_between / MS_within with its F-distribution tail probability.

    Zero pooled within-group variance is flagged rather than raised: F is
    infinite (p = 0) when the means differ and 0 (p = 1) when they do not.
    """
    arrays = _check_groups(groups)
    n = sum(len(a) for a in arrays)
    k = len(arrays)
    grand = np.concatenate(arrays).mean()
    ss_between = float(sum(len(a) * (a.mean() - grand) ** 2 for a in arrays))
    ss_within = float(sum(((a - a.mean()) ** 2).sum() for a in arrays))
    df_b, df_w = k - 1, n - k
    if ss_within <= 0.0:
        if ss_between > 0.0:
            return AnovaResult(math.inf, df_b, df_w, 0.0, True)
        return AnovaResult(0.0, df_b, df_w, 1.0, True)
    f = (ss_between / df_b) / (ss_within / df_w)
    return AnovaResult(f, df_b, df_w, f_sf(f, df_b, df_w))


def pooled_t(a, b) -> tuple[float, int]:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    df = len(a) + len(b) - 2
    sp2 = (((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum()) / df
    diff = a.mean() - b.mean()
    if sp2 <= 0.0:
        return (0.0 if diff == 0 else math.copysign(math.inf, diff)), df
    return float(diff / math.sqrt(sp2 * (1.0 / len(a) + 1.0 / len(b)))), df


def pairwise_bonferroni(groups: Sequence[Sequence[float]]) -> PairwiseResult:
    """Pooled-variance two-sample t-test for every pair, p times the number of pairs (capped at 1)."""
    arrays = _check_groups(groups)
    k = len(arrays)
    n_pairs = k * (k - 1) // 2
    t_stat = np.zeros((k, k))
    raw = np.ones((k, k))
    adjusted = np.ones((k, k))
    for i, j in itertools.combinations(range(k), 2):
        t, df = pooled_t(arrays[i], arrays[j])
        p = t_two_sided(t, df)
        t_stat[i, j], t_stat[j, i] = t, -t
        raw[i, j] = raw[j, i] = p
        adjusted[i, j] = adjusted[j, i] = min(1.0, p * n_pairs)
    return PairwiseResult(t_stat, raw, adjusted, n_pairs)


def chi_squared_independence(table) -> ContingencyResult:
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or obs.shape[0] < 2 or obs.shape[1] < 2:
        raise ValueError(f"need at least a 2x2 table, got shape {obs.shape}")
    if np.any(obs < 0):
        raise ValueError("counts must be non-negative")
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    if np.any(rows <= 0) or np.any(cols <= 0):
        raise DegenerateMargins("every row and column needs a positive total")
    expected = np.outer(rows, cols) / obs.sum()
    chi2 = float(((obs - expected) ** 2 / expected).sum())
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return ContingencyResult(chi2, df, chi2_sf(chi2, df))


@dataclass(frozen=True)
class CellSummary:
    n: int
    mean: float | None
    sd: float | None


def summary_table(
    values: Mapping[str, Mapping[str, float]],
    labels: Mapping[str, str],
    dimensions: Sequence[str] = tables.DIMENSIONS,
    clusters: Sequence[str] = tables.ARCHETYPES,
) -> dict[str, dict[str, CellSummary]]:
    """Per dimension and cluster: count, mean, and sample SD (n - 1).

    An empty cluster has no mean; a single-member cluster has no SD.
    """
    missing = [a for a in values if a not in labels]
    if missing:
        raise ValueError(f"agents without a cluster label: {missing[:5]}")
    out = {}
    for dim in dimensions:
        row = {}
        for c in clusters:
            xs = np.array([values[a][dim] for a in values if labels[a] == c], dtype=float)
            mean = float(xs.mean()) if len(xs) else None
            sd = float(xs.std(ddof=1)) if len(xs) > 1 else None
            row[c] = CellSummary(len(xs), mean, sd)
        out[dim] = row
    return out


def compare_dimension(values_by_cluster: Sequence[Sequence[float]]):
    """ANOVA and post-hoc for one dimension; None where a group is too small."""
    if len(values_by_cluster) < 2 or any(len(v) < 2 for v in values_by_cluster):
        return None, None
    return one_way_anova(values_by_cluster), pairwise_bonferroni(values_by_cluster)
