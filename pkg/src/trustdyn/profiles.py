"""Personal-characteristics vectors and their synthetic generator."""

from __future__ import annotations

import functools
import math
from typing import Mapping

import numpy as np
from scipy.optimize import least_squares
from scipy.special import ndtr, ndtri
from scipy.stats import truncnorm

from . import tables


class CharacteristicsProfile(Mapping):
    """Read-only mapping of the 28 survey dimensions, each inside its scale."""

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[str, float]):
        missing = [d for d in tables.DIMENSIONS if d not in values]
        unknown = [d for d in values if d not in tables.CHARACTERISTICS]
        if missing or unknown:
            raise ValueError(f"profile dimensions wrong: missing={missing} unknown={unknown}")
        clean = {}
        for name in tables.DIMENSIONS:
            low, high, _ = tables.CHARACTERISTICS[name]
            v = float(values[name])
            if not low <= v <= high:
                raise ValueError(f"{name}={v} outside its scale [{low}, {high}]")
            clean[name] = v
        self._values = clean

    def __getitem__(self, key):
        return self._values[key]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f"CharacteristicsProfile({self._values!r})"

    def predictive(self) -> tuple[float, ...]:
        return tuple(self._values[d] for d in tables.PREDICTIVE_DIMENSIONS)


@functools.lru_cache(maxsize=None)
def matched_truncnorm(low: float, high: float, mean: float, sd: float) -> tuple[float, float]:
    """Location and scale of the normal whose truncation to [low, high] has the given mean and sd.

    Falls back to the closest attainable moments when the target sd exceeds
    what a truncated normal on the interval can reach.
    """
    width = high - low

    def residual(z):
        loc, scale = z[0], math.exp(z[1])
        a, b = (low - loc) / scale, (high - loc) / scale
        m, v = truncnorm.stats(a, b, loc=loc, scale=scale, moments="mv")
        return [(float(m) - mean) / sd, (math.sqrt(float(v)) - sd) / sd]

    sol = least_squares(
        residual,
        [mean, math.log(sd)],
        bounds=([low - 2 * width, math.log(sd / 10)], [high + 2 * width, math.log(10 * width)]),
        xtol=1e-12,
        ftol=1e-12,
    )
    return float(sol.x[0]), float(math.exp(sol.x[1]))


def sample_profile(archetype: str, rng: np.random.Generator) -> CharacteristicsProfile:
    """One characteristics vector, truncated-normal per dimension by inverse CDF."""
    values = {}
    for name in tables.DIMENSIONS:
        low, high, by_cluster = tables.CHARACTERISTICS[name]
        mean, sd = by_cluster[archetype]
        loc, scale = matched_truncnorm(low, high, mean, sd)
        p_lo, p_hi = ndtr((low - loc) / scale), ndtr((high - loc) / scale)
        u = rng.uniform(p_lo, p_hi)
        values[name] = float(np.clip(loc + scale * ndtri(u), low, high))
    return CharacteristicsProfile(values)
