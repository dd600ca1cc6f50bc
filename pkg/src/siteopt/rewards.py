"""Objective computation for portfolios.

The four objectives (accessibility, environment, negated cost, equity) are
evaluated here and nowhere else: the environment, every baseline, and the
report tooling all call :func:`portfolio_objectives`, so identical portfolios
produce bit-identical objective vectors across methods.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import CityArrays, CityInstance, GeoIdx, ObjectiveVector
from .metrics import gini


@dataclass(frozen=True)
class RewardParams:
    """Coefficients of the objective terms and temporal discounting."""

    beta1: float = 10.0          # job-proximity weight inside accessibility
    beta2: float = 100.0         # green-space weight inside environment
    beta4: float = 0.5           # demographic-diversity weight inside equity
    gamma: float = 0.95
    horizon: int = 10            # years until long-run outcomes are credited
    # per-parcel accessibility weights default to 1 and may be overridden
    accessibility_weights: tuple[float, ...] | None = None

    def weight_for(self, parcel_id: int) -> float:
        if self.accessibility_weights is None:
            return 1.0
        return self.accessibility_weights[parcel_id]


DEFAULT_PARAMS = RewardParams()


def district_counts(arrays: CityArrays, ids: Sequence[int], n_districts: int) -> np.ndarray:
    counts = np.zeros(n_districts, dtype=np.int64)
    for pid in ids:
        counts[arrays.district[pid]] += 1
    return counts


def portfolio_objectives(city: CityInstance, ids: Sequence[int],
                         effective_costs: Sequence[float] | None = None,
                         params: RewardParams = DEFAULT_PARAMS) -> ObjectiveVector:
    """Objective vector of a portfolio, maximization convention everywhere.

    ``effective_costs`` gives per-parcel cost at selection time (base cost
    times the then-current price multiplier); when omitted, base costs at
    multiplier 1 are used, which is the deterministic evaluation every
    baseline shares.
    """
    ids = list(ids)
    arr = city.arrays()
    if not ids:
        return ObjectiveVector(0.0, 0.0, 0.0, 0.0)
    geo = arr.geo[ids]
    w = np.array([params.weight_for(pid) for pid in ids])
    accessibility = float((w * geo[:, GeoIdx.WALK_SCORE]).sum()
                          + params.beta1 * geo[:, GeoIdx.JOB_PROXIMITY].sum())
    environment = float((-geo[:, GeoIdx.CARBON] + params.beta2 * geo[:, GeoIdx.GREEN_SPACE]).sum())
    if effective_costs is None:
        cost = float(arr.base_cost[ids].sum())
    else:
        cost = float(sum(effective_costs))
    counts = district_counts(arr, ids, city.districts)
    diversity = float(arr.minority[ids].mean())
    diversity = min(1.0, max(0.0, diversity))
    equity = (1.0 - gini(counts)) + params.beta4 * diversity
    return ObjectiveVector(accessibility, environment, -cost, equity)


def future_outcome(city: CityInstance, ids: Sequence[int]) -> float:
    """Deterministic long-run outcome oracle for a terminal portfolio.

    Average of green-space share and walk score (rescaled to [0,1]) over the
    selected parcels; empty portfolios score 0.
    """
    ids = list(ids)
    if not ids:
        return 0.0
    arr = city.arrays()
    green = float(arr.geo[ids, GeoIdx.GREEN_SPACE].mean())
    walk = float(arr.geo[ids, GeoIdx.WALK_SCORE].mean()) / 100.0
    return 0.5 * green + 0.5 * walk


def terminal_bonus(city: CityInstance, ids: Sequence[int],
                   params: RewardParams = DEFAULT_PARAMS) -> ObjectiveVector:
    """Discounted long-run bonus credited to environment and equity."""
    v = (params.gamma ** params.horizon) * future_outcome(city, ids)
    return ObjectiveVector(0.0, v, 0.0, v)
