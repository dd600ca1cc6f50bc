"""Quality indicators: hypervolume (exact and Monte Carlo), IGD, compliance
rate, Gini dispersion, transit accessibility, and the environmental composite.

All indicator functions are pure.  Hypervolume uses maximization convention
with reference point at the origin of the normalized [0,1]^4 cube.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import CityInstance, GeoIdx, InvalidArgumentError, ObjectiveVector


@dataclass(frozen=True)
class IndicatorReport:
    hypervolume: float
    rcr: float
    igd: float | None = None         # None when no reference front is available
    front_size: int = 0
    transit_access: float | None = None
    env_score: float | None = None
    equity_index: float | None = None


def _as_points(points: Iterable[ObjectiveVector | Sequence[float]]) -> np.ndarray:
    rows = []
    for p in points:
        rows.append(tuple(p) if isinstance(p, ObjectiveVector) else tuple(float(v) for v in p))
    if not rows:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array(rows, dtype=np.float64)


def nondominated_mask(pts: np.ndarray) -> np.ndarray:
    """Boolean mask of points not dominated by any other point (maximization).

    Duplicates are all kept: equal points never dominate each other.
    """
    n = pts.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        ge = np.all(pts >= pts[i], axis=1)
        gt = np.any(pts > pts[i], axis=1)
        dominators = ge & gt
        dominators[i] = False
        if np.any(dominators):
            keep[i] = False
    return keep


def hypervolume_exact(points: Iterable[ObjectiveVector | Sequence[float]],
                      ref: Sequence[float] = (0.0, 0.0, 0.0, 0.0)) -> float:
    """Exact dominated hypervolume via recursive dimension sweep (slicing).

    Points must lie in the unit box above ``ref``; larger is better in every
    coordinate.
    """
    pts = _as_points(points)
    if pts.size and (np.any(pts < np.asarray(ref) - 1e-12) or np.any(pts > 1.0 + 1e-12)):
        raise InvalidArgumentError("hypervolume points must lie in [ref, 1]^d")
    if pts.shape[0] == 0:
        return 0.0
    pts = pts - np.asarray(ref, dtype=np.float64)
    pts = pts[nondominated_mask(pts)]
    return _hv_recursive(pts, pts.shape[1])


def _hv_recursive(pts: np.ndarray, dim: int) -> float:
    if pts.shape[0] == 0:
        return 0.0
    if dim == 1:
        return float(pts[:, 0].max())
    if dim == 2:
        # sweep in descending x, accumulating strips of new y coverage
        order = np.lexsort((-pts[:, 1], -pts[:, 0]))
        vol = 0.0
        best_y = 0.0
        for i in order:
            x, y = pts[i, 0], pts[i, 1]
            if y > best_y:
                vol += x * (y - best_y)
                best_y = y
        return float(vol)
    # slice along the last coordinate: between consecutive levels, the
    # dominated region is the (dim-1)-volume of points at or above the level
    order = np.argsort(-pts[:, dim - 1])
    vol = 0.0
    upper = None
    active: list[np.ndarray] = []
    levels = pts[order, dim - 1]
    for k, i in enumerate(order):
        z = levels[k]
        if upper is not None and z < upper:
            vol += (upper - z) * _hv_recursive(np.array(active), dim - 1)
        active.append(pts[i, :dim - 1])
        upper = z
    vol += upper * _hv_recursive(np.array(active), dim - 1)
    return float(vol)


def hypervolume_mc(points: Iterable[ObjectiveVector | Sequence[float]],
                   ref: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
                   samples: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo hypervolume estimate; returns (estimate, standard error)."""
    if samples <= 0:
        raise InvalidArgumentError("samples must be positive")
    pts = _as_points(points)
    ref_arr = np.asarray(ref, dtype=np.float64)
    d = ref_arr.shape[0]
    if pts.shape[0] == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    box = 1.0 - ref_arr
    # drop dominated points and test the largest boxes first so most samples
    # are classified after one or two comparisons
    pts = pts[nondominated_mask(pts)]
    order = np.argsort(-np.prod(pts - ref_arr, axis=1), kind="stable")
    pts = pts[order]
    hit = 0
    chunk = 1 << 18
    remaining = samples
    while remaining > 0:
        m = min(chunk, remaining)
        sample = ref_arr + rng.random((m, d)) * box
        cols = [np.ascontiguousarray(sample[:, j]) for j in range(d)]
        for p in pts:
            mask = cols[0] <= p[0]
            for j in range(1, d):
                mask &= cols[j] <= p[j]
            keep = ~mask
            cols = [c[keep] for c in cols]
            if cols[0].shape[0] == 0:
                break
        hit += m - cols[0].shape[0]
        remaining -= m
    frac = hit / samples
    volume = float(np.prod(box))
    se = volume * np.sqrt(max(frac * (1 - frac), 0.0) / samples)
    return frac * volume, se


def igd(front: Iterable[ObjectiveVector | Sequence[float]],
        reference_front: Iterable[ObjectiveVector | Sequence[float]]) -> float:
    """Mean distance from each reference point to its nearest front point."""
    f = _as_points(front)
    r = _as_points(reference_front)
    if r.shape[0] == 0:
        raise InvalidArgumentError("reference front must be non-empty")
    if f.shape[0] == 0:
        raise InvalidArgumentError("front must be non-empty")
    dists = np.sqrt(((r[:, None, :] - f[None, :, :]) ** 2).sum(axis=2))
    return float(dists.min(axis=1).mean())


def gini(district_counts: Sequence[int]) -> float:
    """Dispersion of per-district site counts: sum |n_i - n_j| / (2 D^2 nbar)."""
    counts = np.asarray(district_counts, dtype=np.float64)
    if counts.size < 1 or np.any(counts < 0):
        raise InvalidArgumentError("need D >= 1 nonnegative counts")
    total = counts.sum()
    if total == 0:
        raise InvalidArgumentError("all-zero counts have no defined dispersion")
    d = counts.size
    mean = total / d
    diff = np.abs(counts[:, None] - counts[None, :]).sum()
    return float(diff / (2.0 * d * d * mean))


def rcr(feasible_flags: Sequence[bool]) -> float:
    """Fraction of portfolios passing the full compliance check."""
    flags = list(feasible_flags)
    if not flags:
        return 0.0
    return sum(1 for f in flags if f) / len(flags)


def transit_access(city: CityInstance, portfolio: Sequence[int]) -> float:
    """Average walk score of the selected parcels."""
    if not portfolio:
        raise InvalidArgumentError("portfolio must be non-empty")
    arr = city.arrays()
    return float(arr.geo[list(portfolio), GeoIdx.WALK_SCORE].mean())


ENV_WEIGHTS = (0.4, 0.3, 0.2, 0.1)  # carbon, green space, flood avoidance, air


def env_score(city: CityInstance, portfolio: Sequence[int]) -> float:
    """Environmental composite in [0, 100].

    Sub-scores: carbon = 100 * (1 - mean carbon / city max carbon);
    green and air = 100 * mean of the [0,1] features;
    flood = 100 * fraction of non-flood-zone sites.
    """
    if not portfolio:
        raise InvalidArgumentError("portfolio must be non-empty")
    arr = city.arrays()
    ids = list(portfolio)
    carbon_max = float(arr.geo[:, GeoIdx.CARBON].max())
    carbon_sub = 100.0 * (1.0 - arr.geo[ids, GeoIdx.CARBON].mean() / carbon_max) \
        if carbon_max > 0 else 100.0
    green_sub = 100.0 * float(arr.geo[ids, GeoIdx.GREEN_SPACE].mean())
    flood_sub = 100.0 * float(1.0 - arr.geo[ids, GeoIdx.FLOOD_100YR].mean())
    air_sub = 100.0 * float(arr.geo[ids, GeoIdx.AIR_QUALITY].mean())
    w = ENV_WEIGHTS
    return w[0] * carbon_sub + w[1] * green_sub + w[2] * flood_sub + w[3] * air_sub
