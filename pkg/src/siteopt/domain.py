"""Shared vocabulary types for the site-selection toolkit.

Everything downstream (generator, constraint engine, environment, optimizers,
metrics, service) speaks in these types.  All four objectives are stored in
maximization convention: cost and environmental burden enter negated exactly
once, at reward computation, so a single dominance relation works everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

# Feature vector widths.  These are fixed by the data model and checked on
# construction; serialized files that disagree are rejected.
GEO_DIM = 47
REG_DIM = 127
DYN_DIM = 23
N_OBJECTIVES = 4

OBJECTIVE_NAMES = ("accessibility", "environment", "neg_cost", "equity")


class GeoIdx:
    """Named positions inside the geospatial feature vector."""

    WALK_SCORE = 0        # [0, 100]
    JOB_PROXIMITY = 1     # [0, 1]
    CARBON = 2            # tCO2e, >= 0
    GREEN_SPACE = 3       # [0, 1]
    LAND_COST = 4         # USD
    CONSTRUCTION_COST = 5  # USD
    FLOOD_100YR = 6       # 0/1
    COORD_X = 7           # km
    COORD_Y = 8           # km
    AIR_QUALITY = 9       # [0, 1], larger is cleaner
    # indices 10..46 are auxiliary synthetic features


class RegIdx:
    """Named positions inside the 127-bit regulatory vector."""

    QCT = 0
    DDA = 1
    ZONING_CATEGORY = 2      # one-hot block, 10 bits (R1..R10)
    ZONING_PERMIT = 12       # permit block, 10 bits, aligned with category
    FLOOD_MITIGATION = 22
    REQUIRED_BASE = 25       # bits 25..126 are blanket per-parcel requirements
    N_ZONING = 10


class DynIdx:
    """Named positions inside the dynamic feature vector."""

    PRICE_MULTIPLIER = 0
    PERMIT_RATE = 1
    SENTIMENT = 2
    # indices 3..22 are auxiliary synthetic features


class InvalidArgumentError(ValueError):
    """Raised when an operation receives arguments outside its contract."""


@dataclass(frozen=True)
class Parcel:
    """One candidate land unit."""

    id: int
    district_id: int
    geo: tuple[float, ...]        # GEO_DIM entries
    reg: tuple[int, ...]          # REG_DIM bits
    dyn: tuple[float, ...]        # DYN_DIM entries
    minority_tract: bool
    low_income_tract: bool

    def __post_init__(self) -> None:
        if len(self.geo) != GEO_DIM:
            raise InvalidArgumentError(f"geo must have {GEO_DIM} entries, got {len(self.geo)}")
        if len(self.reg) != REG_DIM:
            raise InvalidArgumentError(f"reg must have {REG_DIM} bits, got {len(self.reg)}")
        if len(self.dyn) != DYN_DIM:
            raise InvalidArgumentError(f"dyn must have {DYN_DIM} entries, got {len(self.dyn)}")
        if self.district_id < 0:
            raise InvalidArgumentError("district_id must be >= 0")
        walk = self.geo[GeoIdx.WALK_SCORE]
        if not 0.0 <= walk <= 100.0:
            raise InvalidArgumentError(f"walk_score {walk} outside [0, 100]")
        for idx in (GeoIdx.CARBON, GeoIdx.LAND_COST, GeoIdx.CONSTRUCTION_COST):
            if self.geo[idx] < 0.0:
                raise InvalidArgumentError(f"geo[{idx}] must be >= 0")
        if any(b not in (0, 1) for b in self.reg):
            raise InvalidArgumentError("reg entries must be 0/1")

    @property
    def walk_score(self) -> float:
        return self.geo[GeoIdx.WALK_SCORE]

    @property
    def base_cost(self) -> float:
        return self.geo[GeoIdx.LAND_COST] + self.geo[GeoIdx.CONSTRUCTION_COST]

    @property
    def zoning_category(self) -> int:
        block = self.reg[RegIdx.ZONING_CATEGORY:RegIdx.ZONING_CATEGORY + RegIdx.N_ZONING]
        return block.index(1) if 1 in block else 0


@dataclass(frozen=True)
class ObjectiveVector:
    """4-component objective value; every component is larger-is-better."""

    accessibility: float
    environment: float
    neg_cost: float
    equity: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self):
            raise InvalidArgumentError(f"objective components must be finite: {tuple(self)}")

    def __iter__(self) -> Iterator[float]:
        yield self.accessibility
        yield self.environment
        yield self.neg_cost
        yield self.equity

    def as_array(self) -> np.ndarray:
        return np.array(tuple(self), dtype=np.float64)

    @staticmethod
    def from_array(arr: Sequence[float]) -> "ObjectiveVector":
        a, e, c, q = (float(v) for v in arr)
        return ObjectiveVector(a, e, c, q)

    def __add__(self, other: "ObjectiveVector") -> "ObjectiveVector":
        return ObjectiveVector.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "ObjectiveVector") -> "ObjectiveVector":
        return ObjectiveVector.from_array(self.as_array() - other.as_array())


@dataclass(frozen=True)
class PreferenceVector:
    """Nonnegative weights over the four objectives, summing to 1."""

    weights: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if any(w < 0 for w in self.weights):
            raise InvalidArgumentError("preference weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise InvalidArgumentError(f"preference weights must sum to 1, got {sum(self.weights)}")

    def as_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=np.float64)

    @staticmethod
    def normalized(raw: Sequence[float]) -> "PreferenceVector":
        arr = np.asarray(raw, dtype=np.float64)
        if arr.shape != (4,) or np.any(arr < 0) or arr.sum() <= 0:
            raise InvalidArgumentError("need 4 nonnegative weights with a positive sum")
        arr = arr / arr.sum()
        return PreferenceVector(tuple(float(v) for v in arr))


@dataclass(frozen=True)
class ObjectiveBounds:
    """Per-objective (min, max) used for affine normalization to [0,1]^4."""

    lo: tuple[float, float, float, float]
    hi: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        for a, b in zip(self.lo, self.hi):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise InvalidArgumentError("bounds must be finite")
            if a >= b:
                raise InvalidArgumentError(f"degenerate bounds: min {a} >= max {b}")


@dataclass(frozen=True)
class PortfolioState:
    """MDP state: the portfolio built so far plus a dynamic-feature snapshot.

    ``effective_costs[i]`` is the cost of ``selected[i]`` at its selection
    time (base cost times the then-current price multiplier), so
    ``cumulative_cost`` is reproducible from the state alone.
    """

    selected: tuple[int, ...]
    effective_costs: tuple[float, ...]
    step_index: int
    dyn_snapshot: np.ndarray = field(repr=False)   # (n, DYN_DIM)
    capacity: int

    def __post_init__(self) -> None:
        if len(self.selected) != self.step_index:
            raise InvalidArgumentError("|selected| must equal step_index")
        if len(set(self.selected)) != len(self.selected):
            raise InvalidArgumentError("selected parcel ids must be unique")
        if len(self.effective_costs) != len(self.selected):
            raise InvalidArgumentError("one effective cost per selected parcel")
        if not 0 <= self.step_index <= self.capacity:
            raise InvalidArgumentError("step_index outside [0, capacity]")

    @property
    def cumulative_cost(self) -> float:
        return float(sum(self.effective_costs))

    def portfolio_summary(self, n_districts: int, district_ids: Sequence[int],
                          budget_total: float) -> np.ndarray:
        """Aggregate features: capacity used, per-district counts, cost used."""
        counts = np.zeros(n_districts, dtype=np.float64)
        for pid in self.selected:
            counts[district_ids[pid]] += 1.0
        used = self.step_index / max(self.capacity, 1)
        cost_frac = self.cumulative_cost / budget_total if budget_total > 0 else 0.0
        return np.concatenate(([used], counts / max(self.capacity, 1), [cost_frac]))


@dataclass
class CityInstance:
    """A full synthetic metropolitan dataset."""

    name: str
    parcels: list[Parcel]
    districts: int
    budget_total: float
    portfolio_capacity: int
    objective_bounds: ObjectiveBounds
    seed: int
    requires_qct: bool = False

    def __post_init__(self) -> None:
        if self.districts < 1:
            raise InvalidArgumentError("districts must be >= 1")
        if len(self.parcels) < self.portfolio_capacity:
            raise InvalidArgumentError("need at least portfolio_capacity parcels")
        for p in self.parcels:
            if p.district_id >= self.districts:
                raise InvalidArgumentError(
                    f"parcel {p.id} district {p.district_id} >= districts {self.districts}")
        self._arrays: "CityArrays | None" = None

    @property
    def n(self) -> int:
        return len(self.parcels)

    def arrays(self) -> "CityArrays":
        if self._arrays is None:
            self._arrays = CityArrays.from_city(self)
        return self._arrays


@dataclass
class CityArrays:
    """Column-major cache of parcel features for vectorized computation."""

    geo: np.ndarray            # (n, GEO_DIM)
    reg: np.ndarray            # (n, REG_DIM) uint8
    dyn: np.ndarray            # (n, DYN_DIM)
    district: np.ndarray       # (n,) int
    minority: np.ndarray       # (n,) bool
    low_income: np.ndarray     # (n,) bool
    base_cost: np.ndarray      # (n,)

    @staticmethod
    def from_city(city: CityInstance) -> "CityArrays":
        geo = np.array([p.geo for p in city.parcels], dtype=np.float64)
        reg = np.array([p.reg for p in city.parcels], dtype=np.uint8)
        dyn = np.array([p.dyn for p in city.parcels], dtype=np.float64)
        district = np.array([p.district_id for p in city.parcels], dtype=np.int64)
        minority = np.array([p.minority_tract for p in city.parcels], dtype=bool)
        low_income = np.array([p.low_income_tract for p in city.parcels], dtype=bool)
        base_cost = geo[:, GeoIdx.LAND_COST] + geo[:, GeoIdx.CONSTRUCTION_COST]
        return CityArrays(geo, reg, dyn, district, minority, low_income, base_cost)


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """True iff ``a`` is at least as good as ``b`` everywhere and better somewhere."""
    av, bv = tuple(a), tuple(b)
    return all(x >= y for x, y in zip(av, bv)) and av != bv


def normalize(v: ObjectiveVector, bounds: ObjectiveBounds) -> ObjectiveVector:
    """Affinely map each component to [0, 1]; values outside bounds are clamped."""
    out = []
    for x, lo, hi in zip(v, bounds.lo, bounds.hi):
        out.append(min(1.0, max(0.0, (x - lo) / (hi - lo))))
    return ObjectiveVector.from_array(out)
