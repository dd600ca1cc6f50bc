"""Seeded synthetic city generator plus (de)serialization.

Cities are generated so their marginal statistics hit declared targets (parcel
count, QCT share, mean price) exactly or within tight tolerance, with a
deliberate positive correlation between walkability and land cost so that
accessibility and cost genuinely compete.

File format: UTF-8 JSON Lines.  Line 1 is a header object carrying the
schema version, generation spec echo, seed, and objective bounds; every
following line is one parcel record with named fields.  Regulatory bits are
serialized as a 127-character 0/1 string.  Identical (spec, seed) pairs
serialize to identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import (
    DYN_DIM,
    GEO_DIM,
    REG_DIM,
    CityInstance,
    DynIdx,
    GeoIdx,
    InvalidArgumentError,
    ObjectiveBounds,
    Parcel,
    RegIdx,
)
from .rewards import DEFAULT_PARAMS, RewardParams, portfolio_objectives

SCHEMA_VERSION = 1

# synthetic calibration constants
MEAN_PARCEL_AREA_M2 = 3000.0
MEAN_CONSTRUCTION_COST = 2.0e7
PRICE_SIGMA = 0.45            # lognormal spread of per-m2 price
WALK_COST_CORRELATION = 0.5   # shared latent between walk score and land cost
ZONING_PERMIT_RATE = 0.95     # chance a parcel's own zoning category is permitted
REQUIRED_BIT_RATE = 0.999     # chance each blanket regulatory bit is satisfied
MITIGATION_RATE = 0.5         # chance a flood-zone parcel carries mitigation


class CityFileError(ValueError):
    """Raised when a city file cannot be parsed; message carries line/field."""


@dataclass(frozen=True)
class CityGenSpec:
    name: str
    n_parcels: int
    districts: int = 10
    avg_price_per_m2: float = 2500.0
    qct_fraction: float = 0.35
    flood_fraction: float = 0.12
    minority_fraction: float = 0.40
    area_km2: float = 800.0
    budget_total: float | None = None   # derived from prices when omitted
    portfolio_capacity: int = 25
    requires_qct: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.portfolio_capacity < 1 or self.n_parcels < self.portfolio_capacity:
            raise InvalidArgumentError("need n_parcels >= portfolio_capacity >= 1")
        for frac in (self.qct_fraction, self.flood_fraction, self.minority_fraction):
            if not 0.0 <= frac <= 1.0:
                raise InvalidArgumentError("fractions must lie in [0, 1]")
        if self.districts < 1:
            raise InvalidArgumentError("districts must be >= 1")

    def resolved_budget(self) -> float:
        if self.budget_total is not None:
            return self.budget_total
        mean_parcel_cost = self.avg_price_per_m2 * MEAN_PARCEL_AREA_M2 + MEAN_CONSTRUCTION_COST
        return 1.5 * self.portfolio_capacity * mean_parcel_cost


# Targets for the eight metropolitan presets: parcel count, area (km2),
# average price per m2 (USD), and QCT share.
PRESETS: dict[str, CityGenSpec] = {
    "nyc": CityGenSpec("nyc", 12847, avg_price_per_m2=4230.0, qct_fraction=0.342, area_km2=783.0),
    "la": CityGenSpec("la", 9234, avg_price_per_m2=3180.0, qct_fraction=0.287, area_km2=1302.0),
    "chi": CityGenSpec("chi", 6721, avg_price_per_m2=2410.0, qct_fraction=0.413, area_km2=606.0),
    "hou": CityGenSpec("hou", 5498, avg_price_per_m2=1890.0, qct_fraction=0.389, area_km2=1651.0,
                       flood_fraction=0.35),
    "pho": CityGenSpec("pho", 4912, avg_price_per_m2=1650.0, qct_fraction=0.321, area_km2=1344.0),
    "phi": CityGenSpec("phi", 3876, avg_price_per_m2=2920.0, qct_fraction=0.456, area_km2=347.0),
    "sa": CityGenSpec("sa", 2654, avg_price_per_m2=1420.0, qct_fraction=0.378, area_km2=1256.0),
    "sd": CityGenSpec("sd", 1650, avg_price_per_m2=3670.0, qct_fraction=0.264, area_km2=842.0),
    # small instance for fast local experiments
    "desk": CityGenSpec("desk", 200, districts=10, avg_price_per_m2=2500.0,
                        qct_fraction=0.35, area_km2=100.0, portfolio_capacity=5),
}


@dataclass(frozen=True)
class CityStats:
    n_parcels: int
    qct_fraction: float
    mean_price_per_m2: float
    mean_total_cost: float
    minority_fraction: float
    flood_fraction: float
    district_counts: tuple[int, ...]


def _exact_count_mask(rng: np.random.Generator, n: int, fraction: float) -> np.ndarray:
    """Boolean mask with exactly round(fraction * n) True entries."""
    k = int(round(fraction * n))
    mask = np.zeros(n, dtype=bool)
    mask[rng.permutation(n)[:k]] = True
    return mask


def generate_city(spec: CityGenSpec) -> CityInstance:
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    n, d = spec.n_parcels, spec.districts
    side = math.sqrt(spec.area_km2)

    coords = rng.random((n, 2)) * side
    centers = rng.random((d, 2)) * side
    dist2 = ((coords[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    district = dist2.argmin(axis=1)
    # every district must be non-empty so per-district statistics are defined
    for j in range(d):
        if not np.any(district == j):
            district[rng.integers(n)] = j

    # latent z_w drives walkability; land cost shares it at the target correlation
    z_w = rng.standard_normal(n)
    z_c = WALK_COST_CORRELATION * z_w + math.sqrt(1 - WALK_COST_CORRELATION ** 2) \
        * rng.standard_normal(n)
    walk = np.clip(55.0 + 20.0 * z_w, 0.0, 100.0)
    price = spec.avg_price_per_m2 * np.exp(PRICE_SIGMA * z_c - PRICE_SIGMA ** 2 / 2.0)
    area_m2 = MEAN_PARCEL_AREA_M2 * np.exp(0.3 * rng.standard_normal(n) - 0.3 ** 2 / 2.0)
    land_cost = price * area_m2
    construction = MEAN_CONSTRUCTION_COST * np.exp(0.25 * rng.standard_normal(n) - 0.25 ** 2 / 2.0)

    job_prox = np.clip(0.006 * walk + 0.4 * rng.random(n), 0.0, 1.0)
    carbon = 300.0 * np.exp(-0.3 * z_w + 0.3 * rng.standard_normal(n))
    green = rng.random(n)
    air = 0.3 + 0.7 * rng.random(n)
    flood = _exact_count_mask(rng, n, spec.flood_fraction)
    qct = _exact_count_mask(rng, n, spec.qct_fraction)
    minority = np.where(qct, rng.random(n) < 0.55, rng.random(n) < 0.30)
    # nudge toward the target marginal regardless of QCT mix
    target_minority = int(round(spec.minority_fraction * n))
    deficit = target_minority - int(minority.sum())
    if deficit > 0:
        flip = rng.permutation(np.flatnonzero(~minority))[:deficit]
        minority[flip] = True
    elif deficit < 0:
        flip = rng.permutation(np.flatnonzero(minority))[:-deficit]
        minority[flip] = False
    low_income = np.where(qct, rng.random(n) < 0.7, rng.random(n) < 0.2)

    zoning_cat = rng.integers(0, RegIdx.N_ZONING, size=n)
    permit_ok = rng.random(n) < ZONING_PERMIT_RATE
    dda = rng.random(n) < 0.15
    required_bits = rng.random((n, REG_DIM - RegIdx.REQUIRED_BASE)) < REQUIRED_BIT_RATE
    mitigation = flood & (rng.random(n) < MITIGATION_RATE)

    parcels: list[Parcel] = []
    for i in range(n):
        geo = np.zeros(GEO_DIM)
        geo[GeoIdx.WALK_SCORE] = walk[i]
        geo[GeoIdx.JOB_PROXIMITY] = job_prox[i]
        geo[GeoIdx.CARBON] = carbon[i]
        geo[GeoIdx.GREEN_SPACE] = green[i]
        geo[GeoIdx.LAND_COST] = land_cost[i]
        geo[GeoIdx.CONSTRUCTION_COST] = construction[i]
        geo[GeoIdx.FLOOD_100YR] = float(flood[i])
        geo[GeoIdx.COORD_X] = coords[i, 0]
        geo[GeoIdx.COORD_Y] = coords[i, 1]
        geo[GeoIdx.AIR_QUALITY] = air[i]
        geo[10:] = rng.random(GEO_DIM - 10)

        reg = np.zeros(REG_DIM, dtype=np.int64)
        reg[RegIdx.QCT] = int(qct[i])
        reg[RegIdx.DDA] = int(dda[i])
        reg[RegIdx.ZONING_CATEGORY + zoning_cat[i]] = 1
        if permit_ok[i]:
            reg[RegIdx.ZONING_PERMIT + zoning_cat[i]] = 1
        reg[RegIdx.FLOOD_MITIGATION] = int(mitigation[i])
        reg[RegIdx.REQUIRED_BASE:] = required_bits[i].astype(np.int64)

        dyn = np.zeros(DYN_DIM)
        dyn[DynIdx.PRICE_MULTIPLIER] = 1.0
        dyn[DynIdx.PERMIT_RATE] = rng.random()
        dyn[DynIdx.SENTIMENT] = rng.standard_normal()
        dyn[3:] = rng.random(DYN_DIM - 3)

        parcels.append(Parcel(
            id=i, district_id=int(district[i]),
            geo=tuple(float(v) for v in geo),
            reg=tuple(int(v) for v in reg),
            dyn=tuple(float(v) for v in dyn),
            minority_tract=bool(minority[i]),
            low_income_tract=bool(low_income[i]),
        ))

    city = CityInstance(
        name=spec.name, parcels=parcels, districts=d,
        budget_total=spec.resolved_budget(),
        portfolio_capacity=spec.portfolio_capacity,
        objective_bounds=ObjectiveBounds((0.0, 0.0, -1.0, 0.0), (1.0, 1.0, 0.0, 1.0)),
        seed=spec.seed, requires_qct=spec.requires_qct,
    )
    city.objective_bounds = _estimate_bounds(city)
    return city


def _estimate_bounds(city: CityInstance, params: RewardParams = DEFAULT_PARAMS) -> ObjectiveBounds:
    """City-specific normalization bounds from greedy single-objective portfolios.

    For the three separable objectives, the best/worst portfolios of size K
    under a per-parcel score are exact extremes; equity bounds are analytic
    (everything in one non-minority district vs the theoretical best spread).
    """
    arr = city.arrays()
    k = city.portfolio_capacity
    geo = arr.geo
    scores = {
        0: geo[:, GeoIdx.WALK_SCORE] + params.beta1 * geo[:, GeoIdx.JOB_PROXIMITY],
        1: -geo[:, GeoIdx.CARBON] + params.beta2 * geo[:, GeoIdx.GREEN_SPACE],
        2: -arr.base_cost,
    }
    candidates = []
    for score in scores.values():
        order = np.argsort(score)
        candidates.append(order[-k:])   # best K under this objective
        candidates.append(order[:k])    # worst K
    vectors = [portfolio_objectives(city, list(ids), params=params) for ids in candidates]
    mat = np.array([tuple(v) for v in vectors])
    lo = mat.min(axis=0)
    hi = mat.max(axis=0)
    # equity: [1/D, 1 + beta4], the analytic range of (1 - gini) + diversity term
    lo[3] = 1.0 / city.districts - 1e-9
    hi[3] = 1.0 + params.beta4 + 1e-9
    # widen degenerate axes and leave price-drift headroom on cost
    span = hi - lo
    lo = lo - 0.05 * span - 1e-9
    hi = hi + 0.05 * span + 1e-9
    return ObjectiveBounds(tuple(float(v) for v in lo), tuple(float(v) for v in hi))


def summarize(city: CityInstance) -> CityStats:
    arr = city.arrays()
    counts = np.bincount(arr.district, minlength=city.districts)
    # mean per-m2 price is not stored; recover it from land cost / typical area
    mean_price = float(arr.geo[:, GeoIdx.LAND_COST].mean()) / MEAN_PARCEL_AREA_M2
    return CityStats(
        n_parcels=city.n,
        qct_fraction=float(arr.reg[:, RegIdx.QCT].mean()),
        mean_price_per_m2=mean_price,
        mean_total_cost=float(arr.base_cost.mean()),
        minority_fraction=float(arr.minority.mean()),
        flood_fraction=float(arr.geo[:, GeoIdx.FLOOD_100YR].mean()),
        district_counts=tuple(int(c) for c in counts),
    )


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def city_to_text(city: CityInstance) -> str:
    header = {
        "schema_version": SCHEMA_VERSION,
        "kind": "city",
        "name": city.name,
        "seed": city.seed,
        "districts": city.districts,
        "budget_total": city.budget_total,
        "portfolio_capacity": city.portfolio_capacity,
        "requires_qct": city.requires_qct,
        "objective_bounds": {"lo": list(city.objective_bounds.lo),
                             "hi": list(city.objective_bounds.hi)},
        "n_parcels": city.n,
    }
    lines = [_dumps(header)]
    for p in city.parcels:
        lines.append(_dumps({
            "id": p.id,
            "district": p.district_id,
            "geo": list(p.geo),
            "reg": "".join(str(b) for b in p.reg),
            "dyn": list(p.dyn),
            "minority": p.minority_tract,
            "low_income": p.low_income_tract,
        }))
    return "\n".join(lines) + "\n"


def write_city(city: CityInstance, path: str | Path) -> None:
    Path(path).write_text(city_to_text(city), encoding="utf-8")


def _field(record: dict, name: str, lineno: int):
    if name not in record:
        raise CityFileError(f"line {lineno}: missing field '{name}'")
    return record[name]


def city_from_text(text: str) -> CityInstance:
    lines = text.splitlines()
    if not lines:
        raise CityFileError("line 1: empty city file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CityFileError(f"line 1: malformed header: {exc}") from exc
    if header.get("schema_version") != SCHEMA_VERSION:
        raise CityFileError(f"line 1: field 'schema_version' must be {SCHEMA_VERSION}")
    n = _field(header, "n_parcels", 1)
    parcels: list[Parcel] = []
    for i, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CityFileError(f"line {i}: malformed parcel record: {exc}") from exc
        reg_str = _field(rec, "reg", i)
        if len(reg_str) != REG_DIM or set(reg_str) - {"0", "1"}:
            raise CityFileError(f"line {i}: field 'reg' must be a {REG_DIM}-char 0/1 string")
        geo = _field(rec, "geo", i)
        if len(geo) != GEO_DIM:
            raise CityFileError(f"line {i}: field 'geo' must have {GEO_DIM} entries")
        dyn = _field(rec, "dyn", i)
        if len(dyn) != DYN_DIM:
            raise CityFileError(f"line {i}: field 'dyn' must have {DYN_DIM} entries")
        try:
            parcels.append(Parcel(
                id=int(_field(rec, "id", i)),
                district_id=int(_field(rec, "district", i)),
                geo=tuple(float(v) for v in geo),
                reg=tuple(int(c) for c in reg_str),
                dyn=tuple(float(v) for v in dyn),
                minority_tract=bool(_field(rec, "minority", i)),
                low_income_tract=bool(_field(rec, "low_income", i)),
            ))
        except InvalidArgumentError as exc:
            raise CityFileError(f"line {i}: {exc}") from exc
    if len(parcels) != n:
        raise CityFileError(
            f"line {len(lines)}: header declares {n} parcels but file holds {len(parcels)}")
    bounds = _field(header, "objective_bounds", 1)
    return CityInstance(
        name=_field(header, "name", 1),
        parcels=parcels,
        districts=int(_field(header, "districts", 1)),
        budget_total=float(_field(header, "budget_total", 1)),
        portfolio_capacity=int(_field(header, "portfolio_capacity", 1)),
        objective_bounds=ObjectiveBounds(tuple(bounds["lo"]), tuple(bounds["hi"])),
        seed=int(_field(header, "seed", 1)),
        requires_qct=bool(header.get("requires_qct", False)),
    )


def read_city(path: str | Path) -> CityInstance:
    return city_from_text(Path(path).read_text(encoding="utf-8"))
