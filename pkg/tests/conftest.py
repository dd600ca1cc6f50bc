"""Shared fixtures: a deterministic desk-scale city plus hand-buildable toy
cities small enough for exhaustive oracles."""

from __future__ import annotations

import numpy as np
import pytest

from siteopt import citygen
from siteopt.citygen import _estimate_bounds
from siteopt.constraints import build_registry
from siteopt.domain import (
    DYN_DIM,
    GEO_DIM,
    REG_DIM,
    CityInstance,
    GeoIdx,
    Parcel,
    RegIdx,
)


def make_parcel(pid: int, district: int, *, walk: float = 50.0,
                job_prox: float = 0.5, carbon: float = 100.0,
                green: float = 0.5, cost: float = 10.0, flood: bool = False,
                mitigation: bool = True, x: float = 0.0, y: float = 0.0,
                air: float = 0.5, qct: bool = True, minority: bool = True,
                low_income: bool = False, zoning: int = 0,
                permit: bool = True, missing_bit: int | None = None) -> Parcel:
    """A parcel with controllable knobs; compliant on every axis by default."""
    geo = [0.0] * GEO_DIM
    geo[GeoIdx.WALK_SCORE] = walk
    geo[GeoIdx.JOB_PROXIMITY] = job_prox
    geo[GeoIdx.CARBON] = carbon
    geo[GeoIdx.GREEN_SPACE] = green
    geo[GeoIdx.LAND_COST] = cost / 2.0
    geo[GeoIdx.CONSTRUCTION_COST] = cost / 2.0
    geo[GeoIdx.FLOOD_100YR] = 1.0 if flood else 0.0
    geo[GeoIdx.COORD_X] = x
    geo[GeoIdx.COORD_Y] = y
    geo[GeoIdx.AIR_QUALITY] = air
    reg = [0] * REG_DIM
    reg[RegIdx.QCT] = 1 if qct else 0
    reg[RegIdx.ZONING_CATEGORY + zoning] = 1
    if permit:
        reg[RegIdx.ZONING_PERMIT + zoning] = 1
    if mitigation:
        reg[RegIdx.FLOOD_MITIGATION] = 1
    for bit in range(RegIdx.REQUIRED_BASE, REG_DIM):
        reg[bit] = 1
    if missing_bit is not None:
        reg[missing_bit] = 0
    dyn = [0.0] * DYN_DIM
    dyn[0] = 1.0
    return Parcel(id=pid, district_id=district, geo=tuple(geo), reg=tuple(reg),
                  dyn=tuple(dyn), minority_tract=minority,
                  low_income_tract=low_income)


def make_city(parcels: list[Parcel], districts: int, budget: float,
              capacity: int, name: str = "toy", requires_qct: bool = False,
              seed: int = 0) -> CityInstance:
    city = CityInstance(name=name, parcels=parcels, districts=districts,
                        budget_total=budget, portfolio_capacity=capacity,
                        objective_bounds=None, seed=seed,
                        requires_qct=requires_qct)
    # bounds need a constructed instance; estimate them afterwards
    city.objective_bounds = _estimate_bounds(city)
    return city


def toy_city(n: int = 8, capacity: int = 3, districts: int = 3,
             seed: int = 0, budget: float | None = None) -> CityInstance:
    """Randomized but reproducible small city exercising every constraint."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    parcels = []
    for i in range(n):
        parcels.append(make_parcel(
            i, int(rng.integers(districts)),
            walk=float(rng.uniform(10, 90)),
            job_prox=float(rng.uniform(0, 1)),
            carbon=float(rng.uniform(50, 400)),
            green=float(rng.uniform(0, 1)),
            cost=float(rng.uniform(5, 30)),
            flood=bool(rng.random() < 0.25),
            mitigation=bool(rng.random() < 0.6),
            x=float(rng.uniform(0, 10)), y=float(rng.uniform(0, 10)),
            air=float(rng.uniform(0, 1)),
            qct=bool(rng.random() < 0.6),
            minority=bool(rng.random() < 0.5),
            permit=bool(rng.random() < 0.85),
        ))
    if budget is None:
        budget = 24.0 * capacity
    return make_city(parcels, districts, budget, capacity,
                     name=f"toy{n}-{seed}", seed=seed)


@pytest.fixture(scope="session")
def desk_city() -> CityInstance:
    return citygen.generate_city(citygen.PRESETS["desk"])


@pytest.fixture(scope="session")
def desk_registry(desk_city):
    return build_registry(desk_city)


@pytest.fixture()
def small_city() -> CityInstance:
    return toy_city(n=8, capacity=3, districts=3, seed=11)


@pytest.fixture()
def small_registry(small_city):
    return build_registry(small_city)
