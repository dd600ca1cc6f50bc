"""HTTP service for interactive preference exploration.

Answers come from a precomputed archive of non-dominated portfolios: a
re-optimization request normalizes the preference weights server-side,
filters records by the enabled soft constraints and any budget override, and
returns the record maximizing the preference-weighted normalized objectives.
The archive and registry are immutable snapshots, so the service is stateless
across requests.
"""

from __future__ import annotations

import time
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .constraints import ConstraintRegistry, check
from .domain import (
    CityInstance,
    GeoIdx,
    PortfolioState,
    PreferenceVector,
    normalize,
)
from .ppo import ArchiveRecord, ParetoArchive

SERVICE_VERSION = "1.0"

FACTOR_NAMES = ("regulatory", "accessibility", "cost", "environment")


class SoftConstraintToggle(BaseModel):
    id: int
    enabled: bool


class ReoptimizeRequest(BaseModel):
    weights: list[float] = Field(alias="lambda")
    soft_constraints: list[SoftConstraintToggle] = Field(default_factory=list)
    budget_override: Optional[float] = None

    model_config = {"populate_by_name": True}


def _rounded_percentages(weights: np.ndarray) -> list[int]:
    """Largest-remainder rounding so the parts always total 100."""
    total = weights.sum()
    shares = weights / total * 100.0 if total > 0 else np.full(len(weights), 25.0)
    floors = np.floor(shares).astype(int)
    remainder = 100 - floors.sum()
    order = np.argsort(-(shares - floors), kind="stable")
    for i in order[:remainder]:
        floors[i] += 1
    return [int(v) for v in floors]


def explain(city: CityInstance, record: ArchiveRecord) -> list[str]:
    """Deterministic templated explanation: one line per selected parcel with
    attention-derived factor percentages summing to 100%."""
    arr = city.arrays()
    pct = _rounded_percentages(np.asarray(record.attention, dtype=np.float64))
    mean_cost = float(arr.base_cost.mean())
    lines = []
    for pid in record.portfolio:
        qct = "QCT-eligible" if arr.reg[pid, 0] == 1 else "not QCT-eligible"
        walk = arr.geo[pid, GeoIdx.WALK_SCORE]
        delta = (arr.base_cost[pid] - mean_cost) / mean_cost * 100.0
        cost_note = (f"{abs(delta):.0f}% {'below' if delta <= 0 else 'above'} "
                     "city mean cost")
        green = arr.geo[pid, GeoIdx.GREEN_SPACE]
        lines.append(
            f"Parcel {pid} (district {int(arr.district[pid])}): "
            f"regulatory {pct[0]}% ({qct}); "
            f"accessibility {pct[1]}% (walk score {walk:.0f}); "
            f"cost {pct[2]}% ({cost_note}); "
            f"environment {pct[3]}% (green share {green:.2f})")
    return lines


def _record_feasible(city: CityInstance, registry: ConstraintRegistry,
                     ids: tuple[int, ...]) -> bool:
    empty = PortfolioState(selected=(), effective_costs=(), step_index=0,
                           dyn_snapshot=city.arrays().dyn.copy(),
                           capacity=city.portfolio_capacity)
    return check(empty, list(ids), registry, mode="full").feasible


def _compliance_payload(city: CityInstance, registry: ConstraintRegistry,
                        ids: tuple[int, ...]) -> dict:
    empty = PortfolioState(selected=(), effective_costs=(), step_index=0,
                           dyn_snapshot=city.arrays().dyn.copy(),
                           capacity=city.portfolio_capacity)
    report = check(empty, list(ids), registry, mode="full")
    return {
        "feasible": report.feasible,
        "first_violation": report.first_violation,
        "violations": [{"id": cid, "magnitude": mag}
                       for cid, mag in report.violations],
        "checked_count": report.checked_count,
    }


def _parcel_summary(city: CityInstance, pid: int) -> dict:
    arr = city.arrays()
    return {
        "id": pid,
        "district": int(arr.district[pid]),
        "walk_score": float(arr.geo[pid, GeoIdx.WALK_SCORE]),
        "green_space": float(arr.geo[pid, GeoIdx.GREEN_SPACE]),
        "base_cost": float(arr.base_cost[pid]),
        "flood_zone": bool(arr.geo[pid, GeoIdx.FLOOD_100YR] > 0),
        "qct": bool(arr.reg[pid, 0] == 1),
        "minority_tract": bool(arr.minority[pid]),
    }


def build_app(city: CityInstance, registry: ConstraintRegistry,
              archive: ParetoArchive, live: bool = False) -> FastAPI:
    """``live`` enables greedy single-parcel swap search when the enabled
    soft constraints rule out every archive record, instead of only falling
    back to the relaxed argmax."""
    app = FastAPI(title="site-selection explorer service")

    # serve only records that pass the full compliance check at current prices
    records = [r for r in archive.records
               if _record_feasible(city, registry, r.portfolio)]
    normalized = np.array(
        [tuple(normalize(r.objectives, city.objective_bounds)) for r in records]
    ) if records else np.zeros((0, 4))
    costs = np.array([-r.objectives.neg_cost for r in records]) if records \
        else np.zeros(0)
    soft_ids = {c.id for c in registry.constraints if c.severity == "soft"}
    soft_ok = np.ones((len(records), len(soft_ids)), dtype=bool)
    soft_id_list = sorted(soft_ids)
    empty = PortfolioState(selected=(), effective_costs=(), step_index=0,
                           dyn_snapshot=city.arrays().dyn.copy(),
                           capacity=city.portfolio_capacity)
    for i, r in enumerate(records):
        report = check(empty, list(r.portfolio), registry, mode="full")
        violated = {cid for cid, _ in report.violations}
        for j, cid in enumerate(soft_id_list):
            soft_ok[i, j] = cid not in violated

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        fields = [".".join(str(p) for p in e.get("loc", ()) if p != "body")
                  for e in errors]
        field = fields[0] if fields else "body"
        return JSONResponse(status_code=400,
                            content={"error": "malformed request", "field": field})

    def bad_request(field: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=400,
                            content={"error": message, "field": field})

    def _live_swap(start: int, pref_arr: np.ndarray, enabled: list[int],
                   budget: float | None):
        """Greedy one-parcel swaps on the best record, re-scored by the
        preference, keeping only fully feasible variants that satisfy every
        enabled soft constraint (and the budget override, if any)."""
        from .rewards import portfolio_objectives

        base = list(records[start].portfolio)
        outsiders = [p for p in range(city.n) if p not in base]
        best = None
        for slot in range(len(base)):
            for cand in outsiders:
                ids = base.copy()
                ids[slot] = cand
                report = check(empty, ids, registry, mode="full")
                if not report.feasible:
                    continue
                violated = {cid for cid, _ in report.violations}
                if any(cid in violated for cid in enabled):
                    continue
                obj = portfolio_objectives(city, ids)
                if budget is not None and -obj.neg_cost > budget + 1e-6:
                    continue
                norm = np.array(tuple(normalize(obj, city.objective_bounds)))
                score = float(norm @ pref_arr)
                if best is None or score > best[0]:
                    best = (score, tuple(sorted(ids)), obj, norm)
        return best

    def swap_payload(start: int, swap, latency_ms: float) -> dict:
        _, ids, obj, norm = swap
        r = records[start]
        synthetic = ArchiveRecord(objectives=obj, portfolio=ids,
                                  preference=r.preference, policy_id=r.policy_id,
                                  epoch=r.epoch, attention=r.attention)
        return {
            "record": None,
            "portfolio": [_parcel_summary(city, pid) for pid in ids],
            "objectives": list(obj),
            "normalized_objectives": [float(v) for v in norm],
            "preference": list(r.preference.weights),
            "compliance": _compliance_payload(city, registry, ids),
            "explanation": explain(city, synthetic),
            "soft_relaxed": False,
            "live_swap": True,
            "latency_ms": round(latency_ms, 3),
        }

    def record_payload(index: int, soft_relaxed: bool, latency_ms: float) -> dict:
        r = records[index]
        return {
            "record": index,
            "portfolio": [_parcel_summary(city, pid) for pid in r.portfolio],
            "objectives": list(r.objectives),
            "normalized_objectives": [float(v) for v in normalized[index]],
            "preference": list(r.preference.weights),
            "compliance": _compliance_payload(city, registry, r.portfolio),
            "explanation": explain(city, r),
            "soft_relaxed": soft_relaxed,
            "live_swap": False,
            "latency_ms": round(latency_ms, 3),
        }

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": SERVICE_VERSION, "city": city.name,
                "records": len(records)}

    @app.get("/archive")
    async def get_archive():
        return {"records": [
            {"record": i,
             "objectives": list(r.objectives),
             "normalized_objectives": [float(v) for v in normalized[i]],
             "preference": list(r.preference.weights),
             "portfolio": list(r.portfolio),
             "attention": list(r.attention)}
            for i, r in enumerate(records)]}

    @app.get("/parcels")
    async def parcels(ids: str = ""):
        try:
            parsed = [int(v) for v in ids.split(",") if v.strip() != ""]
        except ValueError:
            return bad_request("ids", "ids must be comma-separated integers")
        if not parsed:
            return bad_request("ids", "ids must not be empty")
        for pid in parsed:
            if not 0 <= pid < city.n:
                return JSONResponse(status_code=404,
                                    content={"error": f"unknown parcel {pid}"})
        return {"parcels": [_parcel_summary(city, pid) for pid in parsed]}

    @app.post("/reoptimize")
    async def reoptimize(body: ReoptimizeRequest):
        tic = time.perf_counter()
        if len(body.weights) != 4:
            return bad_request("lambda", "lambda must have 4 components")
        if any(w < 0 for w in body.weights) or sum(body.weights) <= 0:
            return bad_request(
                "lambda", "lambda needs nonnegative weights with a positive sum")
        if body.budget_override is not None and not \
                0 < body.budget_override <= city.budget_total:
            return bad_request(
                "budget_override",
                f"budget_override must lie in (0, {city.budget_total:.0f}]")
        for toggle in body.soft_constraints:
            if toggle.id not in soft_ids:
                return bad_request("soft_constraints",
                                   f"constraint {toggle.id} is not soft")
        if not records:
            return JSONResponse(status_code=404,
                                content={"error": "archive is empty"})

        pref = PreferenceVector.normalized(body.weights)
        scores = normalized @ pref.as_array()
        eligible = np.ones(len(records), dtype=bool)
        enabled = [t.id for t in body.soft_constraints if t.enabled]
        for cid in enabled:
            eligible &= soft_ok[:, soft_id_list.index(cid)]
        if body.budget_override is not None:
            eligible &= costs <= body.budget_override + 1e-6

        soft_relaxed = not eligible.any()
        pool = np.arange(len(records)) if soft_relaxed else np.flatnonzero(eligible)
        best = int(pool[np.argmax(scores[pool])])
        if soft_relaxed and live and enabled:
            swap = _live_swap(best, pref.as_array(), enabled,
                              body.budget_override)
            if swap is not None:
                return swap_payload(best, swap,
                                    (time.perf_counter() - tic) * 1000.0)
        return record_payload(best, soft_relaxed,
                              (time.perf_counter() - tic) * 1000.0)

    @app.get("/explain/{record}")
    async def explain_record(record: int):
        if not 0 <= record < len(records):
            return JSONResponse(status_code=404,
                                content={"error": f"unknown record {record}"})
        return {"record": record, "explanation": explain(city, records[record])}

    return app


def serve(city: CityInstance, registry: ConstraintRegistry,
          archive: ParetoArchive, host: str = "127.0.0.1",
          port: int = 8000, live: bool = False) -> None:
    import uvicorn

    uvicorn.run(build_app(city, registry, archive, live=live),
                host=host, port=port)
