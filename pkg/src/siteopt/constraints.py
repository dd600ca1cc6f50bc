"""Compliance engine: a registry of exactly 127 hard/soft constraints with
short-circuit checking, a quadratic violation penalty, and greedy repair.

Registry layout (ids ascending, always totalling 127):

  0                      budget: sum of effective costs <= budget_total
  1 .. D                 per-district minimum site counts (terminal only)
  D+1                    flood: no 100-year-flood sites without mitigation
  D+2 .. D+11            zoning: selected parcels must hold their category permit
  D+12                   QCT: every site QCT-eligible when the city requires it
  D+13, D+14             fairness: minority-tract share >= 0.30, Gini <= 0.85
  D+15 .. 126            blanket per-parcel regulatory-bit requirements

Violation magnitudes are normalized excesses for graded constraints (budget,
fairness) and offending-parcel counts for boolean ones, so the quadratic
penalty has a usable gradient-like signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import (
    REG_DIM,
    CityInstance,
    GeoIdx,
    InvalidArgumentError,
    PortfolioState,
    RegIdx,
)
from .metrics import gini

MINORITY_SHARE_FLOOR = 0.30
GINI_CEILING = 0.85
TOTAL_CONSTRAINTS = 127

CATEGORIES = ("QCT-eligibility", "budget", "geographic-distribution",
              "environmental", "zoning", "fairness", "regulatory-bit")


@dataclass(frozen=True)
class Constraint:
    id: int
    category: str
    severity: str                   # "hard" | "soft"
    scope: str                      # "per-parcel" | "portfolio"
    terminal_only: bool
    description: str
    evaluate: Callable[[Sequence[int], np.ndarray, float, bool], float] = field(repr=False)
    # evaluate(combined_ids, effective_costs, prior_cost, at_terminal) -> magnitude,
    # <= 0 means satisfied


@dataclass(frozen=True)
class ComplianceReport:
    feasible: bool
    first_violation: Optional[int]
    violations: tuple[tuple[int, float], ...]
    checked_count: int


class ConstraintRegistry:
    """Immutable set of the 127 instantiated constraints for one city."""

    def __init__(self, city: CityInstance, constraints: list[Constraint],
                 fairness_enabled: bool, district_minimum: int):
        if len(constraints) != TOTAL_CONSTRAINTS:
            raise InvalidArgumentError(
                f"registry must hold exactly {TOTAL_CONSTRAINTS} constraints, "
                f"got {len(constraints)}")
        ids = [c.id for c in constraints]
        if ids != list(range(TOTAL_CONSTRAINTS)):
            raise InvalidArgumentError("constraint ids must be contiguous 0..126")
        self.city = city
        self.constraints = tuple(constraints)
        self.fairness_enabled = fairness_enabled
        self.district_minimum = district_minimum
        arr = city.arrays()
        # vectorized per-parcel admissibility used by the action mask
        required = np.ones(city.n, dtype=bool)
        for bit in sorted(self._required_bits(city)):
            required &= arr.reg[:, bit] == 1
        zoning_ok = np.zeros(city.n, dtype=bool)
        for z in range(RegIdx.N_ZONING):
            cat = arr.reg[:, RegIdx.ZONING_CATEGORY + z] == 1
            zoning_ok |= cat & (arr.reg[:, RegIdx.ZONING_PERMIT + z] == 1)
        flood_ok = ~((arr.geo[:, GeoIdx.FLOOD_100YR] > 0)
                     & (arr.reg[:, RegIdx.FLOOD_MITIGATION] == 0))
        qct_ok = (arr.reg[:, RegIdx.QCT] == 1) if city.requires_qct \
            else np.ones(city.n, dtype=bool)
        self.per_parcel_ok = required & zoning_ok & flood_ok & qct_ok

    @staticmethod
    def _required_bits(city: CityInstance) -> set[int]:
        n_blanket = TOTAL_CONSTRAINTS - 15 - city.districts
        span = REG_DIM - RegIdx.REQUIRED_BASE
        return {RegIdx.REQUIRED_BASE + (i % span) for i in range(n_blanket)}

    def dump(self) -> str:
        lines = [f"{'id':>4}  {'severity':<6}  {'scope':<10}  {'category':<24}  description"]
        for c in self.constraints:
            lines.append(f"{c.id:>4}  {c.severity:<6}  {c.scope:<10}  "
                         f"{c.category:<24}  {c.description}")
        return "\n".join(lines)


def district_minimum_for(city: CityInstance) -> int:
    """Two sites per district when the capacity can support it, else inactive."""
    return 2 if city.portfolio_capacity >= 2 * city.districts else 0


def build_registry(city: CityInstance, fairness_enabled: bool = True) -> ConstraintRegistry:
    d = city.districts
    if 15 + d > TOTAL_CONSTRAINTS:
        raise InvalidArgumentError(
            f"{d} districts cannot fit the {TOTAL_CONSTRAINTS}-constraint registry")
    arr = city.arrays()
    minimum = district_minimum_for(city)
    constraints: list[Constraint] = []

    def budget_eval(ids, costs, prior_cost, terminal):
        total = prior_cost + float(np.sum(costs))
        return (total - city.budget_total) / city.budget_total

    constraints.append(Constraint(
        0, "budget", "hard", "portfolio", False,
        f"total effective cost <= {city.budget_total:,.0f}", budget_eval))

    for j in range(d):
        def district_eval(ids, costs, prior_cost, terminal, _j=j):
            if not terminal or minimum == 0:
                return -1.0
            count = sum(1 for pid in ids if arr.district[pid] == _j)
            return (minimum - count) / minimum
        desc = (f"district {j}: >= {minimum} sites at terminal" if minimum
                else f"district {j}: minimum inactive (capacity < 2*districts)")
        constraints.append(Constraint(
            1 + j, "geographic-distribution", "hard", "portfolio", True, desc, district_eval))

    flood_bad = (arr.geo[:, GeoIdx.FLOOD_100YR] > 0) & (arr.reg[:, RegIdx.FLOOD_MITIGATION] == 0)

    def flood_eval(ids, costs, prior_cost, terminal):
        return float(sum(1 for pid in ids if flood_bad[pid]))

    constraints.append(Constraint(
        d + 1, "environmental", "hard", "portfolio", False,
        "no 100-year-flood-zone sites without mitigation", flood_eval))

    for z in range(RegIdx.N_ZONING):
        def zoning_eval(ids, costs, prior_cost, terminal, _z=z):
            bad = 0
            for pid in ids:
                if arr.reg[pid, RegIdx.ZONING_CATEGORY + _z] == 1 \
                        and arr.reg[pid, RegIdx.ZONING_PERMIT + _z] == 0:
                    bad += 1
            return float(bad)
        constraints.append(Constraint(
            d + 2 + z, "zoning", "hard", "per-parcel", False,
            f"zoning category R{z + 1} requires matching use permit", zoning_eval))

    def qct_eval(ids, costs, prior_cost, terminal):
        if not city.requires_qct:
            return -1.0
        return float(sum(1 for pid in ids if arr.reg[pid, RegIdx.QCT] == 0))

    constraints.append(Constraint(
        d + 12, "QCT-eligibility", "hard", "portfolio", False,
        "every site QCT-eligible" if city.requires_qct else "QCT not required (inactive)",
        qct_eval))

    def minority_eval(ids, costs, prior_cost, terminal):
        if not fairness_enabled or not terminal or not ids:
            return -1.0
        share = float(np.mean([arr.minority[pid] for pid in ids]))
        return (MINORITY_SHARE_FLOOR - share) / MINORITY_SHARE_FLOOR

    def gini_eval(ids, costs, prior_cost, terminal):
        if not fairness_enabled or not terminal or not ids:
            return -1.0
        counts = np.bincount([arr.district[pid] for pid in ids], minlength=d)
        return (gini(counts) - GINI_CEILING) / GINI_CEILING

    constraints.append(Constraint(
        d + 13, "fairness", "soft", "portfolio", True,
        f"minority-tract share >= {MINORITY_SHARE_FLOOR:.0%} at terminal"
        if fairness_enabled else "minority-share floor disabled", minority_eval))
    constraints.append(Constraint(
        d + 14, "fairness", "soft", "portfolio", True,
        f"district-count Gini <= {GINI_CEILING} at terminal"
        if fairness_enabled else "Gini ceiling disabled", gini_eval))

    n_blanket = TOTAL_CONSTRAINTS - 15 - d
    span = REG_DIM - RegIdx.REQUIRED_BASE
    for i in range(n_blanket):
        bit = RegIdx.REQUIRED_BASE + (i % span)

        def bit_eval(ids, costs, prior_cost, terminal, _bit=bit):
            return float(sum(1 for pid in ids if arr.reg[pid, _bit] == 0))

        constraints.append(Constraint(
            d + 15 + i, "regulatory-bit", "hard", "per-parcel", False,
            f"every site must satisfy regulatory bit {bit}", bit_eval))

    return ConstraintRegistry(city, constraints, fairness_enabled, minimum)


def _combined(state: PortfolioState, action: Sequence[int],
              registry: ConstraintRegistry) -> tuple[list[int], np.ndarray]:
    city = registry.city
    action = list(action)
    for pid in action:
        if not 0 <= pid < city.n:
            raise InvalidArgumentError(f"unknown parcel id {pid}")
        if pid in state.selected:
            raise InvalidArgumentError(f"parcel {pid} already selected")
    if len(set(action)) != len(action):
        raise InvalidArgumentError("duplicate parcel ids in action")
    arr = city.arrays()
    mult = state.dyn_snapshot[action, 0] if action else np.zeros(0)
    costs = arr.base_cost[action] * mult
    return list(state.selected) + action, costs


def check(state: PortfolioState, action: Sequence[int], registry: ConstraintRegistry,
          mode: str = "full") -> ComplianceReport:
    """Evaluate all 127 constraints; early_stop halts at the first violation."""
    combined, costs = _combined(state, action, registry)
    terminal = len(combined) == registry.city.portfolio_capacity
    prior = state.cumulative_cost
    violations: list[tuple[int, float]] = []
    checked = 0
    for c in registry.constraints:
        checked += 1
        mag = c.evaluate(combined, costs, prior, terminal)
        if mag > 0:
            violations.append((c.id, float(mag)))
            if mode == "early_stop":
                break
    feasible = not violations
    return ComplianceReport(
        feasible=feasible,
        first_violation=violations[0][0] if violations else None,
        violations=tuple(violations),
        checked_count=checked,
    )


def penalty(state: PortfolioState, action: Sequence[int],
            registry: ConstraintRegistry) -> float:
    """Quadratic violation penalty: sum of squared positive magnitudes."""
    report = check(state, action, registry, mode="full")
    return float(sum(mag ** 2 for _, mag in report.violations))


def repair(state: PortfolioState, action: Sequence[int],
           registry: ConstraintRegistry) -> Optional[list[int]]:
    """Greedily modify an infeasible action until it passes ``check``.

    Swaps address soft violations before hard ones; removal is a last resort
    reserved for hard constraints.  Returns None when no feasible variant of
    size >= 1 is found within the 2K-candidate swap budget.
    """
    city = registry.city
    arr = city.arrays()
    current = list(dict.fromkeys(action))
    if not current:
        return None
    if check(state, current, registry).feasible:
        return current

    swap_budget = 2 * city.portfolio_capacity
    swaps_tried = 0
    flood_bad = (arr.geo[:, GeoIdx.FLOOD_100YR] > 0) & (arr.reg[:, RegIdx.FLOOD_MITIGATION] == 0)

    def candidates_excluding(exclude: set[int]) -> list[int]:
        pool = np.flatnonzero(registry.per_parcel_ok)
        return [int(p) for p in pool if p not in exclude and p not in state.selected]

    def offender_for(cid: int, ids: list[int]) -> Optional[int]:
        c = registry.constraints[cid]
        if c.category == "budget":
            return max(ids, key=lambda p: arr.base_cost[p])
        if c.category == "environmental":
            for p in ids:
                if flood_bad[p]:
                    return p
        if c.category in ("zoning", "regulatory-bit", "QCT-eligibility"):
            for p in ids:
                if not registry.per_parcel_ok[p]:
                    return p
            return None
        if c.category == "fairness":
            if cid == city.districts + 13:   # minority share: drop a non-minority site
                for p in ids:
                    if not arr.minority[p]:
                        return p
            counts = np.bincount([arr.district[p] for p in ids], minlength=city.districts)
            crowded = int(counts.argmax())
            for p in ids:
                if arr.district[p] == crowded:
                    return p
        if c.category == "geographic-distribution":
            counts = np.bincount([arr.district[p] for p in ids], minlength=city.districts)
            crowded = int(counts.argmax())
            for p in ids:
                if arr.district[p] == crowded:
                    return p
        return ids[0] if ids else None

    def preferred_pool(cid: int, ids: list[int], pool: list[int]) -> list[int]:
        c = registry.constraints[cid]
        if c.category == "fairness" and cid == city.districts + 13:
            narrowed = [p for p in pool if arr.minority[p]]
            return narrowed or pool
        if c.category == "geographic-distribution":
            counts = np.bincount([arr.district[p] for p in ids], minlength=city.districts)
            deficient = [j for j in range(city.districts)
                         if counts[j] < registry.district_minimum]
            narrowed = [p for p in pool if arr.district[p] in deficient]
            return narrowed or pool
        if c.category == "budget":
            return sorted(pool, key=lambda p: arr.base_cost[p])
        return pool

    while swaps_tried < swap_budget:
        report = check(state, current, registry, mode="full")
        if report.feasible:
            return current
        # soft violations first: relax via substitution before any hard removal
        ordered = sorted(report.violations,
                         key=lambda v: (registry.constraints[v[0]].severity != "soft", v[0]))
        cid, _ = ordered[0]
        out = offender_for(cid, current)
        if out is None:
            return None
        pool = preferred_pool(cid, current, candidates_excluding(set(current)))
        pool = sorted(pool, key=lambda p: abs(arr.base_cost[p] - arr.base_cost[out]))
        swapped = False
        baseline_violations = len(report.violations)
        for cand in pool:
            if swaps_tried >= swap_budget:
                break
            swaps_tried += 1
            trial = [cand if p == out else p for p in current]
            trial_report = check(state, trial, registry, mode="full")
            if trial_report.feasible or len(trial_report.violations) < baseline_violations:
                current = trial
                swapped = True
                break
        if not swapped:
            if registry.constraints[cid].severity == "hard" and len(current) > 1:
                current = [p for p in current if p != out]
            else:
                return None
    return current if check(state, current, registry).feasible else None
