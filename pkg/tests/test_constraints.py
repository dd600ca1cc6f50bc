"""Constraint engine: registry layout, check modes, penalty, and repair."""

import numpy as np
import pytest

from siteopt.constraints import (
    GINI_CEILING,
    TOTAL_CONSTRAINTS,
    build_registry,
    check,
    district_minimum_for,
    penalty,
    repair,
)
from siteopt.domain import InvalidArgumentError, PortfolioState
from siteopt.metrics import gini

from conftest import make_city, make_parcel, toy_city


def empty_state(city):
    return PortfolioState(selected=(), effective_costs=(), step_index=0,
                          dyn_snapshot=city.arrays().dyn.copy(),
                          capacity=city.portfolio_capacity)


class TestRegistryLayout:
    def test_exactly_127_constraints(self, small_registry):
        assert len(small_registry.constraints) == TOTAL_CONSTRAINTS

    def test_ids_contiguous(self, small_registry):
        assert [c.id for c in small_registry.constraints] == list(range(127))

    def test_exactly_two_soft_constraints(self, small_registry):
        soft = [c for c in small_registry.constraints if c.severity == "soft"]
        assert len(soft) == 2
        assert all(c.category == "fairness" for c in soft)

    def test_layout_independent_of_district_count(self):
        for d in (1, 2, 5, 10):
            parcels = [make_parcel(i, i % d) for i in range(12)]
            city = make_city(parcels, districts=d, budget=200.0, capacity=3)
            registry = build_registry(city)
            assert len(registry.constraints) == TOTAL_CONSTRAINTS

    def test_district_minimum_gating(self):
        # active only when the portfolio can hold two sites per district
        big = toy_city(n=30, capacity=8, districts=3, seed=2)
        assert district_minimum_for(big) == 2
        small = toy_city(n=8, capacity=3, districts=3, seed=2)
        assert district_minimum_for(small) == 0

    def test_dump_lists_every_constraint(self, small_registry):
        dump = small_registry.dump()
        assert len(dump.splitlines()) == TOTAL_CONSTRAINTS + 1
        assert "budget" in dump and "fairness" in dump


class TestCheck:
    def test_feasible_portfolio(self, small_city, small_registry):
        # default toy parcels are fully compliant and cheap
        city = make_city([make_parcel(i, i % 3) for i in range(6)],
                         districts=3, budget=100.0, capacity=3)
        registry = build_registry(city)
        report = check(empty_state(city), [0, 1, 2], registry)
        assert report.feasible
        assert report.first_violation is None
        assert report.checked_count == TOTAL_CONSTRAINTS

    def test_budget_violation_magnitude(self):
        city = make_city([make_parcel(i, i % 2, cost=30.0) for i in range(4)],
                         districts=2, budget=50.0, capacity=2)
        registry = build_registry(city)
        report = check(empty_state(city), [0, 1], registry)
        assert not report.feasible
        assert report.first_violation == 0
        # normalized excess: (60 - 50) / 50
        assert dict(report.violations)[0] == pytest.approx(0.2)

    def test_flood_without_mitigation_violates(self):
        parcels = [make_parcel(0, 0, flood=True, mitigation=False),
                   make_parcel(1, 1), make_parcel(2, 0)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2)
        registry = build_registry(city)
        assert not check(empty_state(city), [0, 1], registry).feasible
        assert check(empty_state(city), [1, 2], registry).feasible

    def test_mitigated_flood_parcel_allowed(self):
        parcels = [make_parcel(0, 0, flood=True, mitigation=True),
                   make_parcel(1, 1)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2)
        registry = build_registry(city)
        assert check(empty_state(city), [0, 1], registry).feasible

    def test_zoning_permit_violation(self):
        parcels = [make_parcel(0, 0, zoning=4, permit=False),
                   make_parcel(1, 1), make_parcel(2, 0)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2)
        registry = build_registry(city)
        report = check(empty_state(city), [0, 1], registry)
        assert not report.feasible
        zone_cid = city.districts + 2 + 4
        assert zone_cid in dict(report.violations)

    def test_qct_requirement_when_enabled(self):
        parcels = [make_parcel(0, 0, qct=False), make_parcel(1, 1, qct=True),
                   make_parcel(2, 0, qct=True)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2,
                         requires_qct=True)
        registry = build_registry(city)
        assert not check(empty_state(city), [0, 1], registry).feasible
        assert check(empty_state(city), [1, 2], registry).feasible

    def test_missing_required_bit_violates(self):
        parcels = [make_parcel(0, 0, missing_bit=60), make_parcel(1, 1),
                   make_parcel(2, 0)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2)
        registry = build_registry(city)
        assert not check(empty_state(city), [0, 1], registry).feasible

    def test_minority_floor_terminal_only(self):
        parcels = [make_parcel(i, i % 2, minority=False) for i in range(4)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2)
        registry = build_registry(city)
        # partial portfolio: fairness not yet assessed
        assert check(empty_state(city), [0], registry).feasible
        report = check(empty_state(city), [0, 1], registry)
        assert not report.feasible
        cid = city.districts + 13
        assert cid in dict(report.violations)

    def test_gini_ceiling_at_terminal(self):
        # all sites in one of ten districts: Gini 0.9 > 0.85
        parcels = [make_parcel(i, 0) for i in range(5)] + [make_parcel(5, 9)]
        city = make_city(parcels, districts=10, budget=200.0, capacity=5)
        registry = build_registry(city)
        report = check(empty_state(city), [0, 1, 2, 3, 4], registry)
        cid = city.districts + 14
        assert cid in dict(report.violations)
        assert gini([5, 0, 0, 0, 0, 0, 0, 0, 0, 0]) > GINI_CEILING

    def test_unknown_parcel_rejected(self, small_city, small_registry):
        with pytest.raises(InvalidArgumentError, match="unknown parcel"):
            check(empty_state(small_city), [99], small_registry)

    def test_duplicate_action_rejected(self, small_city, small_registry):
        with pytest.raises(InvalidArgumentError, match="duplicate"):
            check(empty_state(small_city), [1, 1], small_registry)

    def test_already_selected_rejected(self, small_city, small_registry):
        arr = small_city.arrays()
        state = PortfolioState(selected=(2,), effective_costs=(float(arr.base_cost[2]),),
                               step_index=1, dyn_snapshot=arr.dyn.copy(),
                               capacity=small_city.portfolio_capacity)
        with pytest.raises(InvalidArgumentError, match="already selected"):
            check(state, [2], small_registry)

    def test_early_stop_checks_fewer(self):
        city = make_city([make_parcel(i, i % 2, cost=40.0) for i in range(4)],
                         districts=2, budget=50.0, capacity=2)
        registry = build_registry(city)
        full = check(empty_state(city), [0, 1], registry, mode="full")
        early = check(empty_state(city), [0, 1], registry, mode="early_stop")
        assert not early.feasible
        assert early.checked_count < full.checked_count
        assert len(early.violations) == 1


class TestCheckProperties:
    def test_early_stop_agrees_with_full_on_random_pairs(self):
        rng = np.random.default_rng(100)
        for seed in range(8):
            city = toy_city(n=10, capacity=3, districts=3, seed=seed)
            registry = build_registry(city)
            arr = city.arrays()
            for _ in range(250):
                k = int(rng.integers(0, 3))
                prior = tuple(int(v) for v in rng.choice(city.n, size=k, replace=False))
                state = PortfolioState(
                    selected=prior,
                    effective_costs=tuple(float(arr.base_cost[p]) for p in prior),
                    step_index=k, dyn_snapshot=arr.dyn.copy(),
                    capacity=city.portfolio_capacity)
                pool = [p for p in range(city.n) if p not in prior]
                m = int(rng.integers(1, min(3, len(pool)) + 1))
                action = [int(v) for v in rng.choice(pool, size=m, replace=False)]
                full = check(state, action, registry, mode="full")
                early = check(state, action, registry, mode="early_stop")
                assert full.feasible == early.feasible
                if not full.feasible:
                    assert early.first_violation == full.first_violation

    def test_penalty_zero_iff_feasible(self):
        rng = np.random.default_rng(200)
        for seed in range(5):
            city = toy_city(n=10, capacity=3, districts=3, seed=seed)
            registry = build_registry(city)
            state = empty_state(city)
            for _ in range(200):
                action = [int(v) for v in
                          rng.choice(city.n, size=city.portfolio_capacity, replace=False)]
                feasible = check(state, action, registry).feasible
                p = penalty(state, action, registry)
                assert (p == 0.0) == feasible
                assert p >= 0.0

    def test_penalty_is_sum_of_squared_magnitudes(self):
        city = make_city([make_parcel(i, 0, cost=40.0, minority=False)
                          for i in range(4)],
                         districts=2, budget=50.0, capacity=2)
        registry = build_registry(city)
        report = check(empty_state(city), [0, 1], registry)
        expected = sum(mag ** 2 for _, mag in report.violations)
        assert penalty(empty_state(city), [0, 1], registry) == pytest.approx(expected)


class TestRepair:
    def test_feasible_action_returned_unchanged(self):
        city = make_city([make_parcel(i, i % 3) for i in range(6)],
                         districts=3, budget=100.0, capacity=3)
        registry = build_registry(city)
        assert repair(empty_state(city), [0, 1, 2], registry) == [0, 1, 2]

    def test_repair_swaps_out_flood_parcel(self):
        parcels = [make_parcel(0, 0, flood=True, mitigation=False),
                   make_parcel(1, 1), make_parcel(2, 0), make_parcel(3, 1)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2)
        registry = build_registry(city)
        fixed = repair(empty_state(city), [0, 1], registry)
        assert fixed is not None
        assert 0 not in fixed
        assert check(empty_state(city), fixed, registry).feasible

    def test_repair_restores_minority_floor(self):
        parcels = ([make_parcel(i, i % 2, minority=False) for i in range(3)]
                   + [make_parcel(3, 1, minority=True)])
        city = make_city(parcels, districts=2, budget=100.0, capacity=3)
        registry = build_registry(city)
        fixed = repair(empty_state(city), [0, 1, 2], registry)
        assert fixed is not None
        assert check(empty_state(city), fixed, registry).feasible

    def test_repair_fails_explicitly_when_hopeless(self):
        # every parcel floods without mitigation: nothing to swap in
        parcels = [make_parcel(i, i % 2, flood=True, mitigation=False)
                   for i in range(4)]
        city = make_city(parcels, districts=2, budget=100.0, capacity=2)
        registry = build_registry(city)
        assert repair(empty_state(city), [0, 1], registry) is None

    def test_repair_output_always_feasible_or_none(self):
        rng = np.random.default_rng(300)
        outcomes = {"repaired": 0, "failed": 0}
        for seed in range(10):
            city = toy_city(n=12, capacity=3, districts=3, seed=seed)
            registry = build_registry(city)
            state = empty_state(city)
            for _ in range(60):
                action = [int(v) for v in rng.choice(city.n, size=3, replace=False)]
                fixed = repair(state, action, registry)
                if fixed is None:
                    outcomes["failed"] += 1
                else:
                    outcomes["repaired"] += 1
                    assert check(state, fixed, registry).feasible
                    assert 1 <= len(fixed) <= city.portfolio_capacity
        assert outcomes["repaired"] > 0   # the property must actually bite
