"""Objective formulas verified by hand-evaluated fixtures."""

import numpy as np
import pytest

from siteopt.metrics import gini
from siteopt.rewards import (
    DEFAULT_PARAMS,
    RewardParams,
    district_counts,
    future_outcome,
    portfolio_objectives,
    terminal_bonus,
)

from conftest import make_city, make_parcel


@pytest.fixture()
def two_parcel_city():
    parcels = [
        make_parcel(0, 0, walk=80.0, job_prox=0.6, carbon=120.0, green=0.7,
                    cost=30.0, minority=True),
        make_parcel(1, 1, walk=40.0, job_prox=0.2, carbon=300.0, green=0.1,
                    cost=10.0, minority=False),
        make_parcel(2, 1, walk=50.0, job_prox=0.5, carbon=200.0, green=0.5,
                    cost=20.0, minority=True),
    ]
    return make_city(parcels, districts=2, budget=100.0, capacity=2)


class TestPortfolioObjectives:
    def test_empty_portfolio_is_zero(self, two_parcel_city):
        assert tuple(portfolio_objectives(two_parcel_city, [])) == (0.0, 0.0, 0.0, 0.0)

    def test_hand_computed_fixture(self, two_parcel_city):
        v = portfolio_objectives(two_parcel_city, [0, 1])
        # accessibility: (80 + 40) + 10 * (0.6 + 0.2)
        assert v.accessibility == pytest.approx(128.0)
        # environment: -(120 + 300) + 100 * (0.7 + 0.1)
        assert v.environment == pytest.approx(-340.0)
        # cost: 30 + 10
        assert v.neg_cost == pytest.approx(-40.0)
        # equity: (1 - gini([1,1])) + 0.5 * minority share 0.5
        assert v.equity == pytest.approx(1.0 + 0.25)

    def test_effective_costs_override_base(self, two_parcel_city):
        v = portfolio_objectives(two_parcel_city, [0, 1],
                                 effective_costs=[33.0, 11.0])
        assert v.neg_cost == pytest.approx(-44.0)

    def test_equity_uses_district_dispersion(self, two_parcel_city):
        both_district_1 = portfolio_objectives(two_parcel_city, [1, 2])
        spread = portfolio_objectives(two_parcel_city, [0, 1])
        # concentrating both sites in one district raises Gini, lowering equity
        g_conc = gini(district_counts(two_parcel_city.arrays(), [1, 2], 2))
        g_spread = gini(district_counts(two_parcel_city.arrays(), [0, 1], 2))
        assert g_conc > g_spread
        assert both_district_1.equity < spread.equity + 0.5  # diversity differs too

    def test_beta_coefficients_scale_terms(self, two_parcel_city):
        params = RewardParams(beta1=0.0, beta2=0.0, beta4=0.0)
        v = portfolio_objectives(two_parcel_city, [0, 1], params=params)
        assert v.accessibility == pytest.approx(120.0)
        assert v.environment == pytest.approx(-420.0)
        assert v.equity == pytest.approx(1.0)

    def test_accessibility_weights_override(self, two_parcel_city):
        params = RewardParams(accessibility_weights=(2.0, 0.5, 1.0))
        v = portfolio_objectives(two_parcel_city, [0, 1], params=params)
        assert v.accessibility == pytest.approx(2.0 * 80 + 0.5 * 40 + 10 * 0.8)


class TestFutureOutcome:
    def test_empty_is_zero(self, two_parcel_city):
        assert future_outcome(two_parcel_city, []) == 0.0

    def test_hand_computed(self, two_parcel_city):
        # green mean 0.4, walk mean 60 -> 0.5*0.4 + 0.5*0.6
        assert future_outcome(two_parcel_city, [0, 1]) == pytest.approx(0.5)

    def test_bounded_unit_interval(self, desk_city):
        rng = np.random.default_rng(0)
        for _ in range(50):
            ids = rng.choice(desk_city.n, size=5, replace=False)
            assert 0.0 <= future_outcome(desk_city, ids) <= 1.0


class TestTerminalBonus:
    def test_discounting(self, two_parcel_city):
        bonus = terminal_bonus(two_parcel_city, [0, 1])
        expected = DEFAULT_PARAMS.gamma ** DEFAULT_PARAMS.horizon * 0.5
        assert bonus.environment == pytest.approx(expected)
        assert bonus.equity == pytest.approx(expected)
        assert bonus.accessibility == 0.0
        assert bonus.neg_cost == 0.0

    def test_horizon_parameter(self, two_parcel_city):
        short = terminal_bonus(two_parcel_city, [0, 1],
                               RewardParams(horizon=1))
        assert short.environment == pytest.approx(0.95 * 0.5)
