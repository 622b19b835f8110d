#!/usr/bin/env python3
"""
Tests for externality savings, NPV, benefit reports and benefit-cost ratios
"""

import json
import logging
from pathlib import Path

import numpy as np
import pytest

from appraisal import (
    AppraisalError, AppraisalParams, BenefitReport, ExternalityBounds, Interval, InvestmentPlan,
    bcr, bcr_frame, benefit_report, externality_saving, npv, return_rate,
)

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def test_externality_saving_per_million_tkm():
    saving = externality_saving(1e6, ExternalityBounds())
    assert saving.lower == pytest.approx(4962.6, abs=0.05)
    assert saving.upper == pytest.approx(111382.8, abs=0.05)


def test_no_shift_saves_nothing():
    assert externality_saving(0.0, ExternalityBounds()) == Interval(0.0, 0.0)


def test_negative_shift_is_rejected():
    with pytest.raises(AppraisalError):
        externality_saving(-1.0, ExternalityBounds())


def test_bounds_from_reference_table():
    data = json.loads((SCENARIO_DIR / "externality_bounds.json").read_text())
    bounds = ExternalityBounds.from_references(data['references'], data['inflation_factor'])
    assert bounds.road_lower == pytest.approx(0.42)
    assert bounds.road_upper == pytest.approx(8.82)
    assert bounds.rail_lower == pytest.approx(0.06)
    assert bounds.rail_upper == pytest.approx(0.74)


def test_inverted_bounds_are_rejected():
    with pytest.raises(AppraisalError):
        ExternalityBounds(road_lower=9.0, road_upper=8.0)
    with pytest.raises(AppraisalError):
        ExternalityBounds.from_references([{'road_lower': 0.4}])


def test_npv_of_one_year_ahead_payment():
    plan = InvestmentPlan(((2024, 100.0),), discount_rate=0.025, tax_recovery_factor=0.0, base_year=2023)
    assert npv(plan).npv_meur == pytest.approx(97.5610, abs=1e-4)


def test_npv_without_discount_or_tax_is_plain_sum():
    plan = InvestmentPlan(((2020, 10.0), (2025, 20.0), (2030, 5.0)), discount_rate=0.0,
                          tax_recovery_factor=0.0)
    result = npv(plan, horizon_years=7)
    assert result.npv_meur == pytest.approx(35.0)
    assert result.annualized_meur == pytest.approx(5.0)


def test_npv_decreases_with_discount_rate():
    flows = tuple((2024 + i, 50.0 + i) for i in range(10))
    values = [npv(InvestmentPlan(flows, discount_rate=r)).npv_meur for r in np.linspace(0.0, 0.1, 11)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_tax_recovery_nets_the_investment():
    plan = InvestmentPlan(((2023, 100.0),), discount_rate=0.025, tax_recovery_factor=0.32)
    assert npv(plan).npv_meur == pytest.approx(68.0)


def test_annuity_annualization():
    plan = InvestmentPlan(((2023, 100.0),), discount_rate=0.05, tax_recovery_factor=0.0)
    result = npv(plan, horizon_years=10, method="annuity")
    assert result.annualized_meur == pytest.approx(100.0 * 0.05 / (1 - 1.05 ** -10))
    with pytest.raises(AppraisalError):
        npv(plan, method="geometric")


def test_corridor_plan_spreads_periods_over_years():
    plan = InvestmentPlan.corridor_default()
    assert sum(a for _, a in plan.cash_flows) == pytest.approx(146368.0)
    flows = dict(plan.cash_flows)
    assert flows[2014] == pytest.approx(1362.0 / 3)
    assert flows[2031] == pytest.approx(32498.0 / 5)
    # the undated period lands in the base year
    assert flows[2023] == pytest.approx(30447.0 / 5 + 1123.0)
    assert plan.span_years == 22


def test_plan_file_matches_builtin_plan():
    data = json.loads((SCENARIO_DIR / "investment_plan.json").read_text())
    plan = InvestmentPlan.from_periods([tuple(p) for p in data['periods']], data['unit_to_meur'],
                                       discount_rate=data['discount_rate'], base_year=data['base_year'])
    assert plan.cash_flows == InvestmentPlan.corridor_default().cash_flows


def test_bcr_anchor_policy_1_path_based():
    ratio = bcr(Interval(571.16, 1210.23), 2880.4)
    assert ratio.lower == pytest.approx(19.83, abs=0.01)
    assert ratio.upper == pytest.approx(42.02, abs=0.01)


def test_bcr_anchor_policy_2_proportional():
    ratio = bcr(Interval(368.87, 671.84), 2880.4)
    assert ratio.lower == pytest.approx(12.81, abs=0.01)
    assert ratio.upper == pytest.approx(23.32, abs=0.01)


def test_bcr_edge_cases():
    assert bcr(Interval.point(50.0), 50.0) == Interval(100.0, 100.0)
    assert bcr(Interval(10.0, 20.0), 40.0).upper == pytest.approx(bcr(Interval(10.0, 20.0), 20.0).upper / 2)
    with pytest.raises(AppraisalError):
        bcr(Interval(1.0, 2.0), 0.0)


def test_table_benefit_components_sum():
    report = BenefitReport(tac_revenue=105.51, externality_saving=Interval(91.00, 730.07),
                           foc_benefit=88.33, social_benefit=286.33)
    # components are published rounded to 0.01
    assert report.total.lower == pytest.approx(571.16, abs=1.01e-2)
    assert report.total.upper == pytest.approx(1210.23, abs=1.01e-2)


def test_return_rate_of_environmental_policy():
    assert return_rate(27.8, 125.27, 121.4) == pytest.approx(7.18, abs=0.01)
    with pytest.raises(AppraisalError):
        return_rate(1.0, 10.0, 10.0)


SIM_KPIS = {
    'tac_revenue': 2.0e6,
    'rail_tkm': 5.0e7,
    'delay_cost_saving': -1.0e6,
    'transport_cost': 2.5e6,
    'completed_tkm': 5.0e7,
}


def test_benefit_report_recomputed_by_hand():
    report = benefit_report(SIM_KPIS, {'rail_tkm': 2.0e7}, ExternalityBounds())
    shifted = 3.0e7
    assert report.shifted_tkm == pytest.approx(shifted)
    assert report.tac_revenue == pytest.approx(2.0)
    assert report.foc_benefit == pytest.approx(1.0 * shifted / 5.0e7)
    assert report.social_benefit == pytest.approx((0.385 - 0.05) * shifted * 0.68 / 1e6)
    assert report.externality_saving.lower == pytest.approx(1.3785 * 0.0036 * shifted / 1e6)
    assert report.externality_saving.upper == pytest.approx(1.3785 * 0.0808 * shifted / 1e6)
    total = report.total
    assert total.lower == pytest.approx(
        report.tac_revenue + report.externality_saving.lower + report.foc_benefit + report.social_benefit)
    assert total.lower <= total.upper


def test_rail_unit_cost_uses_completed_train_tkm():
    kpis = {**SIM_KPIS, 'completed_tkm': 2.5e7}
    report = benefit_report(kpis, {'rail_tkm': 2.0e7}, ExternalityBounds())
    assert report.social_benefit == pytest.approx((0.385 - 0.1) * 3.0e7 * 0.68 / 1e6)

    partial = {k: v for k, v in SIM_KPIS.items() if k != 'completed_tkm'}
    with pytest.raises(AppraisalError):
        benefit_report(partial, {'rail_tkm': 2.0e7}, ExternalityBounds())


def test_baseline_from_share_and_total():
    report = benefit_report(SIM_KPIS, {'rail_share_pct': 40.0, 'total_tkm': 5.0e7}, ExternalityBounds(),
                            AppraisalParams(rail_cost_per_tkm=0.06))
    assert report.shifted_tkm == pytest.approx(3.0e7)
    assert report.social_benefit == pytest.approx((0.385 - 0.06) * 3.0e7 * 0.68 / 1e6)


def test_zero_shift_leaves_only_revenue():
    report = benefit_report(SIM_KPIS, {'rail_tkm': 5.0e7}, ExternalityBounds())
    assert report.tac_revenue == pytest.approx(2.0)
    assert report.externality_saving == Interval(0.0, 0.0)
    assert report.foc_benefit == 0.0
    assert report.social_benefit == 0.0


def test_losing_rail_traffic_credits_no_shift(caplog):
    with caplog.at_level(logging.WARNING):
        report = benefit_report(SIM_KPIS, {'rail_tkm': 6.0e7}, ExternalityBounds())
    assert report.shifted_tkm == 0.0
    assert "less than the baseline" in caplog.text


def test_missing_baseline_is_rejected():
    with pytest.raises(AppraisalError):
        benefit_report(SIM_KPIS, None, ExternalityBounds())
    with pytest.raises(AppraisalError):
        benefit_report(SIM_KPIS, {'rail_share_pct': 10.0}, ExternalityBounds())


def test_bcr_table_layout():
    report = benefit_report(SIM_KPIS, {'rail_tkm': 2.0e7}, ExternalityBounds()).with_bcr(10.0)
    frame = bcr_frame({'policy_1': (report.total, 10.0)})
    assert list(frame.columns) == ['label', 'total_lower_meur', 'total_upper_meur', 'annual_cost_meur',
                                   'bcr_lower_pct', 'bcr_upper_pct']
    assert frame.loc[0, 'bcr_lower_pct'] == pytest.approx(report.bcr.lower)
    assert report.to_dict()['bcr_pct'] == report.bcr.to_list()
