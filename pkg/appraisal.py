#!/usr/bin/env python3
"""
Appraisal - Social benefits and benefit-cost ratios of corridor investment
Externality savings intervals, FOC and social benefits, NPV of investment plans
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

EUR_PER_MEUR = 1e6

# Investment plan by period, B€; the last entry has no known timing
CORRIDOR_PLAN_PERIODS = (
    (2014, 2016, 1.362),
    (2017, 2020, 8.523),
    (2021, 2025, 30.447),
    (2026, 2030, 72.415),
    (2031, 2035, 32.498),
    (None, None, 1.123),
)


class AppraisalError(ValueError):
    """Invalid appraisal input"""


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise AppraisalError(f"Interval endpoints out of order: [{self.lower}, {self.upper}]")

    @classmethod
    def ordered(cls, a: float, b: float) -> 'Interval':
        return cls(min(a, b), max(a, b))

    @classmethod
    def point(cls, value: float) -> 'Interval':
        return cls(value, value)

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lower + other.lower, self.upper + other.upper)
        return Interval(self.lower + other, self.upper + other)

    __radd__ = __add__

    def scale(self, factor: float) -> 'Interval':
        return Interval.ordered(self.lower * factor, self.upper * factor)

    def to_list(self) -> List[float]:
        return [self.lower, self.upper]


@dataclass(frozen=True)
class ExternalityBounds:
    """External cost rates of road and rail haulage in €ct/(t·km)"""
    road_lower: float = 0.42
    road_upper: float = 8.82
    rail_lower: float = 0.06
    rail_upper: float = 0.74
    inflation_factor: float = 1.3785   # price level update of the reference figures

    def __post_init__(self):
        rates = (self.road_lower, self.road_upper, self.rail_lower, self.rail_upper)
        if any(r < 0 for r in rates) or self.inflation_factor <= 0:
            raise AppraisalError("Externality rates must be >= 0 and the inflation factor > 0")
        if self.road_lower > self.road_upper or self.rail_lower > self.rail_upper:
            raise AppraisalError("Externality lower bounds exceed upper bounds")

    @classmethod
    def from_references(cls, rows: Iterable[Mapping[str, float]], inflation_factor: float = 1.3785) -> 'ExternalityBounds':
        """Average per-reference road/rail lower/upper rates"""
        frame = pd.DataFrame(list(rows))
        if frame.empty:
            raise AppraisalError("No externality references given")
        missing = {'road_lower', 'road_upper', 'rail_lower', 'rail_upper'} - set(frame.columns)
        if missing:
            raise AppraisalError(f"Externality references lack columns {sorted(missing)}")
        means = frame.mean(numeric_only=True)
        return cls(
            road_lower=float(means['road_lower']),
            road_upper=float(means['road_upper']),
            rail_lower=float(means['rail_lower']),
            rail_upper=float(means['rail_upper']),
            inflation_factor=inflation_factor,
        )

    def to_dict(self) -> Dict[str, float]:
        return dict(vars(self))


@dataclass(frozen=True)
class InvestmentPlan:
    cash_flows: Tuple[Tuple[int, float], ...]   # (year, M€)
    discount_rate: float = 0.025
    tax_recovery_factor: float = 0.32
    base_year: int = 2023

    def __post_init__(self):
        if self.discount_rate < 0:
            raise AppraisalError(f"Discount rate must be >= 0, got {self.discount_rate}")
        if not 0 <= self.tax_recovery_factor < 1:
            raise AppraisalError(f"Tax recovery factor must lie in [0, 1), got {self.tax_recovery_factor}")

    @classmethod
    def from_periods(cls, periods: Sequence[Tuple[Optional[int], Optional[int], float]],
                     unit_to_meur: float = 1.0, **kwargs) -> 'InvestmentPlan':
        """
        Spread period totals uniformly over their years. A period without
        years is booked in the base year.
        """
        base_year = kwargs.get('base_year', 2023)
        flows: Dict[int, float] = {}
        for start, end, amount in periods:
            if start is None or end is None:
                years = [base_year]
            else:
                if end < start:
                    raise AppraisalError(f"Period {start}-{end} ends before it starts")
                years = list(range(start, end + 1))
            for year in years:
                flows[year] = flows.get(year, 0.0) + amount * unit_to_meur / len(years)
        return cls(tuple(sorted(flows.items())), **kwargs)

    @classmethod
    def corridor_default(cls, **kwargs) -> 'InvestmentPlan':
        return cls.from_periods(CORRIDOR_PLAN_PERIODS, unit_to_meur=1000.0, **kwargs)

    @property
    def span_years(self) -> int:
        years = [y for y, _ in self.cash_flows]
        return max(years) - min(years) + 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'cash_flows': [[y, a] for y, a in self.cash_flows],
            'discount_rate': self.discount_rate,
            'tax_recovery_factor': self.tax_recovery_factor,
            'base_year': self.base_year,
        }


@dataclass(frozen=True)
class NpvResult:
    npv_meur: float
    annualized_meur: float
    horizon_years: int


@dataclass(frozen=True)
class AppraisalParams:
    road_cost_per_tkm: float = 0.385
    rail_cost_per_tkm: Optional[float] = None   # defaults to the simulated average
    tax_recovery_factor: float = 0.32


@dataclass
class BenefitReport:
    tac_revenue: float
    externality_saving: Interval
    foc_benefit: float
    social_benefit: float
    shifted_tkm: float = 0.0
    bcr: Optional[Interval] = None

    @property
    def total(self) -> Interval:
        return self.externality_saving + (self.tac_revenue + self.foc_benefit + self.social_benefit)

    def with_bcr(self, annual_cost: float) -> 'BenefitReport':
        self.bcr = bcr(self.total, annual_cost)
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'tac_revenue_meur': self.tac_revenue,
            'externality_saving_meur': self.externality_saving.to_list(),
            'foc_benefit_meur': self.foc_benefit,
            'social_benefit_meur': self.social_benefit,
            'total_meur': self.total.to_list(),
            'shifted_tkm': self.shifted_tkm,
        }
        if self.bcr is not None:
            data['bcr_pct'] = self.bcr.to_list()
        return data


def externality_saving(tonkm_shifted: float, bounds: ExternalityBounds) -> Interval:
    """Euro value of externalities avoided by moving t·km from road to rail"""
    if tonkm_shifted < 0:
        raise AppraisalError(f"Shifted ton-km must be >= 0, got {tonkm_shifted}")
    lower = bounds.inflation_factor * (bounds.road_lower - bounds.rail_lower) / 100.0
    upper = bounds.inflation_factor * (bounds.road_upper - bounds.rail_upper) / 100.0
    return Interval.ordered(lower * tonkm_shifted, upper * tonkm_shifted)


def npv(plan: InvestmentPlan, horizon_years: Optional[int] = None, method: str = "average") -> NpvResult:
    """
    Present value at the base year net of tax recovery, plus its annualization

    `average` divides by the horizon, `annuity` uses the capital recovery factor.
    """
    if not plan.cash_flows:
        raise AppraisalError("Investment plan has no cash flows")
    years = np.array([y for y, _ in plan.cash_flows], dtype=float)
    amounts = np.array([a for _, a in plan.cash_flows], dtype=float)
    discount = (1.0 + plan.discount_rate) ** (years - plan.base_year)
    value = float(np.sum(amounts / discount)) * (1.0 - plan.tax_recovery_factor)

    horizon = horizon_years if horizon_years is not None else plan.span_years
    if horizon <= 0:
        raise AppraisalError(f"Annualization horizon must be > 0, got {horizon}")
    if method == "average":
        annual = value / horizon
    elif method == "annuity":
        r = plan.discount_rate
        annual = value / horizon if r == 0 else value * r / (1.0 - (1.0 + r) ** -horizon)
    else:
        raise AppraisalError(f"Unknown annualization method '{method}'")
    return NpvResult(value, annual, horizon)


def bcr(total: Interval, annual_cost: float) -> Interval:
    """Benefit-cost ratio in percent, endpoint-wise"""
    if not annual_cost > 0:
        raise AppraisalError(f"Annual cost must be > 0, got {annual_cost}")
    return total.scale(100.0 / annual_cost)


def _baseline_rail_tkm(sim_kpis: Mapping[str, float], baseline_kpis: Mapping[str, float]) -> float:
    if 'rail_tkm' in baseline_kpis:
        return float(baseline_kpis['rail_tkm'])
    if 'rail_share_pct' in baseline_kpis and 'total_tkm' in baseline_kpis:
        return float(baseline_kpis['rail_share_pct']) / 100.0 * float(baseline_kpis['total_tkm'])
    raise AppraisalError("Baseline needs rail_tkm, or rail_share_pct with total_tkm")


def benefit_report(sim_kpis: Mapping[str, float], baseline_kpis: Optional[Mapping[str, float]],
                   bounds: ExternalityBounds, params: AppraisalParams = AppraisalParams()) -> BenefitReport:
    """
    Benefits in M€ of a simulated scheme against a no-intervention baseline

    Components: TAC revenue, externality savings on the shifted t·km,
    freight operator delay savings attributable to the shift and the
    road/rail cost differential net of tax recovery.
    """
    if baseline_kpis is None:
        raise AppraisalError("A baseline is required to appraise benefits")
    for key in ('tac_revenue', 'rail_tkm'):
        if key not in sim_kpis:
            raise AppraisalError(f"Simulation KPIs lack '{key}'")

    rail_tkm = float(sim_kpis['rail_tkm'])
    shifted = rail_tkm - _baseline_rail_tkm(sim_kpis, baseline_kpis)
    if shifted < 0:
        logger.warning(f"⚠️ Scheme carries {-shifted:.4g} t·km less than the baseline, no shift credited")
        shifted = 0.0

    share_shifted = shifted / rail_tkm if rail_tkm > 0 else 0.0
    foc = -float(sim_kpis.get('delay_cost_saving', 0.0)) * share_shifted

    if params.rail_cost_per_tkm is not None:
        rail_cost_per_tkm = params.rail_cost_per_tkm
    elif 'transport_cost' in sim_kpis:
        # transport cost is summed over completed trains, so is its t·km basis
        if 'completed_tkm' not in sim_kpis:
            raise AppraisalError("Simulation KPIs carry transport_cost without completed_tkm")
        completed_tkm = float(sim_kpis['completed_tkm'])
        rail_cost_per_tkm = float(sim_kpis['transport_cost']) / completed_tkm if completed_tkm > 0 else 0.0
    else:
        rail_cost_per_tkm = 0.0
    social = (params.road_cost_per_tkm - rail_cost_per_tkm) * shifted * (1.0 - params.tax_recovery_factor)

    report = BenefitReport(
        tac_revenue=float(sim_kpis['tac_revenue']) / EUR_PER_MEUR,
        externality_saving=externality_saving(shifted, bounds).scale(1.0 / EUR_PER_MEUR),
        foc_benefit=foc / EUR_PER_MEUR,
        social_benefit=social / EUR_PER_MEUR,
        shifted_tkm=shifted,
    )
    logger.info(f"📊 Benefits on {shifted:.4g} shifted t·km: total {report.total.to_list()} M€")
    return report


def return_rate(ext_value_gain: float, revenue_ref: float, revenue_alt: float) -> float:
    """Emission value gained per unit of TAC revenue given up between two policies"""
    given_up = revenue_ref - revenue_alt
    if given_up == 0:
        raise AppraisalError("Revenues are equal, the return rate is undefined")
    return ext_value_gain / given_up


def bcr_frame(rows: Mapping[str, Tuple[Interval, float]]) -> pd.DataFrame:
    """BCR table: label → (total benefits, annual cost)"""
    records = []
    for label, (total, annual_cost) in rows.items():
        ratio = bcr(total, annual_cost)
        records.append({
            'label': label,
            'total_lower_meur': total.lower,
            'total_upper_meur': total.upper,
            'annual_cost_meur': annual_cost,
            'bcr_lower_pct': ratio.lower,
            'bcr_upper_pct': ratio.upper,
        })
    return pd.DataFrame.from_records(records, columns=[
        'label', 'total_lower_meur', 'total_upper_meur', 'annual_cost_meur', 'bcr_lower_pct', 'bcr_upper_pct',
    ])
