#!/usr/bin/env python3
"""
Evaluation Framework - Scores simulated corridor flows for the infrastructure manager
Computes Z = TAC revenue - monetized road externalities and the KPI table
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np
import pandas as pd

from demand import DemandModel, rail_cost
from network import Network
from pricing import TacScheme, lambda_at, packet_charge
from simulator import SimResult

logger = logging.getLogger(__name__)

TRAIN_EMISSION_G_PER_TKM = 23.0   # default diesel train
CARBON_CREDIT_EUR_PER_TCO2E = 54.21

KPI_COLUMNS = [
    'tac_revenue',
    'co2e_rights_value',
    'transport_cost',
    'delay_cost_saving',
    'avg_speed_kmh',
    'rail_mtons',
    'rail_share_pct',
    'rail_tkm',
    'completed_tkm',
    'road_tons',
    'loaded_trains',
    'completed_trains',
    'incomplete_trains',
]

# CSV headers carry units; names already ending in a unit are kept
KPI_HEADERS = {name: name for name in KPI_COLUMNS}
KPI_HEADERS.update({
    'tac_revenue': 'tac_revenue_eur',
    'co2e_rights_value': 'co2e_rights_value_eur',
    'transport_cost': 'transport_cost_eur',
    'delay_cost_saving': 'delay_cost_saving_eur',
})


class EvaluationError(ValueError):
    """An OD lacks the data needed to price its externalities"""


@dataclass(frozen=True)
class Policy:
    """Emission policy: η per t·km from the truck/train gap priced at the carbon credit"""
    name: str
    truck_emission_g_per_tkm: float
    train_emission_g_per_tkm: float = TRAIN_EMISSION_G_PER_TKM
    credit_eur_per_tco2e: float = CARBON_CREDIT_EUR_PER_TCO2E

    @property
    def eta_per_tkm(self) -> float:
        return (self.truck_emission_g_per_tkm - self.train_emission_g_per_tkm) * 1e-6 * self.credit_eur_per_tco2e

    def to_dict(self) -> Dict[str, float]:
        return {
            'name': self.name,
            'truck_emission_g_per_tkm': self.truck_emission_g_per_tkm,
            'train_emission_g_per_tkm': self.train_emission_g_per_tkm,
            'credit_eur_per_tco2e': self.credit_eur_per_tco2e,
            'eta_per_tkm': self.eta_per_tkm,
        }


POLICIES: Dict[str, Policy] = {
    'policy_1': Policy('policy_1', truck_emission_g_per_tkm=149.7),   # average EU truck
    'policy_2': Policy('policy_2', truck_emission_g_per_tkm=54.0),    # efficient truck
    'policy_3': Policy('policy_3', truck_emission_g_per_tkm=TRAIN_EMISSION_G_PER_TKM),  # no externality
}


@dataclass
class ObjectiveBreakdown:
    revenue_eur: float
    externality_eur: float
    path_revenue: Dict[str, float] = field(default_factory=dict)
    kpis: Dict[str, float] = field(default_factory=dict)

    @property
    def Z(self) -> float:
        return self.revenue_eur - self.externality_eur

    def to_dict(self) -> Dict[str, object]:
        return {
            'Z': self.Z,
            'revenue_eur': self.revenue_eur,
            'externality_eur': self.externality_eur,
            'path_revenue': dict(sorted(self.path_revenue.items())),
            'kpis': {name: self.kpis[name] for name in KPI_COLUMNS if name in self.kpis},
        }


class EvaluationFramework:
    """
    Objective and KPI evaluation over simulation results

    Metrics:
    - TAC revenue per path and in total
    - Road externality cost under an emission policy
    - Table of corridor KPIs (cost, delay, speed, modal share)
    """

    def __init__(self, network: Network, demand: DemandModel):
        self.network = network
        self.demand = demand

        self.eval_config = {
            'tons_per_mton': 1e6,
            'eta_distance_default': 'rail_path',  # OD distance falls back to its shortest rail path
        }

        logger.debug("📊 Evaluation Framework initialized")

    def eta_distance_km(self, od_id: str) -> float:
        od = self.demand.od_pairs[od_id]
        if od.eta_distance_km is not None:
            return od.eta_distance_km
        paths = self.network.paths_for_od(od_id)
        if not paths:
            raise EvaluationError(f"OD '{od_id}' has neither eta_distance_km nor a rail path")
        return min(p.length_km for p in paths)

    def revenue(self, result: SimResult, scheme: TacScheme) -> Dict[str, float]:
        """Λ_r per path plus a '__total__' entry; only completed trains pay"""
        cfg = result.config
        c_ell = self.demand.costs.rail_fixed_cost_per_tkm
        per_path = {pid: 0.0 for pid in self.network.path_ids()}
        for packet in result.completed_packets:
            path = self.network.paths[packet.path_id]
            lam = lambda_at(scheme, path, packet.departure_time, c_ell, cfg.t_max)
            tau = (packet.realized_travel_time if cfg.travel_time_basis == "realized"
                   else packet.tau_estimate_at_departure)
            per_path[packet.path_id] += packet_charge(
                lam, tau, cfg.delta_f, cfg.tons_per_packet, path.length_km, cfg.revenue_basis
            )
        per_path['__total__'] = sum(per_path.values())
        return per_path

    def externality_cost(self, result: SimResult, policy: Policy) -> float:
        """Σ_ω η·distance(ω)·road_tons(ω)"""
        eta = policy.eta_per_tkm
        if eta == 0:
            return 0.0
        return sum(
            eta * self.eta_distance_km(od_id) * tons['road']
            for od_id, tons in sorted(result.od_tons.items())
        )

    def kpis(self, result: SimResult, policy: Policy, revenue_eur: float) -> Dict[str, float]:
        cfg = result.config
        costs = self.demand.costs
        tons = cfg.tons_per_packet
        completed = result.completed_packets

        transport_cost = 0.0
        completed_tkm = 0.0
        delay_cost = 0.0
        speeds = []
        for packet in completed:
            path = self.network.paths[packet.path_id]
            breakdown = rail_cost(path, packet.realized_travel_time, packet.lambda_at_departure, costs)
            transport_cost += breakdown.total * path.length_km * tons
            completed_tkm += path.length_km * tons
            delay_cost += costs.delay_cost_per_t_h * (packet.realized_travel_time - path.reference_time_h) * tons
            speeds.append(path.length_km / packet.realized_travel_time)

        rail_tons = sum(t['rail'] for t in result.od_tons.values())
        road_tons = sum(t['road'] for t in result.od_tons.values())
        total_tons = sum(t['total'] for t in result.od_tons.values())
        co2e_value = sum(
            policy.eta_per_tkm * self.eta_distance_km(od_id) * t['rail']
            for od_id, t in sorted(result.od_tons.items())
        )
        loaded = [p for p in result.packets if not p.exogenous]
        rail_tkm = sum(tons * self.network.paths[p.path_id].length_km for p in loaded)

        return {
            'tac_revenue': revenue_eur,
            'co2e_rights_value': co2e_value,
            'transport_cost': transport_cost,
            'delay_cost_saving': delay_cost,
            'avg_speed_kmh': float(np.mean(speeds)) if speeds else 0.0,
            'rail_mtons': rail_tons / self.eval_config['tons_per_mton'],
            'rail_share_pct': 100.0 * rail_tons / total_tons if total_tons > 0 else 0.0,
            'rail_tkm': rail_tkm,
            'completed_tkm': completed_tkm,
            'road_tons': road_tons,
            'loaded_trains': float(len(loaded)),
            'completed_trains': float(len(completed)),
            'incomplete_trains': float(len(result.incomplete_packets)),
        }

    def objective(self, result: SimResult, scheme: TacScheme, policy: Policy) -> ObjectiveBreakdown:
        """Z = revenue - externality with KPIs filled"""
        per_path = self.revenue(result, scheme)
        total = per_path.pop('__total__')
        externality = self.externality_cost(result, policy)
        return ObjectiveBreakdown(
            revenue_eur=total,
            externality_eur=externality,
            path_revenue=per_path,
            kpis=self.kpis(result, policy, total),
        )


def kpi_frame(rows: Mapping[str, ObjectiveBreakdown]) -> pd.DataFrame:
    """KPI table, one row per label, unit-suffixed columns"""
    records: List[Dict[str, float]] = []
    for label, breakdown in rows.items():
        record: Dict[str, object] = {'label': label, 'Z_eur': breakdown.Z,
                                     'externality_eur': breakdown.externality_eur}
        for name in KPI_COLUMNS:
            record[KPI_HEADERS[name]] = breakdown.kpis.get(name, 0.0)
        records.append(record)
    columns = ['label', 'Z_eur', 'externality_eur'] + [KPI_HEADERS[n] for n in KPI_COLUMNS]
    return pd.DataFrame.from_records(records, columns=columns)


def resolve_policy(name: str, custom: Optional[Mapping[str, Policy]] = None) -> Policy:
    if custom and name in custom:
        return custom[name]
    if name in POLICIES:
        return POLICIES[name]
    known = sorted(set(POLICIES) | set(custom or {}))
    raise EvaluationError(f"Unknown policy '{name}', expected one of {known}")
