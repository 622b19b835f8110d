#!/usr/bin/env python3
"""
Demand Model - OD freight intensities, rail cost structure and logit modal split
Also solves the accumulation equation that times each train's entry at its connector
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from network import Path

logger = logging.getLogger(__name__)

# Returned by next_entry_time when the train cannot fill before T_max
BEYOND_HORIZON = math.inf


class DemandError(ValueError):
    """Invalid demand or cost input"""


class MissingAlphaError(DemandError):
    """An OD endpoint tag has no alpha constant in the logit parameters"""


@dataclass(frozen=True)
class ODPair:
    """
    Origin-destination pair ω with a piecewise-constant demand profile.

    `demand_profile` holds (start_h, tons_per_h) breakpoints in increasing
    order; demand is zero before the first breakpoint and the last rate
    holds until the horizon. Alphas are either given directly or resolved
    from the endpoint country tags.
    """
    id: str
    origin: str
    destination: str
    demand_profile: Tuple[Tuple[float, float], ...]
    road_cost_per_tkm: float = 0.385
    road_alpha_origin: Optional[float] = None
    road_alpha_dest: Optional[float] = None
    origin_tag: Optional[str] = None
    destination_tag: Optional[str] = None
    eta_distance_km: Optional[float] = None

    def rate_at(self, t: float) -> float:
        rate = 0.0
        for start, tons_per_h in self.demand_profile:
            if start <= t:
                rate = tons_per_h
            else:
                break
        return rate

    def pieces(self, t_from: float, t_to: float):
        """Yield (start, end, rate) constant pieces covering [t_from, t_to)"""
        starts = [s for s, _ in self.demand_profile]
        cuts = sorted({t_from, t_to, *[s for s in starts if t_from < s < t_to]})
        for a, b in zip(cuts, cuts[1:]):
            yield a, b, self.rate_at(a)

    def tons_between(self, t_from: float, t_to: float) -> float:
        return sum((b - a) * rate for a, b, rate in self.pieces(t_from, t_to))

    def total_tons(self, t_max: float) -> float:
        """D_ω = ∫_0^T_max D_ω(t) dt"""
        return self.tons_between(0.0, t_max)

    def violations(self) -> list:
        problems = []
        starts = [s for s, _ in self.demand_profile]
        if starts != sorted(starts) or len(set(starts)) != len(starts):
            problems.append(f"OD '{self.id}' demand breakpoints are not strictly increasing")
        if any(s < 0 for s in starts):
            problems.append(f"OD '{self.id}' has a demand breakpoint before t=0")
        if any(rate < 0 for _, rate in self.demand_profile):
            problems.append(f"OD '{self.id}' has negative demand")
        if not self.road_cost_per_tkm > 0:
            problems.append(f"OD '{self.id}' road cost must be > 0")
        return problems


@dataclass(frozen=True)
class CostParams:
    delay_cost_per_t_h: float = 2.23           # c_t
    rail_fixed_cost_per_tkm: float = 0.045     # c_ℓ
    reference_speed_kmh: float = 53.0          # v̄
    road_cost_default: float = 0.385           # C_road

    def violations(self) -> list:
        return [f"cost parameter {name} must be > 0" for name, value in vars(self).items() if not value > 0]


@dataclass(frozen=True)
class LogitParams:
    beta_rail: float = -149.8372
    beta_road: float = -13.5454
    alpha_by_tag: Dict[str, float] = field(default_factory=lambda: {
        'ES': 0.5520,
        'FR': 0.4589,
        'IT': 0.1356,
        'SL': 0.3512,
        'HK': 0.2220,
        'HU': 0.0,
    })


@dataclass(frozen=True)
class RailCostBreakdown:
    """Per ton-km rail cost components, all in €/(t·km)"""
    delay_component: float
    access_component: float
    fixed_component: float

    @property
    def total(self) -> float:
        return self.delay_component + self.access_component + self.fixed_component


def rail_cost(path: Path, tau_now: float, lambda_now: float, params: CostParams) -> RailCostBreakdown:
    """
    C_railway for a train path with live travel time `tau_now` (h) and
    charge intensity `lambda_now` (€/(t·km·h)).

    The delay term is clamped at zero when the train beats the commercial time.
    """
    if not tau_now > 0:
        raise DemandError(f"tau_now must be > 0, got {tau_now}")
    if not path.length_km > 0:
        raise DemandError(f"path '{path.id}' has non-positive length {path.length_km}")

    delay = params.delay_cost_per_t_h * (tau_now - path.reference_time_h) / path.length_km
    return RailCostBreakdown(
        delay_component=max(0.0, delay),
        access_component=lambda_now * tau_now,
        fixed_component=params.rail_fixed_cost_per_tkm,
    )


def rail_share(U_rail: float, V_road: float) -> float:
    """Binary logit exp(U)/(exp(V)+exp(U)), evaluated in log space"""
    return float(np.exp(U_rail - logsumexp([U_rail, V_road])))


def mode_shares(U_paths: Sequence[float], V_road: float) -> Tuple[np.ndarray, float]:
    """
    General logit over |R_ω| rail paths plus road.

    Returns (rail share per path, road share).
    """
    utilities = np.asarray([V_road, *U_paths], dtype=float)
    shares = np.exp(utilities - logsumexp(utilities))
    rail = shares[1:]
    return rail, float(1.0 - rail.sum())


def _resolve_alpha(value: Optional[float], tag: Optional[str], logit: LogitParams, od_id: str) -> float:
    if value is not None:
        return value
    if tag is None:
        return 0.0
    if tag not in logit.alpha_by_tag:
        raise MissingAlphaError(f"OD '{od_id}' uses tag '{tag}' with no alpha in the logit parameters")
    return logit.alpha_by_tag[tag]


def utilities(od: ODPair, cost: RailCostBreakdown, logit: LogitParams) -> Tuple[float, float]:
    """Linear utilities U = β_rail·C_railway and V = β_road·C_road + α_o + α_d"""
    alpha_o = _resolve_alpha(od.road_alpha_origin, od.origin_tag, logit, od.id)
    alpha_d = _resolve_alpha(od.road_alpha_dest, od.destination_tag, logit, od.id)
    U = logit.beta_rail * cost.total
    V = logit.beta_road * od.road_cost_per_tkm + alpha_o + alpha_d
    return U, V


def next_entry_time(od: ODPair, share: float, T_i: float, delta_f: float,
                    kappa: float, t_max: float) -> float:
    """
    Smallest T_j >= T_i with κ·share·∫_{T_i}^{T_j} D_ω(t) dt = Δf.

    Walks the constant demand pieces in order and solves each in closed form.
    Returns BEYOND_HORIZON when the train cannot fill by t_max.
    """
    if not (delta_f > 0 and kappa > 0):
        raise DemandError(f"delta_f and kappa must be > 0, got {delta_f}, {kappa}")
    if math.isnan(share) or share > 1.0:
        raise DemandError(f"share must lie in (0, 1), got {share}")
    if share <= 0.0 or T_i >= t_max:
        return BEYOND_HORIZON

    tons_needed = delta_f / (kappa * share)
    for start, end, rate in od.pieces(T_i, t_max):
        if rate <= 0:
            continue
        fill_time = max(0.0, tons_needed / rate)
        if start + fill_time <= end:
            return start + fill_time
        tons_needed -= rate * (end - start)
    return BEYOND_HORIZON


@dataclass(frozen=True)
class DemandModel:
    """OD pairs with the cost and logit parameters that split them"""
    od_pairs: Dict[str, ODPair]
    costs: CostParams = field(default_factory=CostParams)
    logit: LogitParams = field(default_factory=LogitParams)

    def total_tons(self, t_max: float) -> Dict[str, float]:
        return {od_id: od.total_tons(t_max) for od_id, od in sorted(self.od_pairs.items())}
