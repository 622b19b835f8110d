#!/usr/bin/env python3
"""
Scenario Loader - Reads corridor scenarios from JSON
Schema-validates the file, builds the network and demand model, fills missing paths
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from jsonschema import Draft202012Validator

from demand import CostParams, DemandModel, LogitParams, ODPair
from evaluation_framework import POLICIES, Policy, resolve_policy
from network import (
    CapacityProfile, Arc, Network, NetworkError, Node, Path as TrainPath,
    _path_violations, min_cost_path, validate_network,
)
from pricing import DEFAULT_BOUNDS
from simulator import SimConfig

logger = logging.getLogger(__name__)

_NUMBER = {'type': 'number'}
_POSITIVE = {'type': 'number', 'exclusiveMinimum': 0}
_NONNEGATIVE = {'type': 'number', 'minimum': 0}

SCENARIO_SCHEMA: Dict[str, Any] = {
    '$schema': 'https://json-schema.org/draft/2020-12/schema',
    'type': 'object',
    'required': ['network', 'demand', 'params'],
    'properties': {
        'name': {'type': 'string'},
        'network': {
            'type': 'object',
            'required': ['nodes', 'arcs'],
            'properties': {
                'nodes': {
                    'type': 'array',
                    'minItems': 1,
                    'items': {
                        'type': 'object',
                        'required': ['id'],
                        'properties': {
                            'id': {'type': 'string'},
                            'kind': {'enum': ['regular', 'centroid']},
                            'country_tag': {'type': ['string', 'null']},
                            'name': {'type': 'string'},
                        },
                    },
                },
                'arcs': {
                    'type': 'array',
                    'items': {
                        'type': 'object',
                        'required': ['id', 'from', 'to'],
                        'properties': {
                            'id': {'type': 'string'},
                            'from': {'type': 'string'},
                            'to': {'type': 'string'},
                            'kind': {'enum': ['regular', 'connector']},
                            'length_km': _NONNEGATIVE,
                            'run_time_h': _NONNEGATIVE,
                            'tracks_per_direction': {'type': 'integer', 'minimum': 1},
                            'capacity': {
                                'type': 'object',
                                'properties': {
                                    'pattern': {'type': 'string'},
                                    'trains_per_track_per_h': _POSITIVE,
                                    'base_trains_per_h': _POSITIVE,
                                    'daily_fractions': {
                                        'type': 'array',
                                        'items': {'type': 'array', 'items': _NUMBER, 'minItems': 3, 'maxItems': 3},
                                    },
                                },
                            },
                        },
                    },
                },
                'paths': {
                    'type': 'array',
                    'items': {
                        'type': 'object',
                        'required': ['id', 'od', 'arcs'],
                        'properties': {
                            'id': {'type': 'string'},
                            'od': {'type': 'string'},
                            'arcs': {'type': 'array', 'items': {'type': 'string'}, 'minItems': 1},
                        },
                    },
                },
            },
        },
        'demand': {
            'type': 'object',
            'required': ['od_pairs'],
            'properties': {
                'od_pairs': {
                    'type': 'array',
                    'minItems': 1,
                    'items': {
                        'type': 'object',
                        'required': ['id', 'origin', 'destination', 'profile'],
                        'properties': {
                            'id': {'type': 'string'},
                            'origin': {'type': 'string'},
                            'destination': {'type': 'string'},
                            'profile': {
                                'type': 'array',
                                'items': {'type': 'array', 'items': _NUMBER, 'minItems': 2, 'maxItems': 2},
                            },
                            'road_cost_per_tkm': _POSITIVE,
                            'alpha_origin': _NUMBER,
                            'alpha_destination': _NUMBER,
                            'origin_tag': {'type': 'string'},
                            'destination_tag': {'type': 'string'},
                            'eta_distance_km': _NONNEGATIVE,
                        },
                    },
                },
            },
        },
        'params': {
            'type': 'object',
            'required': ['logit', 't_max'],
            'properties': {
                'costs': {
                    'type': 'object',
                    'additionalProperties': False,
                    'properties': {
                        'delay_cost_per_t_h': _POSITIVE,
                        'rail_fixed_cost_per_tkm': _POSITIVE,
                        'reference_speed_kmh': _POSITIVE,
                        'road_cost_default': _POSITIVE,
                    },
                },
                'logit': {
                    'type': 'object',
                    'required': ['beta_railway', 'beta_road'],
                    'properties': {
                        'beta_railway': _NUMBER,
                        'beta_road': _NUMBER,
                        'alpha_by_tag': {'type': 'object', 'additionalProperties': _NUMBER},
                    },
                },
                'delta_f': _POSITIVE,
                'kappa': _POSITIVE,
                'prototype_train_tons': _POSITIVE,
                't_max': _POSITIVE,
                'revenue_basis': {'enum': ['train', 'tonkm']},
                'travel_time_basis': {'enum': ['realized', 'estimate']},
                'bounds': {'type': 'array', 'items': _NONNEGATIVE, 'minItems': 2, 'maxItems': 2},
            },
        },
        'policies': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['name', 'truck_emission_g_per_tkm'],
                'additionalProperties': False,
                'properties': {
                    'name': {'type': 'string'},
                    'truck_emission_g_per_tkm': _NONNEGATIVE,
                    'train_emission_g_per_tkm': _NONNEGATIVE,
                    'credit_eur_per_tco2e': _NONNEGATIVE,
                },
            },
        },
    },
}


class ScenarioError(ValueError):
    """Scenario file that cannot be loaded; `problems` lists each fault as 'field: message'"""

    def __init__(self, source: str, problems: List[str]):
        self.source = source
        self.problems = problems
        super().__init__(f"{source}: " + "; ".join(problems))


@dataclass
class Scenario:
    name: str
    network: Network
    demand: DemandModel
    sim_config: SimConfig
    bounds: Tuple[float, float] = DEFAULT_BOUNDS
    policies: Dict[str, Policy] = field(default_factory=lambda: dict(POLICIES))
    source: Optional[Path] = None

    def policy(self, name: str) -> Policy:
        return resolve_policy(name, self.policies)


def _schema_problems(data: Any) -> List[str]:
    validator = Draft202012Validator(SCENARIO_SCHEMA)
    problems = []
    for error in sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path]):
        location = "/".join(str(p) for p in error.absolute_path) or "<root>"
        problems.append(f"{location}: {error.message}")
    return problems


def _build_profile(arc_data: Dict[str, Any]) -> Optional[CapacityProfile]:
    capacity = arc_data.get('capacity')
    if capacity is None or arc_data.get('kind', 'regular') == 'connector':
        return None
    tracks = arc_data.get('tracks_per_direction', 1)
    if 'pattern' in capacity:
        kwargs = {}
        if 'trains_per_track_per_h' in capacity:
            kwargs['trains_per_track_per_h'] = capacity['trains_per_track_per_h']
        return CapacityProfile.from_pattern(capacity['pattern'], tracks, **kwargs)
    if 'base_trains_per_h' in capacity:
        rows = tuple(tuple(row) for row in capacity.get('daily_fractions', [[0, 24, 1.0]]))
        return CapacityProfile(capacity['base_trains_per_h'], rows)
    raise NetworkError(f"arc '{arc_data['id']}' capacity needs 'pattern' or 'base_trains_per_h'")


def build_scenario(data: Dict[str, Any], source: str = "<scenario>") -> Scenario:
    """Turn schema-valid scenario data into model objects"""
    problems: List[str] = []
    params = data['params']

    costs = CostParams(**params.get('costs', {}))
    problems.extend(f"params/costs: {p}" for p in costs.violations())
    logit_data = params['logit']
    logit = LogitParams(
        beta_rail=logit_data['beta_railway'],
        beta_road=logit_data['beta_road'],
        alpha_by_tag={**LogitParams().alpha_by_tag, **logit_data.get('alpha_by_tag', {})},
    )

    nodes = {}
    for n in data['network']['nodes']:
        nodes[n['id']] = Node(n['id'], n.get('kind', 'regular'), n.get('country_tag'), n.get('name'))
    arcs = {}
    for i, a in enumerate(data['network']['arcs']):
        try:
            profile = _build_profile(a)
        except NetworkError as e:
            problems.append(f"network/arcs/{i}/capacity: {e}")
            profile = None
        arcs[a['id']] = Arc(
            id=a['id'], from_node=a['from'], to_node=a['to'], kind=a.get('kind', 'regular'),
            length_km=a.get('length_km', 0.0), run_time_h=a.get('run_time_h', 0.0),
            tracks_per_direction=a.get('tracks_per_direction', 1), capacity_profile=profile,
        )

    od_pairs = {}
    for od in data['demand']['od_pairs']:
        od_pairs[od['id']] = ODPair(
            id=od['id'],
            origin=od['origin'],
            destination=od['destination'],
            demand_profile=tuple((float(s), float(r)) for s, r in od['profile']),
            road_cost_per_tkm=od.get('road_cost_per_tkm', costs.road_cost_default),
            road_alpha_origin=od.get('alpha_origin'),
            road_alpha_dest=od.get('alpha_destination'),
            origin_tag=od.get('origin_tag', nodes[od['origin']].country_tag if od['origin'] in nodes else None),
            destination_tag=od.get('destination_tag',
                                   nodes[od['destination']].country_tag if od['destination'] in nodes else None),
            eta_distance_km=od.get('eta_distance_km'),
        )
        problems.extend(f"demand/{od['id']}: {p}" for p in od_pairs[od['id']].violations())

    network = Network(nodes=nodes, arcs=arcs,
                      od_pairs={od_id: (od.origin, od.destination) for od_id, od in od_pairs.items()})
    for p in data['network'].get('paths', []):
        try:
            network.paths[p['id']] = TrainPath.from_arcs(p['id'], p['od'], p['arcs'], arcs, costs.reference_speed_kmh)
        except NetworkError as e:
            problems.append(f"network/paths/{p['id']}: {e}")

    problems.extend(f"network: {v}" for v in validate_network(network))
    if not problems:
        covered = {p.od_pair for p in network.paths.values()}
        for od_id in sorted(od_pairs):
            if od_id in covered:
                continue
            try:
                path = min_cost_path(network, od_id, costs.reference_speed_kmh)
                network.paths[path.id] = path
                problems.extend(f"network: {v}" for v in _path_violations(network, path.id, path))
                logger.info(f"🛤️ Computed path {path.id} for {od_id}: {path.length_km:.1f} km")
            except NetworkError as e:
                problems.append(f"network/paths/{od_id}: {e}")

    kappa = params.get('kappa')
    tons = params.get('prototype_train_tons')
    if kappa is not None and tons is not None and not math.isclose(kappa * tons, 1.0, rel_tol=1e-9):
        problems.append(f"params/kappa: kappa*prototype_train_tons = {kappa * tons}, expected 1")
    if kappa is None:
        kappa = 1.0 / tons if tons is not None else SimConfig.kappa

    bounds = tuple(params.get('bounds', DEFAULT_BOUNDS))
    if bounds[0] > bounds[1]:
        problems.append(f"params/bounds: lower {bounds[0]} exceeds upper {bounds[1]}")

    if problems:
        raise ScenarioError(source, problems)

    policies = dict(POLICIES)
    for p in data.get('policies', []):
        policies[p['name']] = Policy(**p)

    sim_config = SimConfig(
        t_max=float(params['t_max']),
        delta_f=float(params.get('delta_f', 1.0)),
        kappa=float(kappa),
        revenue_basis=params.get('revenue_basis', 'train'),
        travel_time_basis=params.get('travel_time_basis', 'realized'),
    )
    return Scenario(
        name=data.get('name', Path(source).stem),
        network=network,
        demand=DemandModel(od_pairs, costs, logit),
        sim_config=sim_config,
        bounds=bounds,
        policies=policies,
    )


def load_scenario(path) -> Scenario:
    """
    Load and validate a scenario file

    Raises:
        ScenarioError: unreadable JSON (with line/column), schema violations
            (with field paths) or aggregated network/demand faults
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ScenarioError(str(path), [f"<file>: {e}"]) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(str(path), [f"line {e.lineno} column {e.colno}: {e.msg}"]) from e

    problems = _schema_problems(data)
    if problems:
        raise ScenarioError(str(path), problems)

    scenario = build_scenario(data, str(path))
    scenario.source = path
    logger.info(
        f"✅ Loaded scenario '{scenario.name}': {len(scenario.network.nodes)} nodes, "
        f"{len(scenario.demand.od_pairs)} OD pairs, {len(scenario.network.paths)} paths"
    )
    return scenario
