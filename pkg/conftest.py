#!/usr/bin/env python3
"""
Shared fixtures: small corridor networks, demand models and the bundled tutorial scenario
"""

from pathlib import Path

import numpy as np
import pytest

from demand import CostParams, DemandModel, LogitParams, ODPair
from network import (
    CENTROID, CONNECTOR, REGULAR, Arc, CapacityProfile, Network, Node, Path as TrainPath,
)

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def build_line_network(capacity=6.0, run_time_h=1.0, length_km=53.0, pattern=None, tracks=1,
                       od_ids=('od',)) -> Network:
    """O -> A -> B -> D with one regular arc; capacity None means unbounded"""
    nodes = {
        'O': Node('O', CENTROID, 'ES'),
        'A': Node('A'),
        'B': Node('B'),
        'D': Node('D', CENTROID, 'FR'),
    }
    if capacity is None:
        profile = None
    elif pattern is not None:
        profile = CapacityProfile.from_pattern(pattern, tracks)
    else:
        profile = CapacityProfile(capacity)
    arcs = {
        'c_o': Arc('c_o', 'O', 'A', CONNECTOR),
        'ab': Arc('ab', 'A', 'B', REGULAR, length_km, run_time_h, tracks, profile),
        'c_d': Arc('c_d', 'B', 'D', CONNECTOR),
    }
    net = Network(nodes=nodes, arcs=arcs, od_pairs={od: ('O', 'D') for od in od_ids})
    for od in od_ids:
        net.paths[f"{od}:r1"] = TrainPath.from_arcs(f"{od}:r1", od, ('c_o', 'ab', 'c_d'), arcs)
    return net


def build_random_scenario(rng: np.random.Generator):
    """Chain corridor with up to 4 regular nodes and up to 4 OD pairs sharing it"""
    m = int(rng.integers(2, 5))
    nodes = {'C_O': Node('C_O', CENTROID, 'ES'), 'C_D': Node('C_D', CENTROID, 'FR')}
    for i in range(m):
        nodes[f"N{i}"] = Node(f"N{i}")

    arcs = {'c_o': Arc('c_o', 'C_O', 'N0', CONNECTOR)}
    route = ['c_o']
    for i in range(m - 1):
        length = float(rng.uniform(50.0, 300.0))
        tracks = int(rng.integers(1, 3))
        if rng.random() < 0.5:
            profile = CapacityProfile.from_pattern('flat', tracks, float(rng.uniform(0.5, 3.0)))
        else:
            profile = CapacityProfile.from_pattern('passenger_priority', tracks)
        arc_id = f"a{i}"
        arcs[arc_id] = Arc(arc_id, f"N{i}", f"N{i + 1}", REGULAR, length,
                           length / float(rng.uniform(40.0, 90.0)), tracks, profile)
        route.append(arc_id)
    arcs['c_d'] = Arc('c_d', f"N{m - 1}", 'C_D', CONNECTOR)
    route.append('c_d')

    n_od = int(rng.integers(1, 5))
    od_pairs = {}
    net = Network(nodes=nodes, arcs=arcs)
    for j in range(n_od):
        od_id = f"od{j}"
        pieces = int(rng.integers(1, 4))
        starts = np.sort(rng.uniform(0.0, 100.0, size=pieces))
        starts[0] = 0.0
        profile = tuple((float(s), float(rng.uniform(0.0, 800.0))) for s in starts)
        od_pairs[od_id] = ODPair(od_id, 'C_O', 'C_D', profile,
                                 road_alpha_origin=float(rng.uniform(-6.0, 0.0)), road_alpha_dest=0.0)
        net.od_pairs[od_id] = ('C_O', 'C_D')
        net.paths[f"{od_id}:r1"] = TrainPath.from_arcs(f"{od_id}:r1", od_id, route, arcs)

    t_max = float(rng.uniform(48.0, 240.0))
    p = float(rng.uniform(0.0, 0.25))
    return net, DemandModel(od_pairs), t_max, p


@pytest.fixture
def line_network():
    return build_line_network


@pytest.fixture
def zero_demand():
    return DemandModel({'od': ODPair('od', 'O', 'D', ((0.0, 0.0),))})


@pytest.fixture
def steady_demand():
    def make(rate=2000.0, costs=None, logit=None, od_ids=('od',)):
        od_pairs = {od: ODPair(od, 'O', 'D', ((0.0, rate),)) for od in od_ids}
        return DemandModel(od_pairs, costs or CostParams(), logit or LogitParams())
    return make


@pytest.fixture
def tutorial_path() -> Path:
    return SCENARIO_DIR / "tutorial.json"


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def random_scenario():
    return build_random_scenario
