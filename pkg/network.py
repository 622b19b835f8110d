#!/usr/bin/env python3
"""
Corridor Network - Graph, daily capacity schedules and freight paths
Answers time-dependent capacity queries and computes minimum-cost paths
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx

logger = logging.getLogger(__name__)

REGULAR = "regular"
CENTROID = "centroid"
CONNECTOR = "connector"

TRAINS_PER_TRACK_PER_HOUR = 6.0    # k_a = 6 * n_a
DEFAULT_REFERENCE_SPEED_KMH = 53.0  # commercial speed

# Daily residual-capacity patterns: (start_h, end_h, fraction), partitioning [0, 24)
DAILY_PATTERNS: Dict[str, Tuple[Tuple[float, float, float], ...]] = {
    'passenger_priority': (
        (0.0, 7.0, 1.0),
        (7.0, 10.0, 0.30),
        (10.0, 18.0, 0.15),
        (18.0, 24.0, 0.30),
    ),
    'flat': ((0.0, 24.0, 1.0),),
}


class NetworkError(ValueError):
    """Structural problem in the corridor network"""


class DisconnectedODError(NetworkError):
    """No route exists between the origin and destination of an OD pair"""


@dataclass(frozen=True)
class Node:
    id: str
    kind: str = REGULAR
    country_tag: Optional[str] = None
    name: Optional[str] = None


@dataclass(frozen=True)
class CapacityProfile:
    """
    Piecewise-constant daily schedule of freight-usable capacity.

    `daily_fractions` holds (start_h, end_h, fraction) rows that partition
    [0, 24); the schedule repeats every 24 h.
    """
    base_capacity_trains_per_h: float
    daily_fractions: Tuple[Tuple[float, float, float], ...] = DAILY_PATTERNS['flat']

    @classmethod
    def from_pattern(cls, pattern: str, tracks_per_direction: int = 1,
                     trains_per_track_per_h: float = TRAINS_PER_TRACK_PER_HOUR) -> 'CapacityProfile':
        if pattern not in DAILY_PATTERNS:
            raise NetworkError(f"Unknown daily capacity pattern '{pattern}'")
        return cls(trains_per_track_per_h * tracks_per_direction, DAILY_PATTERNS[pattern])

    def fraction_at(self, hour_of_day: float) -> float:
        for start, end, fraction in self.daily_fractions:
            if start <= hour_of_day < end:
                return fraction
        # hour_of_day is in [0, 24) so only a malformed profile lands here
        raise NetworkError(f"Daily profile does not cover hour {hour_of_day}")

    def violations(self) -> List[str]:
        problems = []
        if not self.base_capacity_trains_per_h > 0 or math.isinf(self.base_capacity_trains_per_h):
            problems.append(f"base capacity must be finite and > 0, got {self.base_capacity_trains_per_h}")
        rows = sorted(self.daily_fractions)
        cursor = 0.0
        for start, end, fraction in rows:
            if not math.isclose(start, cursor):
                problems.append(f"daily intervals leave a gap or overlap at hour {cursor}")
            if end <= start:
                problems.append(f"empty daily interval [{start}, {end})")
            if not 0.0 < fraction <= 1.0:
                problems.append(f"fraction {fraction} on [{start}, {end}) outside (0, 1]")
            cursor = end
        if not math.isclose(cursor, 24.0):
            problems.append(f"daily intervals end at {cursor}, not 24")
        return problems


@dataclass(frozen=True)
class Arc:
    id: str
    from_node: str
    to_node: str
    kind: str = REGULAR
    length_km: float = 0.0
    run_time_h: float = 0.0
    tracks_per_direction: int = 1
    capacity_profile: Optional[CapacityProfile] = None  # None means unbounded

    @property
    def is_connector(self) -> bool:
        return self.kind == CONNECTOR


@dataclass(frozen=True)
class Path:
    """
    Ordered arc sequence from origin connector to destination connector.

    `free_flow_time_h` is the sum of run times; `reference_time_h` is the
    commercial time ℓ_r / v̄_r. The two are independent.
    """
    id: str
    od_pair: str
    arcs: Tuple[str, ...]
    length_km: float
    free_flow_time_h: float
    reference_speed_kmh: float = DEFAULT_REFERENCE_SPEED_KMH

    @property
    def reference_time_h(self) -> float:
        return self.length_km / self.reference_speed_kmh

    @classmethod
    def from_arcs(cls, path_id: str, od_pair: str, arc_ids, arcs: Dict[str, Arc],
                  reference_speed_kmh: float = DEFAULT_REFERENCE_SPEED_KMH) -> 'Path':
        missing = [a for a in arc_ids if a not in arcs]
        if missing:
            raise NetworkError(f"Path {path_id} references unknown arcs {missing}")
        regular = [arcs[a] for a in arc_ids if not arcs[a].is_connector]
        return cls(
            id=path_id,
            od_pair=od_pair,
            arcs=tuple(arc_ids),
            length_km=sum(a.length_km for a in regular),
            free_flow_time_h=sum(arcs[a].run_time_h for a in arc_ids),
            reference_speed_kmh=reference_speed_kmh,
        )


@dataclass
class Network:
    """Corridor graph G = (V, A) with freight paths and the OD index"""
    nodes: Dict[str, Node] = field(default_factory=dict)
    arcs: Dict[str, Arc] = field(default_factory=dict)
    paths: Dict[str, Path] = field(default_factory=dict)
    od_pairs: Dict[str, Tuple[str, str]] = field(default_factory=dict)

    def paths_for_od(self, od_id: str) -> List[Path]:
        """R_ω in path-id order"""
        return [self.paths[p] for p in sorted(self.paths) if self.paths[p].od_pair == od_id]

    def paths_on_arc(self, arc_id: str) -> List[Path]:
        """R_a in path-id order"""
        return [self.paths[p] for p in sorted(self.paths) if arc_id in self.paths[p].arcs]

    def path_ids(self) -> List[str]:
        return sorted(self.paths)

    def to_graph(self) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph()
        for node in self.nodes.values():
            graph.add_node(node.id, kind=node.kind)
        for arc in self.arcs.values():
            graph.add_edge(arc.from_node, arc.to_node, key=arc.id,
                           length=0.0 if arc.is_connector else arc.length_km)
        return graph


def validate_network(net: Network) -> List[str]:
    """Check every structural invariant; returns one message per violation"""
    violations = []

    for node_id, node in net.nodes.items():
        if node.id != node_id:
            violations.append(f"node '{node_id}' is indexed under a different id '{node.id}'")
        if node.kind not in (REGULAR, CENTROID):
            violations.append(f"node '{node_id}' has unknown kind '{node.kind}'")

    for arc_id, arc in sorted(net.arcs.items()):
        for end in (arc.from_node, arc.to_node):
            if end not in net.nodes:
                violations.append(f"arc '{arc_id}' references unknown node '{end}'")
        if arc.length_km < 0:
            violations.append(f"arc '{arc_id}' has negative length {arc.length_km}")
        if arc.is_connector:
            if arc.run_time_h != 0:
                violations.append(f"connector '{arc_id}' has run_time_h={arc.run_time_h}, expected 0")
            if arc.capacity_profile is not None:
                violations.append(f"connector '{arc_id}' must have unbounded capacity")
        elif arc.kind == REGULAR:
            if not arc.run_time_h > 0:
                violations.append(f"regular arc '{arc_id}' has run_time_h={arc.run_time_h}, expected > 0")
            if arc.tracks_per_direction < 1:
                violations.append(f"regular arc '{arc_id}' has {arc.tracks_per_direction} tracks per direction")
            if arc.capacity_profile is None:
                violations.append(f"regular arc '{arc_id}' has no capacity profile")
            else:
                violations.extend(f"regular arc '{arc_id}': {p}" for p in arc.capacity_profile.violations())
            touches_centroid = any(
                net.nodes.get(end) is not None and net.nodes[end].kind == CENTROID
                for end in (arc.from_node, arc.to_node)
            )
            if touches_centroid:
                violations.append(f"regular arc '{arc_id}' attaches a centroid; only connectors may")
        else:
            violations.append(f"arc '{arc_id}' has unknown kind '{arc.kind}'")

    for od_id, (origin, destination) in sorted(net.od_pairs.items()):
        for end in (origin, destination):
            if end not in net.nodes:
                violations.append(f"OD '{od_id}' references unknown node '{end}'")

    for path_id, path in sorted(net.paths.items()):
        violations.extend(_path_violations(net, path_id, path))

    return violations


def _path_violations(net: Network, path_id: str, path: Path) -> List[str]:
    problems = []
    if path.od_pair not in net.od_pairs:
        problems.append(f"path '{path_id}' references unknown OD '{path.od_pair}'")
    if not path.arcs:
        return problems + [f"path '{path_id}' has no arcs"]
    missing = [a for a in path.arcs if a not in net.arcs]
    if missing:
        return problems + [f"path '{path_id}' references unknown arcs {missing}"]

    arcs = [net.arcs[a] for a in path.arcs]
    for prev, nxt in zip(arcs, arcs[1:]):
        if prev.to_node != nxt.from_node:
            problems.append(
                f"path '{path_id}' is not contiguous between '{prev.id}' and '{nxt.id}'"
            )
    if not arcs[0].is_connector or not arcs[-1].is_connector:
        problems.append(f"path '{path_id}' must start and end on connectors")
    if path.od_pair in net.od_pairs:
        origin, destination = net.od_pairs[path.od_pair]
        if arcs[0].from_node != origin or arcs[-1].to_node != destination:
            problems.append(f"path '{path_id}' does not join the endpoints of OD '{path.od_pair}'")
    if any(not a.is_connector for a in arcs) and not path.free_flow_time_h > 0:
        problems.append(f"path '{path_id}' has non-positive free-flow time")
    if not path.length_km > 0:
        problems.append(f"path '{path_id}' has non-positive rail length {path.length_km} km")
    return problems


def capacity_at(arc: Arc, t: float) -> float:
    """
    Residual freight capacity of an arc at time t, in trains per hour.

    The daily schedule is read at mod(t, 24); connectors are unbounded.
    """
    if t < 0:
        raise ValueError(f"capacity_at needs t >= 0, got {t}")
    if arc.is_connector or arc.capacity_profile is None:
        return math.inf
    profile = arc.capacity_profile
    if math.isinf(profile.base_capacity_trains_per_h):
        return math.inf
    return profile.base_capacity_trains_per_h * profile.fraction_at(math.fmod(t, 24.0))


def min_cost_path(net: Network, od_id: str,
                  reference_speed_kmh: float = DEFAULT_REFERENCE_SPEED_KMH,
                  path_id: Optional[str] = None) -> Path:
    """
    Minimum free-flow cost path for an OD pair.

    The metric is c_ℓ·ℓ_r, so ranking by regular-arc length is enough.
    Ties go to the lexicographically smallest arc-id sequence. Centroids other
    than the OD endpoints are never traversed.
    """
    if od_id not in net.od_pairs:
        raise NetworkError(f"Unknown OD pair '{od_id}'")
    origin, destination = net.od_pairs[od_id]

    graph = net.to_graph()
    allowed = nx.subgraph_view(
        graph,
        filter_node=lambda n: n in (origin, destination) or graph.nodes[n].get('kind') != CENTROID,
    )

    def weight(u, v, edges):
        return min(e['length'] for e in edges.values())

    try:
        node_paths = list(nx.all_shortest_paths(allowed, origin, destination, weight=weight))
    except (nx.NetworkXNoPath, nx.NodeNotFound) as e:
        raise DisconnectedODError(f"OD '{od_id}' ({origin} -> {destination}) is disconnected") from e

    best: Optional[Tuple[str, ...]] = None
    for node_path in node_paths:
        hops = []
        for u, v in zip(node_path, node_path[1:]):
            edges = allowed.get_edge_data(u, v)
            shortest = min(e['length'] for e in edges.values())
            hops.append(sorted(k for k, e in edges.items() if e['length'] == shortest))
        for combo in itertools.product(*hops):
            if best is None or combo < best:
                best = combo

    chosen = Path.from_arcs(path_id or f"{od_id}:r1", od_id, best, net.arcs, reference_speed_kmh)
    logger.debug(f"🛤️ Min-cost path for {od_id}: {' > '.join(chosen.arcs)} ({chosen.length_km:.1f} km)")
    return chosen
