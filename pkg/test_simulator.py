#!/usr/bin/env python3
"""
Tests for the discrete-event freight simulator
"""

import math

import numpy as np
import pytest

from demand import DemandModel, ODPair
from network import CENTROID, CONNECTOR, REGULAR, Arc, CapacityProfile, Network, Node, Path as TrainPath, capacity_at
from pricing import TacScheme
from simulator import (
    STATE0, STATE1, FreightSimulator, SimConfig, SimulationError, dwell_time, event_order, run,
)

ZERO = TacScheme.proportional(0.0)


def test_dwell_time_examples():
    assert dwell_time(1.0, 6.0) == pytest.approx(1.0 / 6.0)
    assert dwell_time(1.0, 0.9) == pytest.approx(10.0 / 9.0)
    assert dwell_time(2.0, 6.0) == pytest.approx(1.0 / 3.0)
    assert dwell_time(1.0, math.inf) == 0.0


def test_dwell_time_rejects_zero_capacity():
    with pytest.raises(SimulationError):
        dwell_time(1.0, 0.0)


def test_event_order_examples():
    assert event_order({1: 3.0, 2: 2.5}) == 2
    assert event_order({1: 2.5, 2: 2.5}) == 1
    assert event_order({7: 4.0}) == 7
    assert event_order({}) is None


def test_three_trains_queue_at_one_arc(line_network, zero_demand):
    """Entries spaced by Δf/k and exits one run time later"""
    net = line_network(capacity=6.0, run_time_h=1.0)
    result = run(net, zero_demand, ZERO, SimConfig(t_max=10.0), fixed_releases=[('od:r1', 0.0)] * 3)

    assert result.arc_entries['ab'] == pytest.approx([0.0, 1.0 / 6.0, 2.0 / 6.0])
    exits = sorted(p.realized_travel_time for p in result.completed_packets)
    assert exits == pytest.approx([1.0, 7.0 / 6.0, 8.0 / 6.0])
    assert all(p.exogenous for p in result.packets)
    assert result.od_tons['od']['rail'] == 0.0


def test_unbounded_capacity_gives_free_flow(line_network, zero_demand):
    net = line_network(capacity=None, run_time_h=2.5)
    releases = [('od:r1', t) for t in (0.0, 0.0, 0.0, 1.0, 1.0)]
    result = run(net, zero_demand, ZERO, SimConfig(t_max=20.0), fixed_releases=releases)
    assert len(result.completed_packets) == 5
    for packet in result.completed_packets:
        assert packet.realized_travel_time == pytest.approx(net.paths['od:r1'].free_flow_time_h)


def test_low_demand_never_loads_a_train(line_network, steady_demand):
    demand = steady_demand(rate=1.0)
    result = run(line_network(), demand, ZERO, SimConfig(t_max=100.0))
    assert result.packets == []
    assert result.od_tons['od']['rail'] == 0.0
    assert result.od_tons['od']['road'] == pytest.approx(100.0)


def test_trains_in_transit_at_horizon_are_incomplete(line_network, zero_demand):
    net = line_network(run_time_h=5.0)
    result = run(net, zero_demand, TacScheme.proportional(0.2), SimConfig(t_max=6.0),
                 fixed_releases=[('od:r1', 0.0), ('od:r1', 4.0)])
    assert len(result.completed_packets) == 1
    assert len(result.incomplete_packets) == 1
    stuck = result.incomplete_packets[0]
    assert stuck.realized_travel_time is None
    assert stuck.revenue_contribution == 0.0


def test_steady_demand_loads_trains(line_network, steady_demand):
    result = run(line_network(), steady_demand(rate=2000.0), ZERO, SimConfig(t_max=200.0))
    assert len(result.packets) > 0
    tons = result.od_tons['od']
    assert tons['rail'] == pytest.approx(len(result.packets) * 1600.0)
    assert tons['rail'] + tons['road'] == pytest.approx(tons['total'])
    departures = [p.departure_time for p in result.packets]
    assert departures == sorted(departures)


def test_higher_charge_moves_freight_to_road(line_network, steady_demand):
    demand = steady_demand(rate=2000.0)
    free = run(line_network(), demand, ZERO, SimConfig(t_max=300.0))
    charged = run(line_network(), demand, TacScheme.proportional(0.25), SimConfig(t_max=300.0))
    assert charged.od_tons['od']['rail'] < free.od_tons['od']['rail']


def test_trace_records_both_states(line_network, steady_demand):
    result = run(line_network(), steady_demand(rate=2000.0), ZERO, SimConfig(t_max=50.0))
    states = {r.state for r in result.trace}
    assert states == {STATE0, STATE1}
    assert all(r.packet_id is None for r in result.trace if r.state == STATE0)


def test_fixed_release_validation(line_network, zero_demand):
    sim = FreightSimulator(line_network(), zero_demand, SimConfig(t_max=10.0))
    with pytest.raises(SimulationError):
        sim.run(ZERO, fixed_releases=[('nope', 1.0)])
    with pytest.raises(SimulationError):
        sim.run(ZERO, fixed_releases=[('od:r1', 11.0)])


def test_malformed_inputs_are_rejected(line_network, zero_demand, steady_demand):
    with pytest.raises(SimulationError):
        FreightSimulator(line_network(), zero_demand, SimConfig(delta_f=0.0))
    net = line_network(od_ids=('od', 'other'))
    with pytest.raises(SimulationError, match="no demand entry"):
        FreightSimulator(net, steady_demand(od_ids=('od',)), SimConfig(t_max=10.0))


def test_zero_length_path_is_rejected_before_running(line_network, steady_demand):
    with pytest.raises(SimulationError, match="rail length"):
        run(line_network(length_km=0.0), steady_demand(), TacScheme.proportional(0.1), SimConfig(t_max=50.0))


def _check_capacity(result, net):
    for arc_id, entries in result.arc_entries.items():
        arc = net.arcs[arc_id]
        delta_f = result.config.delta_f
        for a, b in zip(entries, entries[1:]):
            assert b - a >= delta_f / capacity_at(arc, a) - 1e-9

        # entries per constant-capacity stretch of each day
        horizon = result.config.t_max
        for day in range(int(horizon // 24.0) + 1):
            for start, end, fraction in arc.capacity_profile.daily_fractions:
                s, e = day * 24.0 + start, day * 24.0 + end
                count = sum(1 for t in entries if s <= t < e)
                k = arc.capacity_profile.base_capacity_trains_per_h * fraction
                assert count <= math.ceil(k * (e - s) / delta_f) + 1


@pytest.mark.parametrize("seed", range(50))
def test_random_scenarios_hold_engine_invariants(seed, random_scenario):
    net, demand, t_max, p = random_scenario(np.random.default_rng(seed))
    config = SimConfig(t_max=t_max)
    result = run(net, demand, TacScheme.proportional(p), config)

    # clock never runs backwards
    times = [r.fire_time for r in result.trace]
    assert all(b >= a for a, b in zip(times, times[1:]))
    assert all(t <= t_max for t in times)

    # tonnage conservation and bounded road undershoot
    drift = sum(abs(t['rail'] + t['road'] - t['total']) for t in result.od_tons.values())
    assert drift <= len(result.od_tons) * config.tons_per_packet
    for tons in result.od_tons.values():
        assert tons['road'] >= -config.tons_per_packet

    _check_capacity(result, net)

    for packet in result.completed_packets:
        assert packet.realized_travel_time >= net.paths[packet.path_id].free_flow_time_h - 1e-9


def test_identical_runs_are_bit_identical(random_scenario):
    net, demand, t_max, p = random_scenario(np.random.default_rng(42))
    first = run(net, demand, TacScheme.proportional(p), SimConfig(t_max=t_max))
    second = run(net, demand, TacScheme.proportional(p), SimConfig(t_max=t_max))
    assert first.trace == second.trace
    assert first.packets == second.packets
    assert first.od_tons == second.od_tons


def test_throughput_and_speed_aggregates(line_network, zero_demand):
    releases = [('od:r1', t) for t in (0.0, 1.0, 25.0)]
    result = run(line_network(run_time_h=1.0, length_km=53.0), zero_demand, ZERO,
                 SimConfig(t_max=48.0), fixed_releases=releases)
    assert result.arc_throughput(24.0) == {'ab': {0: 2, 1: 1}}
    assert [v for _, v in result.speed_samples()] == pytest.approx([53.0, 53.0, 53.0])
    assert set(result.path_records()) == {'od:r1'}


def _merge_network(upper_run_h, lower_run_h, shared_capacity=2.0):
    """O1 -> A1 -> M and O2 -> A2 -> M feed the shared arc M -> N -> D"""
    nodes = {n: Node(n) for n in ('A1', 'A2', 'M', 'N')}
    nodes.update({n: Node(n, CENTROID) for n in ('O1', 'O2', 'D')})
    arcs = {
        'c1': Arc('c1', 'O1', 'A1', CONNECTOR),
        'c2': Arc('c2', 'O2', 'A2', CONNECTOR),
        'u1': Arc('u1', 'A1', 'M', REGULAR, 60.0, upper_run_h),
        'u2': Arc('u2', 'A2', 'M', REGULAR, 60.0, lower_run_h),
        'shared': Arc('shared', 'M', 'N', REGULAR, 50.0, 1.0, 1, CapacityProfile(shared_capacity)),
        'c_d': Arc('c_d', 'N', 'D', CONNECTOR),
    }
    net = Network(nodes=nodes, arcs=arcs, od_pairs={'od1': ('O1', 'D'), 'od2': ('O2', 'D')})
    net.paths['od1:r1'] = TrainPath.from_arcs('od1:r1', 'od1', ('c1', 'u1', 'shared', 'c_d'), arcs)
    net.paths['od2:r1'] = TrainPath.from_arcs('od2:r1', 'od2', ('c2', 'u2', 'shared', 'c_d'), arcs)
    demand = DemandModel({od: ODPair(od, o, 'D', ((0.0, 0.0),)) for od, o in (('od1', 'O1'), ('od2', 'O2'))})
    return net, demand


def _shared_arc_entries(result):
    return [(r.fire_time, r.event_id) for r in result.trace if r.arc == 'shared']


@pytest.mark.parametrize("upper_run_h", [1.0, 1.2])
def test_merging_trains_enter_shared_arc_in_event_order(upper_run_h):
    net, demand = _merge_network(upper_run_h, 1.0)
    releases = [('od2:r1', 0.0), ('od1:r1', 0.0), ('od2:r1', 0.0), ('od1:r1', 0.0)]
    result = run(net, demand, ZERO, SimConfig(t_max=10.0), fixed_releases=releases)

    entries = _shared_arc_entries(result)
    # ids 1 and 2 are the latent connector events; releases follow in list order
    assert [event_id for _, event_id in entries] == [3, 4, 5, 6]
    assert [t for t, _ in entries] == pytest.approx([1.0, 1.5, 2.0, 2.5])
    assert result.arc_entries['shared'] == pytest.approx([1.0, 1.5, 2.0, 2.5])
    by_packet = {p.packet_id: p.path_id for p in result.packets}
    assert [by_packet[i] for i in (1, 2, 3, 4)] == ['od2:r1', 'od1:r1', 'od2:r1', 'od1:r1']


def test_queue_order_holds_on_staggered_merges():
    net, demand = _merge_network(0.7, 1.3, shared_capacity=1.5)
    releases = [('od1:r1', t) for t in (0.0, 0.2, 0.4, 2.0)] + [('od2:r1', t) for t in (0.0, 0.1, 1.0, 2.0)]
    result = run(net, demand, ZERO, SimConfig(t_max=30.0), fixed_releases=releases)

    entries = _shared_arc_entries(result)
    assert len(entries) == len(releases)
    assert entries == sorted(entries)
    times = [t for t, _ in entries]
    gaps = np.diff(times)
    assert np.all(gaps >= 1.0 / 1.5 - 1e-9)
