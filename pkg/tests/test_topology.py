import copy
import math

import pytest

from conftest import toy_topology
from stnoffload.network.channel import ChannelParams
from stnoffload.network.topology import (
    LedgerError,
    NodeKind,
    TopologyError,
    build_graph,
    euclidean_distance,
    reachable_satellite_for_user,
    remove_link_from_view,
)
from stnoffload.sim.engine import Simulation


def test_preset_topology_counts(preset_cfg):
    g = Simulation(preset_cfg).graph
    assert len(g.nodes_of(NodeKind.EDGE)) == 10
    assert len(g.nodes_of(NodeKind.GATEWAY)) == 5
    assert len(g.nodes_of(NodeKind.GROUND_STATION)) == 3
    assert len(g.nodes_of(NodeKind.USER)) == 6
    # the satellites reached from gateways form the core
    assert {g.entry_satellite(e) for e in g.nodes_of(NodeKind.EDGE)} == {15, 16, 17}


def test_euclidean_distance(toy_graph):
    assert euclidean_distance(3, 4, toy_graph) == pytest.approx(800e3)
    assert euclidean_distance(3, 5, toy_graph) == pytest.approx(math.hypot(400e3, 550e3))
    assert euclidean_distance(5, 3, toy_graph) == euclidean_distance(3, 5, toy_graph)
    assert euclidean_distance(0, 0, toy_graph) == 0.0


def test_toy_graph_lookups(toy_graph):
    assert toy_graph.gateway_for_edge(0) == 2
    assert toy_graph.entry_satellite(1) == 3
    assert toy_graph.ground_station_for_user(6) == 5
    assert toy_graph.satellite_for_ground_station(5) == 3
    assert reachable_satellite_for_user(6, toy_graph) == 3
    # bidirectional links add both directions
    assert toy_graph.link(0, 1).key == (0, 1)
    assert toy_graph.link(1, 0).key == (1, 0)
    assert toy_graph.link(4, 3).is_isl


def _broken(mutate):
    topo = toy_topology()
    mutate(topo)
    return topo


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t["nodes"].append(dict(t["nodes"][0])),
        lambda t: t["nodes"][2].update(kind="Router"),
        lambda t: t["nodes"][2].update(compute_capacity=10),
        lambda t: t["links"].append(dict(t["links"][1], dst=0)),
        lambda t: t["links"].append(dict(t["links"][7], src=6, dst=5)),
        lambda t: t["links"][1].update(bandwidth_hz=-1.0),
        lambda t: t["links"].append(dict(t["links"][1], dst=42)),
        lambda t: t.update(sat_user_pairs=[]),
    ],
    ids=[
        "duplicate-id",
        "unknown-kind",
        "gateway-compute",
        "self-loop",
        "user-relay",
        "bandwidth",
        "unknown-node",
        "unpaired-user",
    ],
)
def test_invalid_topologies(mutate):
    with pytest.raises(TopologyError):
        build_graph(_broken(mutate), ChannelParams())


def test_gateways_cannot_link_to_each_other():
    topo = toy_topology()
    topo["nodes"].append(dict(id=7, kind="Gateway", position=[1.0, 1.0, 0.0], compute_capacity=0))
    topo["links"].append(dict(topo["links"][1], src=2, dst=7))
    with pytest.raises(TopologyError):
        build_graph(topo, ChannelParams())


def test_edge_must_reach_every_ground_station():
    topo = toy_topology()
    topo["links"] = [l for l in topo["links"] if (l["src"], l["dst"]) not in ((3, 5), (4, 5))]
    with pytest.raises(TopologyError):
        build_graph(topo, ChannelParams())


def test_try_reserve_is_all_or_nothing(toy_graph):
    g = toy_graph
    before = g.reservation_state()
    too_much = g.link(2, 3).capacity_bps + 1
    res, shortfall = g.try_reserve({(0, 2): 1000, (2, 3): too_much})
    assert res is None
    assert shortfall == ("link", (2, 3))
    assert g.reservation_state() == before

    res, shortfall = g.try_reserve({(0, 2): 1000.2, (2, 3): 500}, {0: 10})
    assert shortfall is None
    # amounts are rounded up to integers
    assert res.link_amount((0, 2)) == 1001
    assert g.link(0, 2).reserved_bps == 1001
    assert g.node(0).compute_reserved == 10
    assert g.open_reservations == 1

    g.release(res)
    assert g.reservation_state() == before
    g.assert_ledger_closed()
    with pytest.raises(LedgerError):
        g.release(res)


def test_augment_grows_reservation_atomically(toy_graph):
    g = toy_graph
    res, _ = g.try_reserve({(0, 2): 100})
    assert g.augment(res, {(0, 2): 50}, {3: 7}) is None
    assert res.link_amount((0, 2)) == 150 and res.compute_amount(3) == 7
    state = g.reservation_state()
    assert g.augment(res, {(0, 2): g.link(0, 2).capacity_bps}) == ("link", (0, 2))
    assert g.reservation_state() == state
    g.release(res)
    g.assert_ledger_closed()


def test_capacities_cannot_change_under_open_reservations(toy_graph):
    res, _ = toy_graph.try_reserve({(0, 2): 1})
    with pytest.raises(LedgerError):
        toy_graph.refresh_capacities(1, 0)
    toy_graph.release(res)
    toy_graph.refresh_capacities(1, 0)


def test_ledger_detects_leak(toy_graph):
    toy_graph.try_reserve({(0, 2): 1})
    with pytest.raises(LedgerError):
        toy_graph.assert_ledger_closed()


def test_topology_view_filters(toy_graph):
    view = toy_graph.reset_topology_view(3, egress=4)
    assert not view.has_edge(3, 5)
    assert view.has_edge(4, 5)
    assert view.has_edge(5, 6)
    # users never relay
    assert view.out_degree(6) == 0
    remove_link_from_view(3, (0, 2), toy_graph)
    assert not toy_graph.topology_view(3).has_edge(0, 2)
    assert toy_graph.graph.has_edge(0, 2)
    assert toy_graph.reset_topology_view(3).has_edge(0, 2)


def test_view_requires_satellite(toy_graph):
    with pytest.raises(TopologyError):
        toy_graph.reset_topology_view(2)


def test_unreachable_user():
    topo = copy.deepcopy(toy_topology())
    topo["nodes"].append(dict(id=7, kind="User", position=[0.0, 1.0, 0.0], compute_capacity=0))
    topo["links"].append(dict(topo["links"][7], dst=7))
    topo["sat_user_pairs"].append(dict(satellite=4, users=[7]))
    g = build_graph(topo, ChannelParams())
    assert reachable_satellite_for_user(7, g) == 4
    with pytest.raises(TopologyError):
        reachable_satellite_for_user(5, g)
