import networkx as nx
import numpy as np
import pytest

from conftest import ground_link, isl_link
from stnoffload.network.channel import ChannelParams
from stnoffload.network.topology import TopologyError, build_graph
from stnoffload.sim.pathsel import (
    LinkWeight,
    PsruConfig,
    bottleneck_rate,
    feasible_candidates,
    oracle_select,
    psru_score,
    select_path,
    shortest_path,
    task_demand_bps,
)
from stnoffload.sim.workload import DEFAULT_LADDER, Task, TaskKind


def _monitoring(source=0, gs=5, data_bytes=1e5, deadline=2.0):
    return Task(
        id=0,
        kind=TaskKind.MONITORING,
        data_bytes=data_bytes,
        cycles_per_byte=200.0,
        deadline_s=deadline,
        source_edge=source,
        dest_ground_station=gs,
    )


def _video(source=0, user=6):
    return Task(
        id=1, kind=TaskKind.VIDEO, data_bytes=None, cycles_per_byte=80.0, deadline_s=5.0, source_edge=source,
        dest_user=user,
    )


def _block(g, key, leave=0):
    res, _ = g.try_reserve({key: g.link(*key).available_bps - leave})
    assert res is not None
    return res


def test_task_demand():
    assert task_demand_bps(_monitoring(data_bytes=1e5, deadline=2.0), DEFAULT_LADDER) == 400_000
    assert task_demand_bps(_monitoring(data_bytes=3.0, deadline=8.0), DEFAULT_LADDER) == 3
    assert task_demand_bps(_video(), DEFAULT_LADDER) == 1_000_000
    assert task_demand_bps(_video(), DEFAULT_LADDER, level=2) == 8_000_000


def test_psru_config_bounds():
    with pytest.raises(ValueError):
        PsruConfig(count_max=0)
    with pytest.raises(ValueError):
        PsruConfig(alpha_mix=1.5)


def _diamond():
    g = nx.DiGraph()
    for u, v, d in [(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0), (0, 4, 0.1), (4, 5, 0.1), (5, 3, 0.1)]:
        g.add_edge(u, v, distance=d)
    return g


def test_shortest_path_ties_and_exclusions():
    g = _diamond()
    hop = LinkWeight.HOP_COUNT
    assert shortest_path(g, 0, 3, hop).nodes == (0, 1, 3)
    assert shortest_path(g, 0, 3, hop, exclude={(0, 1, 3)}).nodes == (0, 2, 3)
    assert shortest_path(g, 0, 3, hop, exclude={(0, 1, 3), (0, 2, 3)}).nodes == (0, 4, 5, 3)
    assert shortest_path(g, 0, 3, hop, exclude={(0, 1, 3), (0, 2, 3), (0, 4, 5, 3)}) is None
    # by distance the three-hop path is shortest
    assert shortest_path(g, 0, 3).nodes == (0, 4, 5, 3)
    assert shortest_path(g, 3, 0) is None
    assert shortest_path(g, 0, 99) is None


def test_select_path_holds_its_reservation(toy_graph):
    g = toy_graph
    log = []
    chosen = select_path(_monitoring(), g, PsruConfig(), 400_000, decision_log=log)
    # the longer path crosses one more edge with free compute
    assert chosen.nodes == (0, 1, 2, 3, 5)
    assert chosen.reservation.links == {k: 400_000 for k in chosen.links}
    assert g.open_reservations == 1
    assert 0.0 <= chosen.score <= 1.0
    assert bottleneck_rate(chosen, g) == min(g.link(*k).capacity_bps for k in chosen.links)
    assert [c["nodes"] for c in log[0]["candidates"]] == [[0, 2, 3, 5], [0, 1, 2, 3, 5]]
    assert log[0]["chosen"] == [0, 1, 2, 3, 5]
    assert all(c["accepted"] for c in log[0]["candidates"])
    g.release(chosen.reservation)
    g.assert_ledger_closed()


def test_select_path_avoids_congested_link(toy_graph):
    g = toy_graph
    blocker = _block(g, (0, 2))
    log = []
    chosen = select_path(_monitoring(), g, PsruConfig(), 400_000, decision_log=log)
    assert chosen.nodes == (0, 1, 2, 3, 5)
    first = log[0]["candidates"][0]
    assert first["nodes"] == [0, 2, 3, 5] and not first["accepted"]
    # the congested link is pruned from the entry satellite's view
    assert not g.topology_view(3).has_edge(0, 2)
    g.release(chosen.reservation)
    g.release(blocker)
    g.assert_ledger_closed()


def test_no_path_leaves_ledger_unchanged(toy_graph):
    g = toy_graph
    blocker = _block(g, (2, 3), leave=1000)
    before = g.reservation_state()
    log = []
    assert select_path(_monitoring(), g, PsruConfig(), 400_000, decision_log=log) is None
    assert g.reservation_state() == before
    assert log[0]["chosen"] is None
    assert oracle_select(_monitoring(), g, PsruConfig(), 400_000) is None
    assert g.reservation_state() == before
    g.release(blocker)


def test_candidates_are_scored_against_the_same_state(toy_graph):
    g = toy_graph
    before = g.reservation_state()
    reference = {c.nodes: c.score for c in feasible_candidates(_monitoring(), g, PsruConfig(), 400_000)}
    assert g.reservation_state() == before
    log = []
    chosen = select_path(_monitoring(), g, PsruConfig(), 400_000, decision_log=log)
    # both candidates share links; the second is not scored under the first one's reservation
    for c in log[0]["candidates"]:
        assert c["score"] == pytest.approx(reference[tuple(c["nodes"])])
    assert chosen.score == pytest.approx(reference[chosen.nodes])
    assert g.open_reservations == 1
    g.release(chosen.reservation)
    assert g.reservation_state() == before


def test_video_path_ends_at_the_user(toy_graph):
    chosen = select_path(_video(), toy_graph, PsruConfig(), 1_000_000)
    assert chosen.nodes[0] == 0 and chosen.nodes[-1] == 6
    assert chosen.nodes[-2] == 5
    toy_graph.release(chosen.reservation)


def test_psru_score_mixes_links_and_compute(toy_graph):
    chosen = select_path(_monitoring(), toy_graph, PsruConfig(alpha_mix=1.0), 400_000)
    assert psru_score(chosen, PsruConfig(alpha_mix=1.0)) == pytest.approx(np.mean(chosen.avail_link_ratios))
    r_comp = sum(r for _, r in chosen.avail_comp_ratios) / len(chosen.links)
    assert psru_score(chosen, PsruConfig(alpha_mix=0.0)) == pytest.approx(r_comp)
    toy_graph.release(chosen.reservation)


def _random_graph(rng):
    """Random 7-node topology: two edges, a gateway, three satellites, a ground station."""
    while True:
        edge_caps = rng.integers(100_000_000, 1_000_000_000, size=2)
        nodes = [
            dict(id=0, kind="Edge", position=[0.0, 0.0, 0.0], compute_capacity=int(edge_caps[0])),
            dict(id=1, kind="Edge", position=[8e3, 0.0, 0.0], compute_capacity=int(edge_caps[1])),
            dict(id=2, kind="Gateway", position=[4e3, 4e3, 0.0]),
        ]
        for i, x in enumerate(rng.uniform(0.0, 600e3, size=3)):
            cap = int(rng.integers(1_000_000_000, 10_000_000_000))
            nodes.append(dict(id=3 + i, kind="Satellite", position=[x, 0.0, 550e3], compute_capacity=cap))
        nodes.append(dict(id=6, kind="GroundStation", position=[300e3, 0.0, 0.0]))

        def rate():
            return float(rng.uniform(5e6, 50e6))

        links = [ground_link(0, 2, rate()), ground_link(1, 2, rate()), ground_link(2, 3, rate(), band="Satellite")]
        if rng.random() < 0.7:
            links.append(ground_link(0, 1, rate(), bidirectional=True))
        if rng.random() < 0.5:
            links.append(ground_link(2, 4, rate(), band="Satellite"))
        for a, b in [(3, 4), (3, 5), (4, 5)]:
            if rng.random() < 0.6:
                links.append(isl_link(a, b))
        for s in (3, 4, 5):
            if rng.random() < 0.5:
                links.append(ground_link(s, 6, rate(), band="Satellite"))
        try:
            g = build_graph(dict(nodes=nodes, links=links), ChannelParams())
        except TopologyError:
            continue
        for key, link in sorted(g.links.items()):
            g.try_reserve({key: int(rng.uniform(0.0, 0.5) * link.capacity_bps)})
        for n in (0, 1, 3, 4, 5):
            g.try_reserve({}, {n: int(rng.uniform(0.0, 0.5) * g.node(n).compute_capacity)})
        return g


def test_exhaustive_psru_matches_oracle_on_random_graphs():
    rng = np.random.default_rng(11)
    full, default = PsruConfig(count_max=1000), PsruConfig()
    found = 0
    for _ in range(100):
        g = _random_graph(rng)
        for source in (0, 1):
            task = _monitoring(source=source, gs=6)
            best = oracle_select(task, g, full, 1000, commit_choice=False)
            heuristic = select_path(task, g, full, 1000)
            assert (best is None) == (heuristic is None)
            if best is None:
                continue
            found += 1
            assert heuristic.nodes == best.nodes
            assert heuristic.score == pytest.approx(best.score)
            g.release(heuristic.reservation)

            bounded = select_path(task, g, default, 1000)
            assert bounded.score <= best.score + 1e-12
            g.release(bounded.reservation)
    assert found >= 50
