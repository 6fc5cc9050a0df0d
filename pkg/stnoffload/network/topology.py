"""
Satellite-terrestrial network graph.

Nodes and directed links carry integer capacities and reservations so that
the reservation ledger balances exactly. Structure lives in a networkx
DiGraph; each satellite also owns a topology view (a DiGraph copy) that path
selection prunes while it searches.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from .channel import ChannelParams, link_rate, sample_gain

logger = logging.getLogger(__name__)


class TopologyError(ValueError):
    pass


class LedgerError(AssertionError):
    pass


class NodeKind(str, Enum):
    DEVICE = "Device"
    EDGE = "Edge"
    GATEWAY = "Gateway"
    SATELLITE = "Satellite"
    GROUND_STATION = "GroundStation"
    USER = "User"


class Band(str, Enum):
    GROUND = "Ground"
    SATELLITE = "Satellite"


COMPUTE_KINDS = (NodeKind.EDGE, NodeKind.SATELLITE)

LinkKey = Tuple[int, int]


@dataclass
class Node:
    id: int
    kind: NodeKind
    position: Tuple[float, float, float]
    compute_capacity: int = 0
    compute_reserved: int = 0

    @property
    def is_compute(self):
        return self.kind in COMPUTE_KINDS and self.compute_capacity > 0

    @property
    def compute_available(self):
        return self.compute_capacity - self.compute_reserved

    @property
    def availability(self):
        if self.compute_capacity <= 0:
            return 0.0
        return self.compute_available / self.compute_capacity


@dataclass
class Link:
    src: int
    dst: int
    band: Band
    bandwidth_hz: float
    tx_power_w: float
    antenna_gain_tx: float = 1.0
    antenna_gain_rx: float = 1.0
    gain_mean: float = 1.0
    gain_sigma: float = 0.0
    is_isl: bool = False
    capacity_bps: int = 0
    reserved_bps: int = 0
    # channel power gain drawn at the last capacity refresh
    gain: float = 1.0

    @property
    def key(self) -> LinkKey:
        return (self.src, self.dst)

    @property
    def available_bps(self):
        return self.capacity_bps - self.reserved_bps

    @property
    def availability(self):
        if self.capacity_bps <= 0:
            return 0.0
        return self.available_bps / self.capacity_bps


@dataclass
class Reservation:
    """Handle for one atomic reservation; amounts are integers."""

    links: Dict[LinkKey, int] = field(default_factory=dict)
    compute: Dict[int, int] = field(default_factory=dict)
    released: bool = False

    def link_amount(self, key):
        return self.links.get(key, 0)

    def compute_amount(self, node_id):
        return self.compute.get(node_id, 0)


def euclidean_distance(a, b, g):
    """Distance in meters between nodes ``a`` and ``b``."""
    return math.dist(g.node(a).position, g.node(b).position)


class NetworkGraph(object):
    def __init__(self, nodes: List[Node], links: Dict[LinkKey, Link], sat_user_pairs, channel: ChannelParams):
        self.nodes = nodes
        self.links = links
        self.sat_user_pairs: Dict[int, FrozenSet[int]] = sat_user_pairs
        self.channel = channel
        self.graph = nx.DiGraph()
        for node in nodes:
            self.graph.add_node(node.id, kind=node.kind)
        for (u, v), link in sorted(links.items()):
            self.graph.add_edge(u, v, distance=math.dist(nodes[u].position, nodes[v].position))
        self.topology_views: Dict[int, nx.DiGraph] = {}
        self._reserved_total = [0, 0]  # bps, cycles/s
        self._released_total = [0, 0]
        self._open = 0

    # ---- queries ----

    def node(self, node_id) -> Node:
        if not isinstance(node_id, int) or node_id < 0 or node_id >= len(self.nodes):
            raise TopologyError(f"invalid node id {node_id!r}")
        return self.nodes[node_id]

    def link(self, u, v) -> Link:
        try:
            return self.links[(u, v)]
        except KeyError:
            raise TopologyError(f"no link {u}->{v}")

    def nodes_of(self, kind):
        return [n.id for n in self.nodes if n.kind == kind]

    def distance(self, a, b):
        return euclidean_distance(a, b, self)

    def path_links(self, nodes) -> List[Link]:
        return [self.link(u, v) for u, v in zip(nodes[:-1], nodes[1:])]

    def _lowest(self, candidates, what, whom):
        candidates = sorted(candidates)
        if not candidates:
            raise TopologyError(f"no {what} for node {whom}")
        return candidates[0]

    def gateway_for_edge(self, edge_id):
        """Lowest-id gateway reachable from the edge over edge-to-edge links."""
        seen, frontier = {edge_id}, [edge_id]
        gateways = set()
        while frontier:
            nxt = []
            for u in frontier:
                for v in self.graph.successors(u):
                    kind = self.nodes[v].kind
                    if kind == NodeKind.GATEWAY:
                        gateways.add(v)
                    elif kind == NodeKind.EDGE and v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return self._lowest(gateways, "gateway", edge_id)

    def entry_satellite(self, edge_id):
        gw = self.gateway_for_edge(edge_id)
        sats = [v for v in self.graph.successors(gw) if self.nodes[v].kind == NodeKind.SATELLITE]
        return self._lowest(sats, "uplink satellite", gw)

    def ground_station_for_user(self, user_id):
        gss = [u for u in self.graph.predecessors(user_id) if self.nodes[u].kind == NodeKind.GROUND_STATION]
        return self._lowest(gss, "ground station", user_id)

    def satellite_for_ground_station(self, gs_id):
        sats = [u for u in self.graph.predecessors(gs_id) if self.nodes[u].kind == NodeKind.SATELLITE]
        return self._lowest(sats, "downlink satellite", gs_id)

    # ---- topology views ----

    def reset_topology_view(self, s, egress=None):
        """Fresh view for satellite ``s``; only ``egress`` may deliver to ground stations."""
        if self.node(s).kind != NodeKind.SATELLITE:
            raise TopologyError(f"node {s} is not a satellite")

        def keep(u, v):
            ku, kv = self.nodes[u].kind, self.nodes[v].kind
            if ku in (NodeKind.USER, NodeKind.DEVICE) or kv == NodeKind.DEVICE:
                return False
            if ku == NodeKind.GROUND_STATION and kv != NodeKind.USER:
                return False
            if ku == NodeKind.SATELLITE and kv == NodeKind.GROUND_STATION and egress is not None:
                return u == egress
            return True

        view = nx.DiGraph(nx.subgraph_view(self.graph, filter_edge=keep))
        self.topology_views[s] = view
        return view

    def topology_view(self, s):
        if s not in self.topology_views:
            return self.reset_topology_view(s)
        return self.topology_views[s]

    # ---- reservations ----

    def _first_shortfall(self, link_demands, compute_demands):
        for key, amount in link_demands.items():
            if amount > self.link(*key).available_bps:
                return ("link", key)
        for node_id, amount in compute_demands.items():
            if amount > self.node(node_id).compute_available:
                return ("node", node_id)
        return None

    def _apply(self, link_demands, compute_demands, sign):
        for key, amount in link_demands.items():
            self.links[key].reserved_bps += sign * amount
        for node_id, amount in compute_demands.items():
            self.nodes[node_id].compute_reserved += sign * amount
        self._check_touched(link_demands, compute_demands)

    def _check_touched(self, link_demands, compute_demands):
        for key in link_demands:
            link = self.links[key]
            if not 0 <= link.reserved_bps <= link.capacity_bps:
                raise LedgerError(f"link {key} reserved {link.reserved_bps} of {link.capacity_bps}")
        for node_id in compute_demands:
            node = self.nodes[node_id]
            if not 0 <= node.compute_reserved <= node.compute_capacity:
                raise LedgerError(f"node {node_id} reserved {node.compute_reserved} of {node.compute_capacity}")

    @staticmethod
    def _as_int_demands(demands):
        out = {}
        for k, v in (demands or {}).items():
            if v < 0:
                raise LedgerError(f"negative demand {v} for {k}")
            if v:
                out[k] = int(math.ceil(v))
        return out

    def try_reserve(self, link_demands, compute_demands=None):
        """Reserve everything or nothing.

        Returns ``(Reservation, None)`` on success, otherwise ``(None, shortfall)``
        where shortfall is ``("link", (u, v))`` or ``("node", id)``, the first
        element (links in the given order first) that cannot hold its demand.
        """
        link_demands = self._as_int_demands(link_demands)
        compute_demands = self._as_int_demands(compute_demands)
        shortfall = self._first_shortfall(link_demands, compute_demands)
        if shortfall is not None:
            return None, shortfall
        self._apply(link_demands, compute_demands, +1)
        self._reserved_total[0] += sum(link_demands.values())
        self._reserved_total[1] += sum(compute_demands.values())
        self._open += 1
        return Reservation(links=link_demands, compute=compute_demands), None

    def augment(self, reservation: Reservation, link_demands=None, compute_demands=None):
        """Grow an open reservation atomically; returns the shortfall or None."""
        if reservation.released:
            raise LedgerError("cannot augment a released reservation")
        link_demands = self._as_int_demands(link_demands)
        compute_demands = self._as_int_demands(compute_demands)
        shortfall = self._first_shortfall(link_demands, compute_demands)
        if shortfall is not None:
            return shortfall
        self._apply(link_demands, compute_demands, +1)
        for key, amount in link_demands.items():
            reservation.links[key] = reservation.links.get(key, 0) + amount
        for node_id, amount in compute_demands.items():
            reservation.compute[node_id] = reservation.compute.get(node_id, 0) + amount
        self._reserved_total[0] += sum(link_demands.values())
        self._reserved_total[1] += sum(compute_demands.values())
        return None

    def release(self, reservation: Reservation):
        if reservation.released:
            raise LedgerError("reservation released twice")
        self._apply(reservation.links, reservation.compute, -1)
        self._released_total[0] += sum(reservation.links.values())
        self._released_total[1] += sum(reservation.compute.values())
        reservation.released = True
        self._open -= 1

    @property
    def open_reservations(self):
        return self._open

    def assert_ledger_closed(self):
        if self._open != 0:
            raise LedgerError(f"{self._open} reservations still open")
        if self._reserved_total != self._released_total:
            raise LedgerError(f"reserved {self._reserved_total} != released {self._released_total}")
        for link in self.links.values():
            if link.reserved_bps != 0:
                raise LedgerError(f"link {link.key} still holds {link.reserved_bps} bps")
        for node in self.nodes:
            if node.compute_reserved != 0:
                raise LedgerError(f"node {node.id} still holds {node.compute_reserved} cycles/s")

    def reservation_state(self):
        """Exact copy of every reserved amount, for before/after comparisons."""
        return (
            tuple(sorted((k, l.reserved_bps) for k, l in self.links.items())),
            tuple(n.compute_reserved for n in self.nodes),
        )

    def snapshot(self):
        link_util = [1.0 - l.availability for l in self.links.values() if l.capacity_bps > 0]
        comp_util = [1.0 - n.availability for n in self.nodes if n.compute_capacity > 0]
        return dict(
            links_reserved_bps=sum(l.reserved_bps for l in self.links.values()),
            compute_reserved_cps=sum(n.compute_reserved for n in self.nodes),
            max_link_util=max(link_util, default=0.0),
            max_comp_util=max(comp_util, default=0.0),
        )

    # ---- channel ----

    def refresh_capacities(self, step, seed):
        """Redraw channel gains for ``step`` and recompute every link capacity."""
        if self._open:
            raise LedgerError("capacities cannot change while reservations are open")
        for key in sorted(self.links):
            link = self.links[key]
            link.gain = link.gain_mean if link.is_isl else sample_gain(link, step, seed)
            rate = link_rate(link, self.graph.edges[key]["distance"], self.channel, link.gain)
            link.capacity_bps = int(math.floor(rate))


def reachable_satellite_for_user(u, g: NetworkGraph):
    """Destination satellite recorded for user ``u``, lowest id on ties."""
    if g.node(u).kind != NodeKind.USER:
        raise TopologyError(f"node {u} is not a user")
    sats = [s for s, users in g.sat_user_pairs.items() if u in users]
    if not sats:
        raise TopologyError(f"unreachable user {u}: not present in any satellite-user pair")
    return min(sats)


def remove_link_from_view(s, link, g: NetworkGraph):
    view = g.topology_view(s)
    if view.has_edge(*link):
        view.remove_edge(*link)
    return view


def _parse_nodes(node_cfgs):
    if not node_cfgs:
        raise TopologyError("topology has no nodes")
    nodes, seen = {}, set()
    for nc in node_cfgs:
        nid = nc["id"]
        if nid in seen:
            raise TopologyError(f"duplicate node id {nid}")
        seen.add(nid)
        try:
            kind = NodeKind(nc["kind"])
        except ValueError:
            raise TopologyError(f"node {nid}: unknown kind {nc['kind']!r}")
        position = tuple(float(x) for x in nc["position"])
        if len(position) != 3:
            raise TopologyError(f"node {nid}: position must have 3 coordinates")
        capacity = int(nc.get("compute_capacity", 0))
        if capacity < 0:
            raise TopologyError(f"node {nid}: negative compute_capacity")
        if capacity and kind not in COMPUTE_KINDS:
            raise TopologyError(f"node {nid}: {kind.value} nodes cannot have compute capacity")
        nodes[nid] = Node(id=nid, kind=kind, position=position, compute_capacity=capacity)
    if sorted(nodes) != list(range(len(nodes))):
        raise TopologyError("node ids must cover the dense range [0, node_count)")
    return [nodes[i] for i in range(len(nodes))]


_ALLOWED_PAIRS = {
    (NodeKind.DEVICE, NodeKind.EDGE),
    (NodeKind.EDGE, NodeKind.EDGE),
    (NodeKind.EDGE, NodeKind.GATEWAY),
    (NodeKind.GATEWAY, NodeKind.SATELLITE),
    (NodeKind.SATELLITE, NodeKind.SATELLITE),
    (NodeKind.SATELLITE, NodeKind.GROUND_STATION),
    (NodeKind.GROUND_STATION, NodeKind.USER),
}


def _parse_links(link_cfgs, nodes):
    links = {}

    def add(src, dst, lc):
        if (src, dst) in links:
            raise TopologyError(f"duplicate link {src}->{dst}")
        gains = lc.get("gains") or {}
        links[(src, dst)] = Link(
            src=src,
            dst=dst,
            band=Band(lc["band"]),
            bandwidth_hz=float(lc["bandwidth_hz"]),
            tx_power_w=float(lc["tx_power_w"]),
            antenna_gain_tx=float(gains.get("tx", 1.0)),
            antenna_gain_rx=float(gains.get("rx", 1.0)),
            gain_mean=float(lc.get("gain_mean", 1.0)),
            gain_sigma=float(lc.get("gain_sigma", 0.0)),
            is_isl=nodes[src].kind == NodeKind.SATELLITE and nodes[dst].kind == NodeKind.SATELLITE,
        )

    for lc in link_cfgs or []:
        src, dst = lc["src"], lc["dst"]
        for end in (src, dst):
            if not isinstance(end, int) or not 0 <= end < len(nodes):
                raise TopologyError(f"link {src}->{dst} references unknown node {end}")
        if src == dst:
            raise TopologyError(f"link {src}->{dst} is a self loop")
        pair = (nodes[src].kind, nodes[dst].kind)
        if pair == (NodeKind.GATEWAY, NodeKind.GATEWAY):
            raise TopologyError(f"link {src}->{dst}: gateways are isolated from each other")
        bidirectional = bool(lc.get("bidirectional", False))
        if pair not in _ALLOWED_PAIRS and not (bidirectional and pair[::-1] in _ALLOWED_PAIRS):
            raise TopologyError(f"link {src}->{dst}: {pair[0].value} cannot link to {pair[1].value}")
        if float(lc["bandwidth_hz"]) <= 0:
            raise TopologyError(f"link {src}->{dst}: bandwidth_hz must be positive")
        add(src, dst, lc)
        if bidirectional:
            add(dst, src, lc)
    return links


def build_graph(config, channel: Optional[ChannelParams] = None) -> NetworkGraph:
    """Build and validate the network graph described by a topology config.

    Capacities are set from the mean channel gains; the simulation engine
    redraws them every slot with ``refresh_capacities``.
    """
    channel = channel or ChannelParams()
    nodes = _parse_nodes(config.get("nodes"))
    links = _parse_links(config.get("links"), nodes)

    pairs = {}
    for pc in config.get("sat_user_pairs") or []:
        sat = pc["satellite"]
        if not 0 <= sat < len(nodes) or nodes[sat].kind != NodeKind.SATELLITE:
            raise TopologyError(f"sat_user_pairs: {sat} is not a satellite")
        for u in pc["users"]:
            if not 0 <= u < len(nodes) or nodes[u].kind != NodeKind.USER:
                raise TopologyError(f"sat_user_pairs: {u} is not a user")
        pairs[sat] = frozenset(pairs.get(sat, frozenset()) | set(pc["users"]))
    paired = set().union(*pairs.values()) if pairs else set()
    for node in nodes:
        if node.kind == NodeKind.USER and node.id not in paired:
            raise TopologyError(f"user {node.id} appears in no satellite-user pair")

    g = NetworkGraph(nodes, links, pairs, channel)
    for e in g.nodes_of(NodeKind.EDGE):
        for gs in g.nodes_of(NodeKind.GROUND_STATION):
            if not nx.has_path(g.graph, e, gs):
                raise TopologyError(f"edge {e} cannot reach ground station {gs}")
    for link in links.values():
        link.gain = link.gain_mean
        link.capacity_bps = int(math.floor(link_rate(link, g.graph.edges[link.key]["distance"], channel)))
    logger.debug("built graph with %d nodes and %d links", len(nodes), len(links))
    return g
