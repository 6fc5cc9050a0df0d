"""
Path selection based on resource usage (PSRU).

``select_path`` repeatedly takes the next shortest path in the entry
satellite's topology view, tries a reservation on it, scores accepted
candidates by their vacant link and compute resources, and prunes the first
congested link of rejected ones. The best candidate is committed.
``oracle_select`` scores every simple path the same way.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import networkx as nx

from ..network.topology import (
    COMPUTE_KINDS,
    Reservation,
    TopologyError,
    reachable_satellite_for_user,
    remove_link_from_view,
)

logger = logging.getLogger(__name__)


class LinkWeight(str, Enum):
    PROPAGATION_DELAY = "propagation_delay"
    HOP_COUNT = "hop_count"


@dataclass(frozen=True)
class PsruConfig:
    alpha_mix: float = 0.5
    count_max: int = 5
    link_weight: LinkWeight = LinkWeight.PROPAGATION_DELAY

    def __post_init__(self):
        if self.count_max < 1:
            raise ValueError("count_max must be >= 1")
        if not 0.0 <= self.alpha_mix <= 1.0:
            raise ValueError("alpha_mix must lie in [0, 1]")

    @classmethod
    def from_config(cls, cfg):
        return cls(
            alpha_mix=float(cfg.alpha_mix),
            count_max=int(cfg.count_max),
            link_weight=LinkWeight(cfg.link_weight),
        )


@dataclass
class PathCandidate:
    nodes: Tuple[int, ...]
    score: float = float("nan")
    avail_link_ratios: Tuple[float, ...] = ()
    # (node id, ratio) for the compute-capable nodes of the path
    avail_comp_ratios: Tuple[Tuple[int, float], ...] = ()
    reservation: Optional[Reservation] = field(default=None, compare=False, repr=False)

    @property
    def links(self):
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))

    def to_log(self, accepted=True):
        return dict(nodes=list(self.nodes), score=None if math.isnan(self.score) else self.score, accepted=accepted)


@dataclass
class ReserveResult:
    accepted: bool
    reservation: Optional[Reservation] = None
    congested: Optional[Tuple[int, int]] = None


def task_demand_bps(task, ladder, level=0):
    """Rate a task holds on every link of its path.

    Video tasks hold the bitrate of ``level``; monitoring tasks hold the rate
    that moves their data within the deadline.
    """
    if task.is_video:
        return ladder.bitrate(level)
    return int(math.ceil(8.0 * task.data_bytes / task.deadline_s))


def task_endpoints(task, graph):
    """(entry satellite, destination node, egress satellite) for a task."""
    s = graph.entry_satellite(task.source_edge)
    if task.is_video:
        dst = task.dest_user
        egress = reachable_satellite_for_user(dst, graph)
    else:
        dst = task.dest_ground_station
        egress = graph.satellite_for_ground_station(dst)
    return s, dst, egress


def _path_weight(view, nodes, weight):
    if weight is None:
        return float(len(nodes) - 1)
    return sum(view.edges[u, v][weight] for u, v in zip(nodes[:-1], nodes[1:]))


def shortest_path(view, src, dst, weight=LinkWeight.PROPAGATION_DELAY, exclude=()):
    """Minimum-weight simple path from ``src`` to ``dst`` not in ``exclude``.

    Paths of equal weight resolve to the lexicographically smallest node
    sequence. Returns None when no such path exists.
    """
    attr = "distance" if LinkWeight(weight) == LinkWeight.PROPAGATION_DELAY else None
    exclude = set(exclude)
    best_w, group = None, []
    try:
        for p in nx.shortest_simple_paths(view, src, dst, weight=attr):
            w = _path_weight(view, p, attr)
            if best_w is not None and not math.isclose(w, best_w, rel_tol=1e-12, abs_tol=1e-9):
                break
            if tuple(p) in exclude:
                continue
            if best_w is None:
                best_w = w
            group.append(tuple(p))
    except (nx.NetworkXNoPath, nx.NodeNotFound):
        return None
    if not group:
        return None
    return PathCandidate(nodes=min(group))


def try_reserve(path, task_rate_bps, task_alloc, graph) -> ReserveResult:
    """Reserve ``task_rate_bps`` on every link (and ``task_alloc`` compute) or nothing."""
    nodes = tuple(getattr(path, "nodes", path))
    link_demands = {key: task_rate_bps for key in zip(nodes[:-1], nodes[1:])}
    reservation, shortfall = graph.try_reserve(link_demands, task_alloc or {})
    if reservation is not None:
        return ReserveResult(True, reservation)
    what, where = shortfall
    if what == "node":
        # blame the link that enters the saturated node
        i = nodes.index(where)
        where = (nodes[i - 1], nodes[i]) if i > 0 else None
    return ReserveResult(False, congested=where)


def measure_candidate(nodes, graph):
    """Availability ratios of ``nodes`` in the graph's current state."""
    nodes = tuple(nodes)
    links = graph.path_links(nodes)
    comp = tuple(
        (n, graph.node(n).availability)
        for n in nodes
        if graph.node(n).kind in COMPUTE_KINDS and graph.node(n).compute_capacity > 0
    )
    return PathCandidate(nodes=nodes, avail_link_ratios=tuple(l.availability for l in links), avail_comp_ratios=comp)


def psru_score(candidate: PathCandidate, cfg: PsruConfig):
    n_links = len(candidate.avail_link_ratios)
    if n_links == 0:
        raise ValueError("cannot score an empty path")
    r_link = sum(candidate.avail_link_ratios) / n_links
    r_comp = sum(r for _, r in candidate.avail_comp_ratios) / n_links
    return cfg.alpha_mix * r_link + (1.0 - cfg.alpha_mix) * r_comp


def _score_reserved(nodes, demand, graph, cfg):
    """Reserve, score and release; returns (candidate or None, ReserveResult)."""
    result = try_reserve(nodes, demand, None, graph)
    if not result.accepted:
        return None, result
    cand = measure_candidate(nodes, graph)
    cand.score = psru_score(cand, cfg)
    graph.release(result.reservation)
    return cand, result


def _best(candidates):
    return min(candidates, key=lambda c: (-c.score, c.nodes))


def commit(candidate, demand, graph):
    result = try_reserve(candidate.nodes, demand, None, graph)
    if not result.accepted:
        raise TopologyError(f"committing {candidate.nodes} failed on {result.congested}")
    candidate.reservation = result.reservation
    return candidate


def select_path(task, graph, cfg: PsruConfig, demand_bps, decision_log=None):
    """Choose and reserve a path for ``task``; None if no candidate is found.

    The returned candidate holds its reservation in ``candidate.reservation``.
    """
    try:
        s, dst, egress = task_endpoints(task, graph)
    except TopologyError as e:
        logger.debug("task %d has no endpoints: %s", task.id, e)
        return None
    graph.reset_topology_view(s, egress=egress)
    tried, candidates, log = set(), [], []
    for _ in range(cfg.count_max):
        found = shortest_path(graph.topology_view(s), task.source_edge, dst, cfg.link_weight, exclude=tried)
        if found is None:
            break
        tried.add(found.nodes)
        cand, result = _score_reserved(found.nodes, demand_bps, graph, cfg)
        if cand is not None:
            candidates.append(cand)
            log.append(cand.to_log(accepted=True))
        else:
            log.append(found.to_log(accepted=False))
            if result.congested is not None:
                remove_link_from_view(s, result.congested, graph)
    chosen = commit(_best(candidates), demand_bps, graph) if candidates else None
    if decision_log is not None:
        decision_log.append(
            dict(task_id=task.id, candidates=log, chosen=list(chosen.nodes) if chosen is not None else None)
        )
    return chosen


def feasible_candidates(task, graph, cfg: PsruConfig, demand_bps):
    """Every simple path that can hold ``demand_bps``, scored against the current ledger, in node order."""
    try:
        s, dst, egress = task_endpoints(task, graph)
    except TopologyError:
        return []
    view = graph.reset_topology_view(s, egress=egress)
    if task.source_edge not in view or dst not in view:
        return []
    out = []
    for p in sorted(tuple(p) for p in nx.all_simple_paths(view, task.source_edge, dst)):
        cand, _ = _score_reserved(p, demand_bps, graph, cfg)
        if cand is not None:
            out.append(cand)
    return out


def oracle_select(task, graph, cfg: PsruConfig, demand_bps, commit_choice=True):
    candidates = feasible_candidates(task, graph, cfg, demand_bps)
    if not candidates:
        return None
    best = _best(candidates)
    return commit(best, demand_bps, graph) if commit_choice else best


def bottleneck_rate(candidate, graph):
    """Smallest rate the task can use along its path, counting its own reservation."""
    rates = []
    for key in candidate.links:
        own = candidate.reservation.link_amount(key) if candidate.reservation is not None else 0
        rates.append(graph.link(*key).available_bps + own)
    return min(rates)


def segment_availability(candidate, graph, band):
    """Bottleneck availability over the path links of one band."""
    ratios = [graph.link(*k).availability for k in candidate.links if graph.link(*k).band == band]
    return min(ratios, default=1.0)


def first_link_of(candidate, graph, src_kind, dst_kind):
    for u, v in candidate.links:
        if graph.node(u).kind == src_kind and graph.node(v).kind == dst_kind:
            return graph.link(u, v)
    return None

