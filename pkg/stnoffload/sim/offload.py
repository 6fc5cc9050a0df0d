"""
Partial offloading of one task along a committed path: work split, delay,
resource usage and streaming energy.
"""
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, Tuple

from ..network.channel import LIGHT_SPEED, ChannelParams, noise_power
from ..network.topology import NodeKind

# tolerance for fraction sums
FRACTION_EPS = 1e-12


class InfeasibleOffload(RuntimeError):
    pass


class InvariantError(AssertionError):
    pass


class TaskStatus(str, Enum):
    COMPLETED = "Completed"
    DISCARDED = "Discarded"


class DiscardCause(str, Enum):
    NO_PATH = "no_path"
    BITRATE_REJECTED = "bitrate_rejected"
    INFEASIBLE_OFFLOAD = "infeasible_offload"
    DEADLINE = "deadline"


@dataclass
class OffloadPlan:
    path: Tuple[int, ...]
    source_edge: int
    edge_fractions: Dict[int, float] = field(default_factory=dict)
    sat_fractions: Dict[int, float] = field(default_factory=dict)
    # cycles/s granted to the task on each node that computes part of it
    allocations: Dict[int, float] = field(default_factory=dict)
    link_rates: Dict[Tuple[int, int], float] = field(default_factory=dict)
    leg_bytes: Dict[Tuple[int, int], float] = field(default_factory=dict)
    # cycles/s held in the ledger for the slot
    compute_reservation: Dict[int, int] = field(default_factory=dict)
    data_bytes: float = 0.0

    @property
    def alpha_source(self):
        return self.edge_fractions.get(self.source_edge, 0.0)

    @property
    def total_fraction(self):
        return sum(self.edge_fractions.values()) + sum(self.sat_fractions.values())


@dataclass(frozen=True)
class DelayBreakdown:
    t_comp_lc: float = 0.0
    t_comm_lc: float = 0.0
    t_comp_sc: float = 0.0
    t_comm_sc: float = 0.0
    # compute time on edges other than the source, after edge-to-edge transfer
    t_comp_peer: float = 0.0
    t_total: float = 0.0


@dataclass(frozen=True)
class EnergyBreakdown:
    e_encode: float = 0.0
    e_upload: float = 0.0
    e_transcode: float = 0.0
    e_total: float = 0.0


@dataclass(frozen=True)
class EnergyCoeffs:
    kappa_v: float = 6e-7  # J per encoded bit
    eta_v: float = 1e-27  # effective switched capacitance
    noise_psd_w_hz: float = 10.0 ** ((-174.0 - 30.0) / 10.0)

    @classmethod
    def from_config(cls, cfg, channel: ChannelParams):
        return cls(kappa_v=float(cfg.kappa_v), eta_v=float(cfg.eta_v), noise_psd_w_hz=noise_power(1.0, channel))


@dataclass(frozen=True)
class UsageSnapshot:
    u_comm: float = 0.0
    u_comp: float = 0.0
    node_ratios: Dict[int, float] = field(default_factory=dict)
    link_ratios: Dict[Tuple[int, int], float] = field(default_factory=dict)


@dataclass
class TaskRecord:
    """Outcome of one task; one CSV row in the exports."""

    task_id: int
    kind: str
    episode: int = 0
    step: int = 0
    agent: int = -1
    level: int = -1
    bitrate_bps: int = 0
    status: str = TaskStatus.DISCARDED.value
    cause: str = ""
    path: str = ""
    t_comp_lc: float = 0.0
    t_comm_lc: float = 0.0
    t_comp_sc: float = 0.0
    t_comm_sc: float = 0.0
    t_comp_peer: float = 0.0
    t_total: float = 0.0
    deadline_s: float = 0.0
    e_encode: float = 0.0
    e_upload: float = 0.0
    e_transcode: float = 0.0
    e_total: float = 0.0
    u_comm: float = 0.0
    u_comp: float = 0.0
    qoe: float = 0.0
    reward: float = 0.0
    psru_score: float = float("nan")

    @property
    def completed(self):
        return self.status == TaskStatus.COMPLETED.value

    def to_dict(self):
        return asdict(self)


def transmission_delay(num_bytes, rate_bps):
    if rate_bps <= 0:
        raise InfeasibleOffload(f"cannot transmit {num_bytes} bytes at rate {rate_bps}")
    return 8.0 * num_bytes / rate_bps


def propagation_delay(dist_m, light_speed=LIGHT_SPEED):
    # round trip
    return 2.0 * dist_m / light_speed


def computation_delay(fraction, num_bytes, cycles_per_byte, alloc_cycles_per_s):
    if fraction <= 0:
        return 0.0
    if alloc_cycles_per_s <= 0:
        raise InfeasibleOffload(f"fraction {fraction} assigned to a node with no compute allocation")
    return fraction * num_bytes * cycles_per_byte / alloc_cycles_per_s


def _path_nodes(path):
    return tuple(getattr(path, "nodes", path))


def plan_offload(task, path, graph, reservation=None, compute_share=1.0, slot_s=1.0):
    """Split ``task`` over the compute nodes of ``path`` greedily, in path order.

    Each edge or satellite takes as much of the remainder as its granted
    compute finishes within the deadline budget left after the communication
    accumulated so far, and no more cycles than it has free in one slot.
    Link rates are the residual capacities, counting the task's own
    reservation (taken from ``reservation`` or ``path.reservation``).

    Raises:
        InfeasibleOffload: if the path cannot absorb the whole task.
    """
    nodes = _path_nodes(path)
    if reservation is None:
        reservation = getattr(path, "reservation", None)
    if len(nodes) < 2:
        raise InfeasibleOffload(f"task {task.id}: path too short {nodes}")
    data_bytes, cpb = task.data_bytes, task.cycles_per_byte
    demand = data_bytes * cpb
    plan = OffloadPlan(path=nodes, source_edge=nodes[0], data_bytes=data_bytes)

    rem = 1.0
    t_comm = 0.0
    for idx, n in enumerate(nodes):
        if idx > 0:
            link = graph.link(nodes[idx - 1], n)
            own = reservation.link_amount(link.key) if reservation is not None else 0
            rate = float(link.available_bps + own)
            carried = rem * data_bytes
            plan.link_rates[link.key] = rate
            plan.leg_bytes[link.key] = carried
            if carried > 0:
                if rate <= 0:
                    t_comm = math.inf
                else:
                    dist = graph.distance(link.src, link.dst)
                    t_comm += transmission_delay(carried, rate) + propagation_delay(dist, graph.channel.light_speed)
        node = graph.node(n)
        if rem <= FRACTION_EPS or not node.is_compute:
            continue
        free = node.compute_available
        alloc = compute_share * free
        budget = task.deadline_s - t_comm
        if alloc <= 0 or budget <= 0 or demand <= 0:
            frac = rem if demand <= 0 else 0.0
        else:
            frac = min(rem, alloc * budget / demand, free * slot_s / demand)
        if frac <= 0:
            continue
        target = plan.edge_fractions if node.kind == NodeKind.EDGE else plan.sat_fractions
        target[n] = frac
        plan.allocations[n] = alloc
        plan.compute_reservation[n] = min(free, int(math.ceil(frac * demand / slot_s)))
        rem -= frac
        if rem < FRACTION_EPS:
            rem = 0.0

    if plan.total_fraction < 1.0 - 1e-9:
        raise InfeasibleOffload(f"task {task.id}: path absorbs only {plan.total_fraction:.6f} of the work")
    return plan


def _leg_time(plan, key, graph):
    num_bytes = plan.leg_bytes.get(key, 0.0)
    if num_bytes <= 0:
        return 0.0
    dist = graph.distance(*key)
    return transmission_delay(num_bytes, plan.link_rates[key]) + propagation_delay(dist, graph.channel.light_speed)


def total_delay(plan: OffloadPlan, task, path, graph) -> DelayBreakdown:
    """Piecewise total delay of a planned task.

    Fully local: the source edge compute time. Edge-only split: the larger of
    source compute and edge-to-edge communication (plus peer compute). With
    satellites: the largest of source compute, local communication plus
    satellite compute, and local plus satellite communication.
    """
    nodes = _path_nodes(path)
    data_bytes, cpb = task.data_bytes, task.cycles_per_byte

    def comp(n, frac):
        return computation_delay(frac, data_bytes, cpb, plan.allocations.get(n, 0.0))

    t_comp_lc = comp(plan.source_edge, plan.alpha_source)
    if plan.alpha_source >= 1.0 - FRACTION_EPS:
        return DelayBreakdown(t_comp_lc=t_comp_lc, t_total=t_comp_lc)

    peers = [comp(n, f) for n, f in plan.edge_fractions.items() if n != plan.source_edge]
    t_comp_peer = max(peers, default=0.0)
    sats = [comp(n, f) for n, f in plan.sat_fractions.items()]
    t_comp_sc = max(sats, default=0.0)

    last_sat = max((nodes.index(n) for n, f in plan.sat_fractions.items() if f > 0), default=-1)
    t_comm_lc = 0.0
    t_comm_sc = 0.0
    for i, (u, v) in enumerate(zip(nodes[:-1], nodes[1:])):
        ku, kv = graph.node(u).kind, graph.node(v).kind
        if ku == NodeKind.EDGE and kv == NodeKind.EDGE:
            t_comm_lc += _leg_time(plan, (u, v), graph)
        elif i + 1 <= last_sat and (
            (ku, kv) in ((NodeKind.EDGE, NodeKind.GATEWAY), (NodeKind.GATEWAY, NodeKind.SATELLITE))
            or (ku == kv == NodeKind.SATELLITE)
        ):
            t_comm_sc += _leg_time(plan, (u, v), graph)

    if not plan.sat_fractions:
        t_total = max(t_comp_lc, t_comm_lc + t_comp_peer)
    else:
        t_total = max(t_comp_lc, t_comm_lc + t_comp_peer, t_comm_lc + t_comp_sc, t_comm_lc + t_comm_sc)
    return DelayBreakdown(
        t_comp_lc=t_comp_lc,
        t_comm_lc=t_comm_lc,
        t_comp_sc=t_comp_sc,
        t_comm_sc=t_comm_sc,
        t_comp_peer=t_comp_peer,
        t_total=t_total,
    )


def enforce_deadline(breakdown: DelayBreakdown, task) -> TaskStatus:
    # non-strict: finishing exactly at the deadline counts
    if breakdown.t_total <= task.deadline_s:
        return TaskStatus.COMPLETED
    return TaskStatus.DISCARDED


def remaining_after_lc(task, plan: OffloadPlan):
    d = task.data_bytes
    processed = sum(plan.edge_fractions.values()) * d
    d_re = d - processed
    c_re = d * task.cycles_per_byte - processed * task.cycles_per_byte
    if d_re < -1e-9 * d:
        raise InvariantError(f"task {task.id}: edges processed more than the task")
    return max(d_re, 0.0), max(c_re, 0.0)


def remaining_after_sc(d_re_lc, plan: OffloadPlan):
    d_re = d_re_lc - sum(plan.sat_fractions.values()) * plan.data_bytes
    if d_re < -1e-9 * max(plan.data_bytes, 1.0):
        raise InvariantError(f"satellites processed {-d_re} bytes more than remained")
    return max(d_re, 0.0)


def upload_energy(bits, upload_time_s, gain, bandwidth_hz, noise_psd_w_hz):
    """(t/h) * N_0 W (2^(x/W) - 1) with x = bits / t."""
    if upload_time_s <= 0 or bandwidth_hz <= 0 or gain <= 0:
        raise InfeasibleOffload("upload energy needs positive time, bandwidth and gain")
    x = bits / upload_time_s
    power = noise_psd_w_hz * bandwidth_hz * (2.0 ** (x / bandwidth_hz) - 1.0)
    return upload_time_s / gain * power


def streaming_energy(
    level,
    ladder,
    uplink_gain,
    uplink_bw_hz,
    upload_time_s,
    cpu_hz,
    transcode_time_s,
    coeffs: EnergyCoeffs,
    prev_bitrate_bps=None,
) -> EnergyBreakdown:
    """Encode, upload and transcode energy of one video segment.

    Encoding uses the chosen level. The upload carries the segment encoded at
    the previous bitrate ``prev_bitrate_bps``; None means no earlier segment,
    and the chosen level is used.
    """
    bitrate = ladder.bitrate(level)
    uploaded_bps = bitrate if prev_bitrate_bps is None else float(prev_bitrate_bps)
    e_encode = coeffs.kappa_v * bitrate * ladder.segment_seconds
    e_upload = upload_energy(
        uploaded_bps * ladder.segment_seconds, upload_time_s, uplink_gain, uplink_bw_hz, coeffs.noise_psd_w_hz
    )
    e_transcode = coeffs.eta_v * cpu_hz**3 * transcode_time_s
    return EnergyBreakdown(
        e_encode=e_encode, e_upload=e_upload, e_transcode=e_transcode, e_total=e_encode + e_upload + e_transcode
    )


def task_energy(task, plan, delay, path, graph, ladder, coeffs, upload_gain="sampled", prev_bitrate_bps=None):
    """Streaming energy of a video task on its committed path; zero for monitoring."""
    if not task.is_video:
        return EnergyBreakdown()
    nodes = _path_nodes(path)
    first = graph.link(nodes[0], nodes[1])
    rate = plan.link_rates[first.key]
    upload_time = transmission_delay(ladder.levels[task.chosen_level].segment_bytes, rate)
    h = first.gain if upload_gain == "sampled" else first.gain_mean
    cpu_hz = plan.allocations.get(plan.source_edge, 0.0)
    return streaming_energy(
        task.chosen_level,
        ladder,
        h,
        first.bandwidth_hz,
        upload_time,
        cpu_hz,
        delay.t_comp_lc,
        coeffs,
        prev_bitrate_bps=prev_bitrate_bps,
    )


def usage_ratios(plan: OffloadPlan, path, graph, slot_s=1.0) -> UsageSnapshot:
    node_ratios = {}
    for n in list(plan.edge_fractions) + list(plan.sat_fractions):
        cap = graph.node(n).compute_capacity
        node_ratios[n] = min(1.0, plan.allocations[n] / cap) if cap > 0 else 0.0
    link_ratios = {}
    for key, num_bytes in plan.leg_bytes.items():
        cap = graph.link(*key).capacity_bps
        ratio = 8.0 * num_bytes / (cap * slot_s) if cap > 0 else (1.0 if num_bytes > 0 else 0.0)
        link_ratios[key] = min(1.0, max(0.0, ratio))
    return UsageSnapshot(
        u_comm=max(link_ratios.values(), default=0.0),
        u_comp=max(node_ratios.values(), default=0.0),
        node_ratios=node_ratios,
        link_ratios=link_ratios,
    )
