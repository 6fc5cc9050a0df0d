"""
Episode loop, training, evaluation and scheme comparison.

Time is slotted. At the start of every slot the channel gains are redrawn;
the slot's task batch then runs to completion in arrival order. A completed
task holds its link and compute reservations until the slot ends, a
discarded one releases them immediately.
"""
import logging
import os
import os.path as osp
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import pandas as pd
import torch

from ..models import build_scheme
from ..models.masac import AgentHistory, MultiAgentSac, NonFiniteError, build_observation
from ..network.channel import ChannelParams
from ..network.topology import build_graph
from ..util.meters import MeterDict
from ..util.slio import sldump
from .metrics import (
    EpisodeStats,
    QoEParams,
    RewardWeights,
    completion_ratio,
    episode_stats,
    qoe,
    task_reward,
    volume_curve,
)
from .offload import (
    DiscardCause,
    EnergyCoeffs,
    InfeasibleOffload,
    TaskRecord,
    TaskStatus,
    enforce_deadline,
    plan_offload,
    task_energy,
    total_delay,
    usage_ratios,
)
from .pathsel import bottleneck_rate, task_demand_bps
from .workload import BitrateLadder, WorkloadConfig, generate_episode

logger = logging.getLogger(__name__)

# evaluation workloads use episode indices disjoint from training ones
EVAL_EPISODE_OFFSET = 1_000_000

TRAIN_LOG_COLUMNS = [
    "step",
    "episode",
    "loss_actor",
    "loss_q1",
    "loss_q2",
    "entropy",
    "mean_reward",
    "mean_qoe",
    "mean_energy",
    "completion_rate",
]
COMPARE_COLUMNS = ["scheme", "tasks", "completion_rate", "reward", "energy", "delay"]


def setup_torch(cfg):
    torch.set_num_threads(int(cfg.sac.get("threads", 1)))


class Simulation(object):
    """Everything a run derives once from its config: graph, workload, weights."""

    def __init__(self, cfg, graph=None):
        self.cfg = cfg
        self.seed = int(cfg.seed)
        self.channel = ChannelParams.from_config(cfg.channel)
        self.graph = graph if graph is not None else build_graph(cfg.topology, self.channel)
        self.ladder = BitrateLadder.from_config(cfg.ladder)
        self.workload = WorkloadConfig.from_config(cfg.workload, self.graph)
        self.qoe_params = QoEParams.from_config(cfg.qoe)
        self.weights = RewardWeights.from_config(cfg.reward)
        self.energy = EnergyCoeffs.from_config(cfg.offload, self.channel)
        self.slot_s = float(cfg.offload.slot_s)
        self.compute_share = float(cfg.offload.compute_share)
        self.upload_gain = cfg.offload.upload_gain
        self.obs_cfg = cfg.observation
        self.log_decisions = bool(cfg.pathsel.get("log_decisions", False))


@dataclass
class EpisodeTrace:
    episode: int
    records: List[TaskRecord] = field(default_factory=list)
    stats: EpisodeStats = field(default_factory=EpisodeStats)
    # ledger state at the end of every slot, before its reservations are released
    snapshots: List[dict] = field(default_factory=list)
    updates: List[dict] = field(default_factory=list)
    decisions: List[dict] = field(default_factory=list)


def _discard(rec, cause, graph, candidate=None):
    rec.status = TaskStatus.DISCARDED.value
    rec.cause = cause.value
    if candidate is not None and candidate.reservation is not None and not candidate.reservation.released:
        graph.release(candidate.reservation)
    logger.debug("task %d discarded: %s", rec.task_id, rec.cause)
    return rec, None


def run_task(sim: Simulation, scheme, task, episode, step, histories, training, decision_log=None):
    """Route, offload and score one task.

    Returns ``(record, reservation)``; the reservation is None for discarded
    tasks, whose resources are already released.
    """
    graph, ladder = sim.graph, sim.ladder
    rec = TaskRecord(task_id=task.id, kind=task.kind.value, episode=episode, step=step, deadline_s=task.deadline_s)
    agent = hist = None
    if task.is_video:
        agent = scheme.agent_for(task, graph)
        hist = histories[agent]
        rec.agent = agent

    candidate = scheme.select(task, graph, task_demand_bps(task, ladder, 0), decision_log=decision_log)
    if candidate is None:
        return _discard(rec, DiscardCause.NO_PATH, graph)
    rec.path = "-".join(str(n) for n in candidate.nodes)
    rec.psru_score = candidate.score

    if task.is_video:
        obs = build_observation(candidate, graph, task, hist, ladder, sim.obs_cfg)
        level = int(scheme.choose_level(agent, obs, task, candidate, graph, ladder, training))
        rec.level, rec.bitrate_bps = level, ladder.bitrate(level)
        hist.last_encoding_bps = rec.bitrate_bps
        extra = ladder.bitrate(level) - ladder.bitrate(0)
        if extra > 0 and graph.augment(candidate.reservation, {key: extra for key in candidate.links}) is not None:
            hist.last_delivered_bps = 0.0
            return _discard(rec, DiscardCause.BITRATE_REJECTED, graph, candidate)
        task = task.with_level(level, ladder)

    try:
        plan = plan_offload(task, candidate, graph, compute_share=sim.compute_share, slot_s=sim.slot_s)
        delay = total_delay(plan, task, candidate, graph)
    except InfeasibleOffload as e:
        logger.debug("%s", e)
        if hist is not None:
            hist.last_delivered_bps = 0.0
        return _discard(rec, DiscardCause.INFEASIBLE_OFFLOAD, graph, candidate)
    for name in ("t_comp_lc", "t_comm_lc", "t_comp_sc", "t_comm_sc", "t_comp_peer", "t_total"):
        setattr(rec, name, getattr(delay, name))

    if enforce_deadline(delay, task) == TaskStatus.DISCARDED:
        if hist is not None:
            hist.last_delivered_bps = 0.0
        return _discard(rec, DiscardCause.DEADLINE, graph, candidate)
    if graph.augment(candidate.reservation, compute_demands=plan.compute_reservation) is not None:
        if hist is not None:
            hist.last_delivered_bps = 0.0
        return _discard(rec, DiscardCause.INFEASIBLE_OFFLOAD, graph, candidate)

    energy = task_energy(
        task,
        plan,
        delay,
        candidate,
        graph,
        ladder,
        sim.energy,
        upload_gain=sim.upload_gain,
        prev_bitrate_bps=hist.prev_bitrate_bps if hist is not None else None,
    )
    usage = usage_ratios(plan, candidate, graph, sim.slot_s)
    rec.e_encode, rec.e_upload, rec.e_transcode, rec.e_total = (
        energy.e_encode,
        energy.e_upload,
        energy.e_transcode,
        energy.e_total,
    )
    rec.u_comm, rec.u_comp = usage.u_comm, usage.u_comp
    if task.is_video:
        rec.qoe = qoe(hist.prev_bitrate_bps, rec.bitrate_bps, bottleneck_rate(candidate, graph), sim.qoe_params)
        hist.prev_bitrate_bps = hist.last_delivered_bps = rec.bitrate_bps
    rec.status = TaskStatus.COMPLETED.value
    return rec, candidate.reservation


def run_episode(sim: Simulation, scheme, episode, training=False, collect_decisions=None) -> EpisodeTrace:
    """Run one episode of ``scheme``; the ledger is closed again on return."""
    graph, wcfg = sim.graph, sim.workload
    collect = sim.log_decisions if collect_decisions is None else collect_decisions
    trace = EpisodeTrace(episode=episode)
    tasks = generate_episode(wcfg, sim.ladder, sim.seed, episode)
    histories = [AgentHistory(prev_bitrate_bps=sim.ladder.bitrate(0)) for _ in range(scheme.n_agents)]
    scheme.begin_episode(episode, training)

    for step in range(wcfg.steps_per_episode):
        graph.refresh_capacities(episode * wcfg.steps_per_episode + step, sim.seed)
        step_records, held = [], []
        for task in (t for t in tasks if t.arrival_step == step):
            rec, reservation = run_task(
                sim, scheme, task, episode, step, histories, training, trace.decisions if collect else None
            )
            step_records.append(rec)
            if reservation is not None:
                held.append(reservation)

        r_c = completion_ratio(step_records)
        for rec in step_records:
            rec.reward = task_reward(rec.qoe, rec.e_total, rec.completed, sim.weights, r_c)
        trace.snapshots.append(dict(episode=episode, step=step, open=graph.open_reservations, **graph.snapshot()))
        for reservation in held:
            graph.release(reservation)
        scheme.end_step(step_records)
        trace.records.extend(step_records)

    graph.assert_ledger_closed()
    trace.updates = scheme.end_episode(training)
    trace.stats = episode_stats(trace.records, episode)
    s = trace.stats
    logger.debug(
        "episode %d: %d/%d completed, mean reward %.4f, causes no_path=%d bitrate_rejected=%d "
        "infeasible_offload=%d deadline=%d",
        episode,
        s.completed,
        s.tasks,
        s.mean_reward,
        s.no_path,
        s.bitrate_rejected,
        s.infeasible_offload,
        s.deadline,
    )
    return trace


def _write_csv(df, out_dir, name):
    path = osp.join(out_dir, name)
    df.to_csv(path, index=False)
    return path


def _records_frame(records):
    return pd.DataFrame([r.to_dict() for r in records], columns=list(TaskRecord.__dataclass_fields__))


@dataclass
class TrainResult:
    scheme: object
    log: pd.DataFrame
    episodes: pd.DataFrame
    checkpoint: Optional[str] = None


def train(cfg, out_dir=None, scheme_name="cc_masac") -> TrainResult:
    """Train a learned scheme for ``cfg.train.episodes`` episodes.

    Writes ``train_log.csv``, ``episodes.csv`` and checkpoints to ``out_dir``
    when given. A non-finite loss saves ``checkpoint_nonfinite.pth`` and
    re-raises.
    """
    setup_torch(cfg)
    sim = Simulation(cfg)
    scheme = build_scheme(cfg, scheme_name, sim.graph)
    if not scheme.learned:
        raise ValueError(f"scheme {scheme_name!r} has nothing to train")
    every = int(cfg.train.checkpoint_every)
    if out_dir is not None:
        os.makedirs(osp.join(out_dir, "checkpoints"), exist_ok=True)

    rows, ep_rows, meters = [], [], MeterDict()
    step, episode = 0, -1
    try:
        for episode in range(int(cfg.train.episodes)):
            trace = run_episode(sim, scheme, episode, training=True)
            meters.reset()
            for u in trace.updates:
                meters.update(**u)
            step += len(trace.records)
            s = trace.stats
            rows.append(
                dict(
                    step=step,
                    episode=episode,
                    loss_actor=meters.avg("loss_actor"),
                    loss_q1=meters.avg("loss_q1"),
                    loss_q2=meters.avg("loss_q2"),
                    entropy=meters.avg("entropy"),
                    mean_reward=s.mean_reward,
                    mean_qoe=s.mean_qoe,
                    mean_energy=s.mean_energy,
                    completion_rate=s.completion_rate,
                )
            )
            ep_rows.append(s.to_dict())
            logger.info(
                "[%s] episode %d: reward %.4f completion %.3f %s",
                scheme_name,
                episode,
                s.mean_reward,
                s.completion_rate,
                meters,
            )
            if out_dir is not None and (episode + 1) % every == 0:
                path = osp.join(out_dir, "checkpoints", f"checkpoint{episode:04d}.pth")
                scheme.save(path, cfg, dict(episode=episode))
    except NonFiniteError:
        if out_dir is not None:
            scheme.save(osp.join(out_dir, "checkpoint_nonfinite.pth"), cfg, dict(episode=episode))
        logger.error("[%s] non-finite values in episode %d, training aborted", scheme_name, episode)
        raise
    finally:
        log = pd.DataFrame(rows, columns=TRAIN_LOG_COLUMNS)
        episodes = pd.DataFrame(ep_rows, columns=list(EpisodeStats.__dataclass_fields__))
        if out_dir is not None:
            _write_csv(log, out_dir, "train_log.csv")
            _write_csv(episodes, out_dir, "episodes.csv")

    checkpoint = None
    if out_dir is not None:
        checkpoint = osp.join(out_dir, "checkpoint.pth")
        scheme.save(checkpoint, cfg, dict(episode=episode))
    return TrainResult(scheme=scheme, log=log, episodes=episodes, checkpoint=checkpoint)


@dataclass
class EvalReport:
    scheme: str
    records: List[TaskRecord]
    episodes: List[EpisodeStats]
    summary: EpisodeStats
    curve: List[dict]
    decisions: List[dict] = field(default_factory=list)


def evaluation_workload(sim: Simulation, episodes):
    """Task lists of the first ``episodes`` evaluation episodes, before any level is chosen."""
    tasks = []
    for i in range(int(episodes)):
        tasks.extend(generate_episode(sim.workload, sim.ladder, sim.seed, EVAL_EPISODE_OFFSET + i))
    return tasks


def run_evaluation(sim: Simulation, scheme, episodes, out_dir=None) -> EvalReport:
    """Greedy rollouts without buffer writes or updates."""
    records, stats, decisions = [], [], []
    for i in range(int(episodes)):
        trace = run_episode(sim, scheme, EVAL_EPISODE_OFFSET + i, training=False)
        records.extend(trace.records)
        stats.append(trace.stats)
        decisions.extend(trace.decisions)
    m = sim.cfg.metrics
    report = EvalReport(
        scheme=scheme.name,
        records=records,
        episodes=stats,
        summary=episode_stats(records, episode=-1),
        curve=volume_curve(records, int(m.warmup_tasks), int(m.window), int(m.volume_step)),
        decisions=decisions,
    )
    s = report.summary
    logger.info(
        "[%s] evaluated %d tasks: completion %.3f reward %.4f energy %.4f delay %.4f",
        scheme.name,
        s.tasks,
        s.completion_rate,
        s.mean_reward,
        s.mean_energy,
        s.mean_delay,
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(_records_frame(records), out_dir, "tasks.csv")
        _write_csv(pd.DataFrame([e.to_dict() for e in stats]), out_dir, "episodes.csv")
        _write_csv(pd.DataFrame(report.curve), out_dir, "volume.csv")
        if decisions:
            sldump(decisions, osp.join(out_dir, "path_decisions.jsonl"))
    return report


def load_learned_scheme(cfg, checkpoint, graph):
    meta = MultiAgentSac.read_meta(checkpoint)["meta"]
    scheme = build_scheme(cfg, meta.get("scheme", "cc_masac"), graph)
    scheme.load(checkpoint, cfg)
    return scheme


def evaluate(cfg, checkpoint, out_dir=None) -> EvalReport:
    setup_torch(cfg)
    sim = Simulation(cfg)
    scheme = load_learned_scheme(cfg, checkpoint, sim.graph)
    return run_evaluation(sim, scheme, cfg.evaluate.episodes, out_dir)


@dataclass
class CompareResult:
    table: pd.DataFrame
    summaries: Dict[str, EpisodeStats]


def compare(cfg, schemes=None, checkpoints=None, workers=None, out_dir=None) -> CompareResult:
    """Evaluate every scheme on the same seeded workloads.

    Learned schemes without a checkpoint are trained first. With more than one
    worker the schemes run in parallel threads, each on its own graph.
    """
    setup_torch(cfg)
    schemes = list(schemes or cfg.compare.schemes)
    checkpoints = dict(cfg.compare.get("checkpoints") or {}, **(checkpoints or {}))
    workers = int(workers or cfg.compare.get("workers", 1))
    episodes = int(cfg.compare.episodes)

    def run_one(name):
        sub_dir = osp.join(out_dir, name) if out_dir is not None else None
        sim = Simulation(cfg)
        if name in checkpoints:
            scheme = load_learned_scheme(cfg, checkpoints[name], sim.graph)
        else:
            scheme = build_scheme(cfg, name, sim.graph)
            if scheme.learned:
                logger.info("no checkpoint for %s, training it first", name)
                scheme = train(cfg, sub_dir, scheme_name=name).scheme
        return run_evaluation(sim, scheme, episodes, sub_dir)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run_one, schemes))
    else:
        reports = [run_one(name) for name in schemes]

    rows = [dict(scheme=r.scheme, **point) for r in reports for point in r.curve]
    table = pd.DataFrame(rows, columns=COMPARE_COLUMNS)
    summaries = {r.scheme: r.summary for r in reports}
    for name, s in summaries.items():
        logger.info(
            "%-10s completion %.3f reward %.4f energy %.4f delay %.4f",
            name,
            s.completion_rate,
            s.mean_reward,
            s.mean_energy,
            s.mean_delay,
        )
    if out_dir is not None:
        _write_csv(table, out_dir, "compare.csv")
        summary = pd.DataFrame([dict(scheme=k, **v.to_dict()) for k, v in summaries.items()])
        _write_csv(summary, out_dir, "compare_summary.csv")
    return CompareResult(table=table, summaries=summaries)
