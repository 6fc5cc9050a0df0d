"""
Offloading schemes behind one interface: a path-selection rule plus a
bitrate rule for video tasks.

``cc_masac`` and ``sac_single`` route with PSRU and let learned agents pick
the bitrate. ``rrp`` and ``rnd_maxbr`` route over every feasible simple path
and stream at the highest bitrate that fits.
"""
import logging

import numpy as np

from ..network.topology import NodeKind
from ..sim.pathsel import PsruConfig, commit, feasible_candidates, select_path
from .masac import MultiAgentSac
from .registry import SCHEME_BUILD_FUNCS

logger = logging.getLogger(__name__)


def highest_fitting_level(candidate, graph, ladder):
    """Highest level whose extra rate over level 0 fits on every path link."""
    spare = min(graph.link(*key).available_bps for key in candidate.links)
    base = ladder.bitrate(0)
    for level in reversed(range(len(ladder))):
        if ladder.bitrate(level) - base <= spare:
            return level
    return 0


class Scheme(object):
    learned = False

    def __init__(self, name, graph, psru: PsruConfig):
        self.name = name
        self.psru = psru
        self.ground_stations = tuple(graph.nodes_of(NodeKind.GROUND_STATION))
        self.n_agents = len(self.ground_stations)

    def agent_for(self, task, graph):
        """Index of the agent owning a video task: its user's ground station."""
        return self.ground_stations.index(graph.ground_station_for_user(task.dest_user))

    def begin_episode(self, episode, training):
        pass

    def select(self, task, graph, demand_bps, decision_log=None):
        return select_path(task, graph, self.psru, demand_bps, decision_log=decision_log)

    def choose_level(self, agent, obs, task, candidate, graph, ladder, training):
        return highest_fitting_level(candidate, graph, ladder)

    def end_step(self, step_records):
        pass

    def end_episode(self, training):
        """Returns the list of update statistics produced during the episode."""
        return []


class RndMaxBr(Scheme):
    """Uniformly random feasible path, highest fitting bitrate."""

    def __init__(self, name, graph, psru, seed=0):
        super().__init__(name, graph, psru)
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)

    def select(self, task, graph, demand_bps, decision_log=None):
        candidates = feasible_candidates(task, graph, self.psru, demand_bps)
        chosen = None
        if candidates:
            chosen = commit(candidates[int(self.rng.integers(len(candidates)))], demand_bps, graph)
        _log_decision(decision_log, task, candidates, chosen)
        return chosen


def residual_sum(candidate):
    return sum(candidate.avail_link_ratios) + sum(r for _, r in candidate.avail_comp_ratios)


class Rrp(Scheme):
    """Path with the most residual communication plus computation, highest fitting bitrate."""

    def select(self, task, graph, demand_bps, decision_log=None):
        candidates = feasible_candidates(task, graph, self.psru, demand_bps)
        chosen = None
        if candidates:
            best = min(candidates, key=lambda c: (-residual_sum(c), c.nodes))
            chosen = commit(best, demand_bps, graph)
        _log_decision(decision_log, task, candidates, chosen)
        return chosen


def _log_decision(decision_log, task, candidates, chosen):
    if decision_log is None:
        return
    decision_log.append(
        dict(
            task_id=task.id,
            candidates=[c.to_log() for c in candidates],
            chosen=list(chosen.nodes) if chosen is not None else None,
        )
    )


class LearnedScheme(Scheme):
    """PSRU routing with SAC agents choosing the bitrate of video tasks.

    Decisions are buffered during an episode. Rewards arrive per step through
    ``end_step``; transitions are linked and stored at episode end, each
    decision's successor being the same agent's next decision.
    """

    learned = True

    def __init__(self, name, graph, psru, n_actions, sac_cfg, shared_reward=True, single_agent=False, seed=0):
        super().__init__(name, graph, psru)
        self.single_agent = single_agent
        self.shared_reward = shared_reward
        if single_agent:
            self.n_agents = 1
        self.masac = MultiAgentSac(self.n_agents, n_actions, sac_cfg, seed=seed)
        self._decisions = []

    def agent_for(self, task, graph):
        return 0 if self.single_agent else super().agent_for(task, graph)

    def begin_episode(self, episode, training):
        self.masac.reset_joint_view()
        self._decisions = []

    def choose_level(self, agent, obs, task, candidate, graph, ladder, training):
        action, state = self.masac.act(agent, obs, mode="sample" if training else "greedy")
        if training:
            self._decisions.append(dict(task_id=task.id, agent=agent, state=state, obs=obs, action=action))
        return action

    def end_step(self, step_records):
        if not self._decisions:
            return
        by_task = {r.task_id: r.reward for r in step_records}
        shared = sum(by_task.values()) / len(by_task) if by_task else 0.0
        for d in self._decisions:
            if d["task_id"] in by_task and "reward" not in d:
                d["reward"] = shared if self.shared_reward else by_task[d["task_id"]]

    def end_episode(self, training):
        if not training:
            return []
        stats = []
        last = {}
        for d in reversed(self._decisions):
            succ = last.get(d["agent"])
            d["next"] = succ
            last[d["agent"]] = d
        for d in self._decisions:
            succ = d["next"]
            next_state, next_obs = (succ["state"], succ["obs"]) if succ is not None else (d["state"], d["obs"])
            out = self.masac.store_and_update(
                d["agent"], d["state"], d["obs"], d["action"], d.get("reward", 0.0), next_state, next_obs, succ is None
            )
            if out is not None:
                stats.append(out)
        self._decisions = []
        return stats

    def save(self, path, cfg=None, extra=None):
        self.masac.save(path, cfg=cfg, extra=dict(scheme=self.name, **(extra or {})))

    def load(self, path, cfg=None):
        return self.masac.load(path, cfg=cfg)


def _psru(cfg):
    return PsruConfig.from_config(cfg.pathsel)


@SCHEME_BUILD_FUNCS.registe_with_name(module_name="cc_masac")
def build_cc_masac(cfg, graph, seed):
    return LearnedScheme(
        "cc_masac", graph, _psru(cfg), len(cfg.ladder.levels), cfg.sac, shared_reward=cfg.reward.shared, seed=seed
    )


@SCHEME_BUILD_FUNCS.registe_with_name(module_name="sac_single")
def build_sac_single(cfg, graph, seed):
    return LearnedScheme(
        "sac_single",
        graph,
        _psru(cfg),
        len(cfg.ladder.levels),
        cfg.sac,
        shared_reward=cfg.reward.shared,
        single_agent=True,
        seed=seed,
    )


@SCHEME_BUILD_FUNCS.registe_with_name(module_name="rrp")
def build_rrp(cfg, graph, seed):
    return Rrp("rrp", graph, _psru(cfg))


@SCHEME_BUILD_FUNCS.registe_with_name(module_name="rnd_maxbr")
def build_rnd_maxbr(cfg, graph, seed):
    return RndMaxBr("rnd_maxbr", graph, _psru(cfg), seed=seed)
