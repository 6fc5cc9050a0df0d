"""
Multi-agent discrete SAC with centralized critics.

Each agent owns an actor over its local observation, twin critics over the
global state and a replay buffer. The global state concatenates every agent's
latest observation with a one-hot of its last action.
"""
import hashlib
import logging
import pickle
from dataclasses import dataclass

import numpy as np
import torch

from ...network.topology import Band, NodeKind
from ...sim.pathsel import first_link_of, segment_availability
from ...util.slio import sldump
from .agent import SacAgent
from .replay import ReplayBuffer

logger = logging.getLogger(__name__)

OBS_DIM = 8
CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


@dataclass
class AgentHistory:
    """Bitrates an agent chose and delivered most recently, in bit/s."""

    last_encoding_bps: float = 0.0
    last_delivered_bps: float = 0.0
    # r_t of the QoE switch penalty
    prev_bitrate_bps: float = 0.0


def _gain_ratio(link):
    if link is None or link.gain_mean <= 0:
        return 1.0
    return link.gain / link.gain_mean


def task_bytes(task, history: AgentHistory, ladder):
    """Data size of ``task``. A video task is sized by the segment at the agent's previous bitrate."""
    if task.data_bytes is not None:
        return task.data_bytes
    for level in ladder.levels:
        if level.bitrate_bps >= history.prev_bitrate_bps:
            return level.segment_bytes
    return ladder.levels[-1].segment_bytes


def build_observation(candidate, graph, task, history: AgentHistory, ladder, obs_cfg):
    """Local observation of the agent owning ``task`` on its committed path."""
    obs = np.array(
        [
            segment_availability(candidate, graph, Band.SATELLITE),
            _gain_ratio(first_link_of(candidate, graph, NodeKind.GATEWAY, NodeKind.SATELLITE)),
            segment_availability(candidate, graph, Band.GROUND),
            _gain_ratio(first_link_of(candidate, graph, NodeKind.EDGE, NodeKind.GATEWAY)),
            history.last_encoding_bps / ladder.max_bitrate,
            history.last_delivered_bps / ladder.max_bitrate,
            task_bytes(task, history, ladder) / obs_cfg.max_task_bytes,
            task.deadline_s / obs_cfg.max_deadline_s,
        ],
        dtype=np.float64,
    )
    if not np.isfinite(obs).all():
        raise ValueError(f"task {task.id}: non-finite observation {obs}")
    return obs


def config_hash(cfg):
    """sha256 of the canonical JSON dump of a config mapping."""
    if hasattr(cfg, "to_dict"):
        cfg = cfg.to_dict()
    return hashlib.sha256(sldump(cfg, file_format="json").encode("utf-8")).hexdigest()


class MultiAgentSac(object):
    def __init__(self, n_agents, n_actions, sac_cfg, obs_dim=OBS_DIM, seed=0):
        self.n_agents = int(n_agents)
        self.n_actions = int(n_actions)
        self.obs_dim = int(obs_dim)
        self.state_dim = self.n_agents * (self.obs_dim + self.n_actions)
        self.batch_size = int(sac_cfg.batch_size)
        self.warmup = int(sac_cfg.warmup)
        self.hidden = [int(h) for h in sac_cfg.hidden]

        self.agents = [
            SacAgent(
                self.obs_dim,
                self.state_dim,
                self.n_actions,
                hidden=self.hidden,
                alpha_h=float(sac_cfg.alpha_h),
                gamma=float(sac_cfg.gamma),
                rho=float(sac_cfg.rho),
                lr=float(sac_cfg.lr),
                momentum=float(sac_cfg.momentum),
                seed=int(seed) * 1000 + i,
            )
            for i in range(self.n_agents)
        ]
        self.buffers = [
            ReplayBuffer(int(sac_cfg.buffer_size), self.obs_dim, self.state_dim, seed=[int(seed), i])
            for i in range(self.n_agents)
        ]
        self.total_transitions = 0
        self.reset_joint_view()

    def reset_joint_view(self):
        self.latest_obs = np.zeros((self.n_agents, self.obs_dim), dtype=np.float64)
        self.last_action = np.full(self.n_agents, -1, dtype=np.int64)

    def global_state(self):
        onehot = np.zeros((self.n_agents, self.n_actions), dtype=np.float64)
        for i, a in enumerate(self.last_action):
            if a >= 0:
                onehot[i, a] = 1.0
        return np.concatenate([self.latest_obs.reshape(-1), onehot.reshape(-1)])

    def act(self, agent, obs, mode="sample"):
        """Returns (action, global state seen before acting)."""
        self.latest_obs[agent] = obs
        state = self.global_state()
        action = self.agents[agent].act(obs, mode=mode)
        self.last_action[agent] = action
        return action, state

    def store_and_update(self, agent, state, obs, action, reward, next_state, next_obs, done):
        """Store one transition; update the agent once warm-up is over.

        Returns the update statistics, or None when no update ran.
        """
        buf = self.buffers[agent]
        buf.add(state, obs, action, reward, next_state, next_obs, done)
        self.total_transitions += 1
        if self.total_transitions < self.warmup or len(buf) < self.batch_size:
            return None
        return self.agents[agent].update(buf.sample(self.batch_size))

    # ---- checkpoints ----

    def _meta(self):
        return dict(
            version=CHECKPOINT_VERSION,
            n_agents=self.n_agents,
            n_actions=self.n_actions,
            obs_dim=self.obs_dim,
            hidden=list(self.hidden),
        )

    def save(self, path, cfg=None, extra=None):
        checkpoint = {
            "model": {f"agent{i}": a.state_dict() for i, a in enumerate(self.agents)},
            "meta": dict(self._meta(), config_sha256=config_hash(cfg) if cfg is not None else None, **(extra or {})),
        }
        torch.save(checkpoint, path)
        logger.info("saved checkpoint to %s", path)

    @staticmethod
    def read_meta(path):
        try:
            checkpoint = torch.load(path, map_location="cpu")
        except (OSError, RuntimeError, EOFError, pickle.UnpicklingError) as e:
            raise CheckpointError(f"cannot read checkpoint {path}: {e}")
        if not isinstance(checkpoint, dict) or "model" not in checkpoint or "meta" not in checkpoint:
            raise CheckpointError(f"{path} is not a stnoffload checkpoint")
        return checkpoint

    def load(self, path, cfg=None):
        checkpoint = self.read_meta(path)
        meta = checkpoint["meta"]
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"checkpoint version {meta.get('version')} is not {CHECKPOINT_VERSION}")
        for key, want in self._meta().items():
            if meta.get(key) != want:
                raise CheckpointError(f"checkpoint {key}={meta.get(key)} does not match {want}")
        if cfg is not None and meta.get("config_sha256") not in (None, config_hash(cfg)):
            logger.warning("checkpoint %s was trained under a different config", path)
        for i, agent in enumerate(self.agents):
            agent.load_state_dict(checkpoint["model"][f"agent{i}"])
        logger.info("loaded checkpoint from %s", path)
        return meta
