"""
Task generation: monitoring jobs and video-streaming segments.
"""
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..network.topology import NodeKind
from ..util.slio import sldump, slload


class WorkloadError(ValueError):
    pass


class TaskKind(str, Enum):
    MONITORING = "Monitoring"
    VIDEO = "VideoStreaming"


@dataclass(frozen=True)
class BitrateLevel:
    bitrate_bps: int
    label: str
    segment_bytes: float


@dataclass(frozen=True)
class BitrateLadder:
    levels: Tuple[BitrateLevel, ...]
    segment_seconds: float = 1.0

    def __post_init__(self):
        if len(self.levels) < 2:
            raise WorkloadError("a bitrate ladder needs at least 2 levels")
        for lo, hi in zip(self.levels[:-1], self.levels[1:]):
            if hi.bitrate_bps <= lo.bitrate_bps or hi.segment_bytes <= lo.segment_bytes:
                raise WorkloadError(f"ladder not strictly increasing at {hi.label}")
        if self.segment_seconds <= 0:
            raise WorkloadError("segment_seconds must be positive")

    @classmethod
    def from_config(cls, cfg):
        levels = tuple(
            BitrateLevel(int(lv["bitrate_bps"]), str(lv["label"]), float(lv["segment_bytes"])) for lv in cfg["levels"]
        )
        return cls(levels=levels, segment_seconds=float(cfg["segment_seconds"]))

    def __len__(self):
        return len(self.levels)

    def bitrate(self, level):
        return self.levels[level].bitrate_bps

    @property
    def max_bitrate(self):
        return self.levels[-1].bitrate_bps


DEFAULT_LADDER = BitrateLadder(
    levels=(
        BitrateLevel(1_000_000, "360P", 1.28e6),
        BitrateLevel(5_000_000, "720P", 3.2e6),
        BitrateLevel(8_000_000, "1080P", 5.12e6),
        BitrateLevel(16_000_000, "2K", 7.68e6),
    ),
    segment_seconds=1.0,
)


def video_bytes_for_level(ladder: BitrateLadder, level):
    if not isinstance(level, (int, np.integer)) or not 0 <= level < len(ladder):
        raise WorkloadError(f"level {level!r} outside ladder of {len(ladder)} levels")
    return ladder.levels[level].segment_bytes


@dataclass(frozen=True)
class Task:
    id: int
    kind: TaskKind
    # None for video until a level is chosen
    data_bytes: Optional[float]
    cycles_per_byte: float
    deadline_s: float
    source_edge: int
    dest_user: Optional[int] = None
    dest_ground_station: Optional[int] = None
    arrival_step: int = 0
    chosen_level: Optional[int] = None

    @property
    def is_video(self):
        return self.kind == TaskKind.VIDEO

    @property
    def cycles(self):
        if self.data_bytes is None:
            raise WorkloadError(f"task {self.id}: size unknown until a bitrate level is chosen")
        return self.data_bytes * self.cycles_per_byte

    def with_level(self, level, ladder: BitrateLadder):
        if not self.is_video:
            raise WorkloadError(f"task {self.id} is not a video task")
        return replace(self, chosen_level=int(level), data_bytes=video_bytes_for_level(ladder, level))

    def to_dict(self):
        out = asdict(self)
        out["kind"] = self.kind.value
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["kind"] = TaskKind(d["kind"])
        return cls(**d)


@dataclass(frozen=True)
class WorkloadConfig:
    tasks_per_step: int = 25
    steps_per_episode: int = 1
    # share of monitoring tasks; ties round toward monitoring
    mix_ratio: float = 0.5
    monitoring_bytes_range: Tuple[float, float] = (1e5, 5e5)
    monitoring_cycles_per_byte: float = 200.0
    video_cycles_per_byte_range: Tuple[float, float] = (50.0, 100.0)
    monitoring_deadline_s: float = 2.0
    video_deadline_s: float = 5.0
    deadline_jitter: float = 0.0
    source_edges: Tuple[int, ...] = ()
    ground_stations: Tuple[int, ...] = ()
    users: Tuple[int, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.mix_ratio <= 1.0:
            raise WorkloadError(f"mix_ratio must lie in [0, 1], got {self.mix_ratio}")
        for name in ("monitoring_bytes_range", "video_cycles_per_byte_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise WorkloadError(f"{name} must satisfy 0 < low <= high, got ({lo}, {hi})")
        if self.tasks_per_step < 0 or self.steps_per_episode < 1:
            raise WorkloadError("tasks_per_step must be >= 0 and steps_per_episode >= 1")

    @property
    def tasks_per_episode(self):
        return self.tasks_per_step * self.steps_per_episode

    @classmethod
    def from_config(cls, cfg, graph):
        users = tuple(graph.nodes_of(NodeKind.USER))
        gss = tuple(graph.nodes_of(NodeKind.GROUND_STATION))
        edges = tuple(graph.nodes_of(NodeKind.EDGE))
        return cls(
            tasks_per_step=int(cfg.tasks_per_step),
            steps_per_episode=int(cfg.steps_per_episode),
            mix_ratio=float(cfg.mix_ratio),
            monitoring_bytes_range=tuple(cfg.monitoring_bytes_range),
            monitoring_cycles_per_byte=float(cfg.monitoring_cycles_per_byte),
            video_cycles_per_byte_range=tuple(cfg.video_cycles_per_byte_range),
            monitoring_deadline_s=float(cfg.monitoring_deadline_s),
            video_deadline_s=float(cfg.video_deadline_s),
            deadline_jitter=float(cfg.get("deadline_jitter", 0.0)),
            source_edges=edges,
            ground_stations=gss,
            users=users,
        )


def task_counts(n, mix_ratio):
    """(monitoring, video) counts for ``n`` tasks."""
    n_monitoring = int(math.floor(n * mix_ratio + 0.5))
    return n_monitoring, n - n_monitoring


def generate_episode(cfg: WorkloadConfig, ladder: BitrateLadder, seed, episode=0):
    """All tasks of one episode, in arrival order.

    Deterministic in (cfg, seed, episode). Video tasks carry no size yet; it
    is fixed by ``Task.with_level`` once the bitrate is chosen.
    """
    n = cfg.tasks_per_episode
    n_monitoring, n_video = task_counts(n, cfg.mix_ratio)
    if n and not cfg.source_edges:
        raise WorkloadError("workload has tasks but no source edges")
    if n_monitoring and not cfg.ground_stations:
        raise WorkloadError("monitoring tasks need at least one ground station")
    if n_video and not cfg.users:
        raise WorkloadError("video tasks need at least one user")

    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(episode)]))
    kinds = np.array([TaskKind.MONITORING] * n_monitoring + [TaskKind.VIDEO] * n_video, dtype=object)
    kinds = kinds[rng.permutation(n)] if n else kinds

    tasks = []
    for i, kind in enumerate(kinds):
        source = int(cfg.source_edges[rng.integers(len(cfg.source_edges))])
        if kind == TaskKind.MONITORING:
            lo, hi = cfg.monitoring_bytes_range
            data_bytes = float(rng.uniform(lo, hi))
            cpb = cfg.monitoring_cycles_per_byte
            deadline = cfg.monitoring_deadline_s
            dest = dict(dest_ground_station=int(cfg.ground_stations[rng.integers(len(cfg.ground_stations))]))
        else:
            lo, hi = cfg.video_cycles_per_byte_range
            data_bytes = None
            cpb = float(rng.uniform(lo, hi))
            deadline = cfg.video_deadline_s
            dest = dict(dest_user=int(cfg.users[rng.integers(len(cfg.users))]))
        if cfg.deadline_jitter:
            deadline *= float(rng.uniform(1.0 - cfg.deadline_jitter, 1.0 + cfg.deadline_jitter))
        tasks.append(
            Task(
                id=int(episode) * n + i,
                kind=kind,
                data_bytes=data_bytes,
                cycles_per_byte=cpb,
                deadline_s=deadline,
                source_edge=source,
                arrival_step=i // cfg.tasks_per_step if cfg.tasks_per_step else 0,
                **dest,
            )
        )
    return tasks


def dump_tasks(tasks, file):
    """Write ``tasks`` as JSON lines, one task per line, so a workload can be replayed."""
    sldump([t.to_dict() for t in tasks], file, file_format="jsonl")


def load_tasks(file):
    return [Task.from_dict(d) for d in slload(file, file_format="jsonl")]
