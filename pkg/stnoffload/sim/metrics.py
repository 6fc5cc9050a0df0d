"""
QoE, per-task reward, the global objective score and episode aggregates.
"""
from dataclasses import asdict, dataclass

from ..util.meters import SmoothedValue
from .offload import TaskStatus


@dataclass(frozen=True)
class QoEParams:
    eta: float = 1.0
    kappa: float = 1.0
    nu: float = 3.0
    # bitrates are scored in units of this many bit/s (Mbps by default)
    bitrate_scale_bps: float = 1e6

    def __post_init__(self):
        if min(self.eta, self.kappa, self.nu) < 0:
            raise ValueError("QoE weights must be non-negative")

    @classmethod
    def from_config(cls, cfg):
        return cls(float(cfg.eta), float(cfg.kappa), float(cfg.nu), float(cfg.bitrate_scale_bps))


@dataclass(frozen=True)
class RewardWeights:
    delta: float = 1.0
    omega: float = 10.0
    alpha_delay: float = 1.0
    beta_comp: float = 1.0
    gamma_comm: float = 1.0
    # every agent decision in a slot receives the slot's mean task reward
    shared: bool = True

    @classmethod
    def from_config(cls, cfg):
        return cls(
            delta=float(cfg.delta),
            omega=float(cfg.omega),
            alpha_delay=float(cfg.alpha_delay),
            beta_comp=float(cfg.beta_comp),
            gamma_comm=float(cfg.gamma_comm),
            shared=bool(cfg.shared),
        )


def qoe(prev_level_bps, new_level_bps, link_usage_bps, p: QoEParams):
    """eta*r' - kappa*|r' - r| - nu*r'/f, all rates in ``p.bitrate_scale_bps`` units."""
    if link_usage_bps <= 0:
        raise ValueError(f"link usage must be positive, got {link_usage_bps}")
    s = p.bitrate_scale_bps
    r_prev, r_new, f = prev_level_bps / s, new_level_bps / s, link_usage_bps / s
    return p.eta * r_new - p.kappa * abs(r_new - r_prev) - p.nu * r_new / f


def task_reward(qoe_score, energy_j, completed, w: RewardWeights, batch_completion):
    # a discarded task contributes only the completion term
    if not completed:
        qoe_score, energy_j = 0.0, 0.0
    return qoe_score - w.delta * energy_j + w.omega * batch_completion


def _get(rec, name):
    return rec[name] if isinstance(rec, dict) else getattr(rec, name)


def _completed(rec):
    return _get(rec, "status") == TaskStatus.COMPLETED.value


def objective_score(records, w: RewardWeights):
    total = 0.0
    for rec in records:
        total += (
            _get(rec, "qoe")
            - w.alpha_delay * _get(rec, "t_total")
            - w.gamma_comm * _get(rec, "u_comm")
            - w.beta_comp * _get(rec, "u_comp")
            - w.delta * _get(rec, "e_total")
        )
    return total


def completion_ratio(records):
    records = list(records)
    if not records:
        return 0.0
    return sum(1 for r in records if _completed(r)) / len(records)


@dataclass
class EpisodeStats:
    episode: int = 0
    tasks: int = 0
    completed: int = 0
    discarded: int = 0
    completion_rate: float = 0.0
    mean_reward: float = 0.0
    mean_qoe: float = 0.0
    mean_energy: float = 0.0
    # over completed tasks only
    mean_delay: float = float("nan")
    no_path: int = 0
    bitrate_rejected: int = 0
    infeasible_offload: int = 0
    deadline: int = 0

    def to_dict(self):
        return asdict(self)


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else float("nan")


def episode_stats(records, episode=0) -> EpisodeStats:
    records = list(records)
    n = len(records)
    done = [r for r in records if _completed(r)]
    stats = EpisodeStats(
        episode=episode,
        tasks=n,
        completed=len(done),
        discarded=n - len(done),
        completion_rate=completion_ratio(records),
        mean_reward=_mean(_get(r, "reward") for r in records) if n else 0.0,
        mean_qoe=_mean(_get(r, "qoe") for r in records) if n else 0.0,
        mean_energy=_mean(_get(r, "e_total") for r in records) if n else 0.0,
        mean_delay=_mean(_get(r, "t_total") for r in done),
    )
    for r in records:
        cause = _get(r, "cause")
        if cause:
            setattr(stats, cause, getattr(stats, cause) + 1)
    return stats


def volume_curve(records, warmup_tasks=2500, window=500, volume_step=500):
    """Rolling performance against cumulative task volume.

    The first point averages the first ``warmup_tasks`` tasks; later points,
    every ``volume_step`` tasks, average the last ``window`` tasks (delay:
    the last ``window`` completed tasks).
    """
    meters = {k: SmoothedValue(window_size=window) for k in ("completion_rate", "reward", "energy", "delay")}
    points = []

    def point(n, first):
        row = dict(tasks=n)
        for k, m in meters.items():
            if m.count == 0:
                row[k] = float("nan")
            else:
                row[k] = m.global_avg if first else m.avg
        points.append(row)

    records = list(records)
    for i, rec in enumerate(records):
        done = _completed(rec)
        meters["completion_rate"].update(1.0 if done else 0.0)
        meters["reward"].update(_get(rec, "reward"))
        meters["energy"].update(_get(rec, "e_total"))
        if done:
            meters["delay"].update(_get(rec, "t_total"))
        n = i + 1
        if n == warmup_tasks:
            point(n, first=True)
        elif n > warmup_tasks and (n - warmup_tasks) % volume_step == 0:
            point(n, first=False)
    if records and len(records) < warmup_tasks:
        point(len(records), first=True)
    return points