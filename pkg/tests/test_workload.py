import pytest

from stnoffload.sim.workload import (
    DEFAULT_LADDER,
    BitrateLadder,
    BitrateLevel,
    Task,
    TaskKind,
    WorkloadConfig,
    WorkloadError,
    dump_tasks,
    generate_episode,
    load_tasks,
    task_counts,
    video_bytes_for_level,
)


def _cfg(**kw):
    base = dict(tasks_per_step=25, steps_per_episode=2, source_edges=(0, 1, 2), ground_stations=(7, 8), users=(9,))
    base.update(kw)
    return WorkloadConfig(**base)


def test_task_counts_round_to_nearest():
    assert task_counts(25, 0.5) == (13, 12)
    assert task_counts(10, 0.0) == (0, 10)
    assert task_counts(10, 1.0) == (10, 0)
    assert task_counts(0, 0.5) == (0, 0)


def test_generation_is_deterministic_per_seed_and_episode():
    cfg = _cfg()
    a = generate_episode(cfg, DEFAULT_LADDER, seed=3, episode=1)
    assert a == generate_episode(cfg, DEFAULT_LADDER, seed=3, episode=1)
    assert a != generate_episode(cfg, DEFAULT_LADDER, seed=3, episode=2)
    assert a != generate_episode(cfg, DEFAULT_LADDER, seed=4, episode=1)


def test_generated_tasks_follow_the_config():
    cfg = _cfg(mix_ratio=0.4)
    tasks = generate_episode(cfg, DEFAULT_LADDER, seed=0, episode=2)
    assert len(tasks) == 50
    assert [t.id for t in tasks] == list(range(100, 150))
    assert [t.arrival_step for t in tasks] == [0] * 25 + [1] * 25
    monitoring = [t for t in tasks if t.kind == TaskKind.MONITORING]
    video = [t for t in tasks if t.is_video]
    assert (len(monitoring), len(video)) == (20, 30)
    for t in monitoring:
        assert 1e5 <= t.data_bytes <= 5e5
        assert t.cycles_per_byte == 200.0
        assert t.deadline_s == 2.0
        assert t.dest_ground_station in (7, 8) and t.dest_user is None
    for t in video:
        assert t.data_bytes is None and t.chosen_level is None
        assert 50.0 <= t.cycles_per_byte <= 100.0
        assert t.deadline_s == 5.0
        assert t.dest_user == 9
    assert {t.source_edge for t in tasks} <= {0, 1, 2}


def test_deadline_jitter_stays_in_band():
    tasks = generate_episode(_cfg(deadline_jitter=0.2), DEFAULT_LADDER, seed=1)
    for t in tasks:
        nominal = 5.0 if t.is_video else 2.0
        assert 0.8 * nominal <= t.deadline_s <= 1.2 * nominal


def test_video_size_fixed_by_level():
    video = next(t for t in generate_episode(_cfg(mix_ratio=0.0), DEFAULT_LADDER, seed=0))
    with pytest.raises(WorkloadError):
        video.cycles
    chosen = video.with_level(3, DEFAULT_LADDER)
    assert chosen.data_bytes == 7.68e6
    assert chosen.chosen_level == 3
    assert chosen.cycles == pytest.approx(7.68e6 * video.cycles_per_byte)
    assert Task.from_dict(chosen.to_dict()) == chosen


def test_monitoring_tasks_have_no_level():
    mon = next(t for t in generate_episode(_cfg(mix_ratio=1.0), DEFAULT_LADDER, seed=0))
    with pytest.raises(WorkloadError):
        mon.with_level(0, DEFAULT_LADDER)


def test_video_bytes_for_level_bounds():
    assert video_bytes_for_level(DEFAULT_LADDER, 0) == 1.28e6
    for bad in (-1, 4, 1.5):
        with pytest.raises(WorkloadError):
            video_bytes_for_level(DEFAULT_LADDER, bad)


def test_ladder_must_increase():
    lo = BitrateLevel(1_000_000, "a", 1e6)
    with pytest.raises(WorkloadError):
        BitrateLadder(levels=(lo,))
    with pytest.raises(WorkloadError):
        BitrateLadder(levels=(lo, BitrateLevel(1_000_000, "b", 2e6)))
    with pytest.raises(WorkloadError):
        BitrateLadder(levels=(lo, BitrateLevel(2_000_000, "b", 1e6)))
    assert DEFAULT_LADDER.max_bitrate == 16_000_000 and len(DEFAULT_LADDER) == 4


@pytest.mark.parametrize(
    "kw", [dict(mix_ratio=1.5), dict(monitoring_bytes_range=(5.0, 1.0)), dict(steps_per_episode=0)]
)
def test_invalid_workload_config(kw):
    with pytest.raises(WorkloadError):
        _cfg(**kw)


def test_missing_destinations():
    with pytest.raises(WorkloadError):
        generate_episode(_cfg(users=()), DEFAULT_LADDER, seed=0)


def test_task_list_round_trips_through_json_lines(tmp_path):
    tasks = generate_episode(_cfg(), DEFAULT_LADDER, seed=5, episode=0)
    tasks[-1] = next(t for t in tasks if t.is_video).with_level(2, DEFAULT_LADDER)
    path = str(tmp_path / "workload.jsonl")
    dump_tasks(tasks, path)
    with open(path) as f:
        assert sum(1 for _ in f) == len(tasks)
    again = load_tasks(path)
    assert again == tasks
    assert again[-1].chosen_level == 2 and again[-1].data_bytes == 5.12e6
    assert {t.kind for t in again} == {TaskKind.MONITORING, TaskKind.VIDEO}
