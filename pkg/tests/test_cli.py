import json
import os.path as osp

import pandas as pd
import pytest

from stnoffload.cli import (
    EXIT_CONFIG,
    EXIT_NONFINITE,
    EXIT_OK,
    EXIT_RUNTIME,
    get_args_parser,
    main,
    parse_and_validate,
)
from stnoffload.config import SEED_ENV, ConfigError, load_config
from stnoffload.models.masac import NonFiniteError, SacAgent
from stnoffload.sim.workload import load_tasks
from stnoffload.util.slio import slload

SMALL = [
    "--options",
    "workload.tasks_per_step=8",
    "sac.hidden=16,16",
    "sac.batch_size=4",
    "sac.warmup=4",
    "train.episodes=2",
    "train.checkpoint_every=1",
    "evaluate.episodes=2",
    "compare.episodes=2",
    "metrics.warmup_tasks=8",
    "metrics.window=8",
    "metrics.volume_step=8",
]


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def test_parser_requires_a_subcommand():
    with pytest.raises(SystemExit):
        get_args_parser().parse_args([])
    args = get_args_parser().parse_args(["compare", "--schemes", "rrp", "rnd_maxbr", "--checkpoints", "cc_masac=a.pth"])
    assert args.schemes == ["rrp", "rnd_maxbr"]
    assert args.checkpoints == {"cc_masac": "a.pth"}


def test_validate_config_writes_the_effective_config(tmp_path):
    out = str(tmp_path)
    assert main(["validate-config", "-o", out, "--seed", "9"]) == EXIT_OK
    assert osp.isfile(osp.join(out, "log.txt"))
    effective = slload(osp.join(out, "effective_config.json"))
    assert effective["seed"] == 9
    cfg, _ = load_config(osp.join(out, "effective_config.json"), env={})
    assert cfg.to_dict() == effective


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "42")
    assert main(["validate-config", "-o", str(tmp_path)]) == EXIT_OK
    assert slload(str(tmp_path / "effective_config.json"))["seed"] == 42
    assert main(["validate-config", "-o", str(tmp_path), "--seed", "1"]) == EXIT_OK
    assert slload(str(tmp_path / "effective_config.json"))["seed"] == 1


def test_config_errors_exit_with_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"channel": {"carrier_hz": -1}}))
    assert main(["validate-config", "-c", str(bad), "-o", str(tmp_path / "a")]) == EXIT_CONFIG
    assert not (tmp_path / "a" / "effective_config.json").exists()
    assert main(["validate-config", "-c", str(tmp_path / "missing.json"), "-o", str(tmp_path / "b")]) == EXIT_CONFIG
    assert main(["validate-config", "-o", str(tmp_path / "c"), "--options", "sac.gamma=1.5"]) == EXIT_CONFIG


def test_topology_errors_exit_with_2(tmp_path):
    # a user that no satellite reaches
    doc = {"topology": {"sat_user_pairs": []}}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["build-topology", "-c", str(bad), "-o", str(tmp_path)]) == EXIT_CONFIG


def test_build_topology(tmp_path):
    assert main(["build-topology", "-o", str(tmp_path)]) == EXIT_OK
    topology = slload(str(tmp_path / "topology.json"))
    assert len(topology["nodes"]) == 34
    kinds = [n["kind"] for n in topology["nodes"]]
    assert kinds.count("GroundStation") == 3
    assert all(link["capacity_bps"] > 0 for link in topology["links"])


def test_evaluate_needs_a_checkpoint(tmp_path):
    assert main(["evaluate", "-o", str(tmp_path)]) == EXIT_CONFIG
    assert main(["evaluate", "-o", str(tmp_path), "--checkpoint", str(tmp_path / "none.pth")]) == EXIT_RUNTIME


def test_train_evaluate_export(tmp_path):
    train_dir, eval_dir, export_dir = (str(tmp_path / d) for d in ("train", "eval", "export"))
    assert main(["train", "-o", train_dir, *SMALL]) == EXIT_OK
    for name in ("train_log.csv", "episodes.csv", "checkpoint.pth", "checkpoints/checkpoint0000.pth"):
        assert osp.isfile(osp.join(train_dir, name)), name

    checkpoint = osp.join(train_dir, "checkpoint.pth")
    assert main(["evaluate", "-o", eval_dir, "--checkpoint", checkpoint, *SMALL]) == EXIT_OK
    tasks = pd.read_csv(osp.join(eval_dir, "tasks.csv"))
    assert len(tasks) == 16

    assert main(["export", "-o", export_dir, "--input-dir", train_dir]) == EXIT_OK
    curve = pd.read_csv(osp.join(export_dir, "training_curve.csv"))
    assert list(curve.columns) == ["episode", "step", "series", "value"]
    assert set(curve["series"]) == {"mean_reward", "mean_qoe", "mean_energy", "completion_rate"}
    assert len(curve) == 2 * 4

    assert main(["export", "-o", export_dir, "--input-dir", eval_dir]) == EXIT_OK
    rows = slload(osp.join(export_dir, "tasks.jsonl"))
    assert [r["task_id"] for r in rows] == list(tasks["task_id"])

    assert main(["export", "-o", export_dir, "--input-dir", eval_dir, "--workload", "2", *SMALL]) == EXIT_OK
    workload = load_tasks(osp.join(export_dir, "workload.jsonl"))
    assert [t.id for t in workload] == list(tasks["task_id"])
    assert all(t.chosen_level is None for t in workload)


def test_compare_and_export(tmp_path):
    out = str(tmp_path)
    assert main(["compare", "-o", out, "--schemes", "rrp", "rnd_maxbr", *SMALL]) == EXIT_OK
    table = pd.read_csv(osp.join(out, "compare.csv"))
    assert set(table["scheme"]) == {"rrp", "rnd_maxbr"}
    assert main(["export", "-o", out]) == EXIT_OK
    long = pd.read_csv(osp.join(out, "volume_comparison.csv"))
    assert set(long["criterion"]) == {"completion_rate", "reward", "energy", "delay"}


def test_export_without_inputs(tmp_path):
    assert main(["export", "-o", str(tmp_path)]) == EXIT_RUNTIME


def test_non_finite_training_exits_with_4(tmp_path, monkeypatch):
    def explode(self, batch):
        raise NonFiniteError("non-finite actor loss")

    monkeypatch.setattr(SacAgent, "update", explode)
    assert main(["train", "-o", str(tmp_path), *SMALL, "train.episodes=4"]) == EXIT_NONFINITE
    assert (tmp_path / "checkpoint_nonfinite.pth").is_file()


def test_parse_and_validate_merges_options_and_seed():
    args = get_args_parser().parse_args(["train", "--seed", "5", "--options", "sac.lr=0.05", "sac.hidden=8,8"])
    cfg, source = parse_and_validate(args)
    assert (cfg.seed, source) == (5, "command line")
    assert cfg.sac.lr == 0.05
    assert cfg.sac.hidden == [8, 8]

    args = get_args_parser().parse_args(["train", "--options", "sac.momentum=1.0"])
    with pytest.raises(ConfigError) as err:
        parse_and_validate(args)
    assert err.value.field == "sac.momentum"


def test_preset_option(tmp_path):
    args = get_args_parser().parse_args(["validate-config", "--preset", "paper-fig4"])
    assert args.preset == "paper-fig4"
    cfg, _ = parse_and_validate(args)
    alias, _ = parse_and_validate(get_args_parser().parse_args(["validate-config", "--preset", "core3"]))
    assert cfg.to_dict() == alias.to_dict()
    with pytest.raises(SystemExit):
        get_args_parser().parse_args(["validate-config", "--preset", "fig4"])
    assert main(["validate-config", "--preset", "paper-fig4", "-o", str(tmp_path)]) == EXIT_OK
