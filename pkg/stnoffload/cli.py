"""
Command-line entry point: ``stn-sim <subcommand> [options]``.

Every run writes ``effective_config.json`` and ``log.txt`` to its output
directory. Exit codes: 0 success, 2 config error, 3 runtime error,
4 non-finite training abort.
"""
import argparse
import logging
import os
import os.path as osp
import sys

import pandas as pd

from .config import DEFAULT_PRESET, PRESETS, ConfigError, load_config
from .models import SCHEME_BUILD_FUNCS
from .models.masac import CheckpointError, NonFiniteError
from .network.channel import ChannelError
from .network.topology import LedgerError, NodeKind, TopologyError
from .sim.engine import Simulation, compare, evaluate, evaluation_workload, train
from .sim.offload import InfeasibleOffload
from .sim.workload import WorkloadError, dump_tasks
from .util.logger import setup_logger
from .util.slconfig import DictAction
from .util.slio import sldump

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_NONFINITE = 4

CONFIG_ERRORS = (ConfigError, TopologyError, ChannelError, WorkloadError)
RUNTIME_ERRORS = (CheckpointError, LedgerError, InfeasibleOffload, OSError, RuntimeError, ValueError, KeyError)

CURVE_SERIES = ["mean_reward", "mean_qoe", "mean_energy", "completion_rate"]
COMPARE_CRITERIA = ["completion_rate", "reward", "energy", "delay"]

logger = logging.getLogger("stnoffload.cli")


def get_args_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", type=str, default=None, help="path to a JSON/YAML config document")
    common.add_argument(
        "--preset",
        type=str,
        default=None,
        choices=sorted(PRESETS),
        help=f"preset the config is merged onto when it has no _base_ (default {DEFAULT_PRESET})",
    )
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    common.add_argument("--output-dir", "-o", type=str, default="outputs", help="output directory")
    common.add_argument("--verbosity", "-v", type=int, default=1, help="0 warnings, 1 info, 2 debug")
    common.add_argument(
        "--options",
        nargs="+",
        action=DictAction,
        default=None,
        help="override config entries, e.g. sac.lr=1e-3 compare.schemes=rrp,rnd_maxbr",
    )

    parser = argparse.ArgumentParser("stn-sim", description="satellite-terrestrial task offloading simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate-config", parents=[common], help="validate the effective config")
    sub.add_parser("build-topology", parents=[common], help="build the network graph and write topology.json")

    p = sub.add_parser("train", parents=[common], help="train a learned scheme")
    p.add_argument("--scheme", type=str, default="cc_masac", choices=["cc_masac", "sac_single"])

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a checkpoint greedily")
    p.add_argument("--checkpoint", type=str, default=None, help="checkpoint written by train")

    p = sub.add_parser("compare", parents=[common], help="evaluate several schemes on identical workloads")
    p.add_argument(
        "--schemes", nargs="+", default=None, choices=SCHEME_BUILD_FUNCS.names(), help="defaults to compare.schemes"
    )
    p.add_argument("--checkpoints", nargs="+", action=DictAction, default=None, help="scheme=path pairs")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("export", parents=[common], help="write plotting CSVs from a run directory")
    p.add_argument("--input-dir", type=str, default=None, help="run directory, defaults to --output-dir")
    p.add_argument(
        "--workload",
        type=int,
        default=None,
        metavar="N",
        help="also write the task lists of the first N evaluation episodes to workload.jsonl",
    )
    return parser


def cmd_validate_config(cfg, args):
    sim = Simulation(cfg)
    g = sim.graph
    logger.info(
        "config ok: %d edges, %d satellites, %d ground stations, %d agents",
        len(g.nodes_of(NodeKind.EDGE)),
        len(g.nodes_of(NodeKind.SATELLITE)),
        len(g.nodes_of(NodeKind.GROUND_STATION)),
        len(g.nodes_of(NodeKind.GROUND_STATION)),
    )
    return EXIT_OK


def cmd_build_topology(cfg, args):
    sim = Simulation(cfg)
    g = sim.graph
    topology = dict(
        nodes=[
            dict(id=n.id, kind=n.kind.value, position=list(n.position), compute_capacity=n.compute_capacity)
            for n in g.nodes
        ],
        links=[
            dict(
                src=l.src,
                dst=l.dst,
                band=l.band.value,
                capacity_bps=l.capacity_bps,
                distance_m=g.distance(l.src, l.dst),
            )
            for _, l in sorted(g.links.items())
        ],
    )
    path = osp.join(args.output_dir, "topology.json")
    sldump(topology, path)
    logger.info("wrote %d nodes and %d links to %s", len(topology["nodes"]), len(topology["links"]), path)
    return EXIT_OK


def cmd_train(cfg, args):
    result = train(cfg, args.output_dir, scheme_name=args.scheme)
    logger.info("final checkpoint: %s", result.checkpoint)
    return EXIT_OK


def cmd_evaluate(cfg, args):
    if args.checkpoint is None:
        logger.error("evaluate needs --checkpoint")
        return EXIT_CONFIG
    evaluate(cfg, args.checkpoint, args.output_dir)
    return EXIT_OK


def cmd_compare(cfg, args):
    compare(cfg, schemes=args.schemes, checkpoints=args.checkpoints, workers=args.workers, out_dir=args.output_dir)
    return EXIT_OK


def _read_tasks(path):
    df = pd.read_csv(path)
    for col in ("cause", "path"):
        df[col] = df[col].fillna("")
    return df.astype(object).where(df.notna(), None).to_dict("records")


def cmd_export(cfg, args):
    src = args.input_dir or args.output_dir
    written = []
    train_log = osp.join(src, "train_log.csv")
    if osp.isfile(train_log):
        df = pd.read_csv(train_log)
        curve = df.melt(id_vars=["episode", "step"], value_vars=CURVE_SERIES, var_name="series", value_name="value")
        curve.to_csv(osp.join(args.output_dir, "training_curve.csv"), index=False)
        written.append("training_curve.csv")
    compare_csv = osp.join(src, "compare.csv")
    if osp.isfile(compare_csv):
        df = pd.read_csv(compare_csv)
        table = df.melt(
            id_vars=["scheme", "tasks"], value_vars=COMPARE_CRITERIA, var_name="criterion", value_name="value"
        )
        table.to_csv(osp.join(args.output_dir, "volume_comparison.csv"), index=False)
        written.append("volume_comparison.csv")
    tasks_csv = osp.join(src, "tasks.csv")
    if osp.isfile(tasks_csv):
        sldump(_read_tasks(tasks_csv), osp.join(args.output_dir, "tasks.jsonl"))
        written.append("tasks.jsonl")
    if args.workload:
        tasks = evaluation_workload(Simulation(cfg), args.workload)
        dump_tasks(tasks, osp.join(args.output_dir, "workload.jsonl"))
        written.append("workload.jsonl")
    if not written:
        raise FileNotFoundError(f"{src} holds none of train_log.csv, compare.csv, tasks.csv")
    logger.info("exported %s", ", ".join(written))
    return EXIT_OK


COMMANDS = {
    "validate-config": cmd_validate_config,
    "build-topology": cmd_build_topology,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "export": cmd_export,
}


def parse_and_validate(args):
    """Build the validated effective config for parsed command-line ``args``.

    Raises:
        ConfigError: on any invalid field of the config document or options.
    """
    return load_config(args.config, args.options, args.seed, args.preset)


def run(args, cfg):
    try:
        return COMMANDS[args.command](cfg, args)
    except NonFiniteError as e:
        logger.error("training aborted: %s", e)
        return EXIT_NONFINITE
    except CONFIG_ERRORS as e:
        logger.error("invalid configuration: %s", e)
        return EXIT_CONFIG
    except RUNTIME_ERRORS as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_RUNTIME


def main(argv=None):
    parser = get_args_parser()
    args = parser.parse_args(argv)
    os.makedirs(args.output_dir, exist_ok=True)
    setup_logger(args.output_dir, verbosity=args.verbosity)
    try:
        cfg, seed_source = parse_and_validate(args)
    except (ConfigError, OSError) as e:
        logger.error("invalid configuration: %s", e)
        return EXIT_CONFIG
    logger.info("%s: seed %d (from %s)", args.command, cfg.seed, seed_source)
    cfg.dump(osp.join(args.output_dir, "effective_config.json"))
    return run(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
