import copy

import pytest

from stnoffload.config import load_config
from stnoffload.network.channel import ChannelParams
from stnoffload.network.topology import build_graph


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long runs on the full evaluation preset")


N0_W_HZ = 10.0 ** ((-174.0 - 30.0) / 10.0)


def gain_for_rate(rate_bps, bandwidth_hz, tx_power_w=1.0):
    return (2.0 ** (rate_bps / bandwidth_hz) - 1.0) * bandwidth_hz * N0_W_HZ / tx_power_w


def ground_link(src, dst, rate_bps, bandwidth_hz=1e6, band="Ground", **kw):
    return dict(
        src=src,
        dst=dst,
        band=band,
        bandwidth_hz=bandwidth_hz,
        tx_power_w=1.0,
        gain_mean=gain_for_rate(rate_bps, bandwidth_hz),
        gain_sigma=0.0,
        **kw,
    )


def isl_link(src, dst, bandwidth_hz=1e6):
    return dict(
        src=src,
        dst=dst,
        band="Satellite",
        bandwidth_hz=bandwidth_hz,
        tx_power_w=1000.0,
        gains=dict(tx=10.0**1.62, rx=10.0**1.62),
        bidirectional=True,
    )


def toy_topology(edge_capacity=500_000_000, sat_capacity=50_000_000_000, rate_bps=20e6):
    """Two edges, one gateway, two satellites, one ground station, one user.

    0 <-> 1 -> 2 -> 3 <-> 4, 3 -> 5, 4 -> 5, 5 -> 6; edge 0 also reaches 2.
    """
    nodes = [
        dict(id=0, kind="Edge", position=[0.0, 0.0, 0.0], compute_capacity=edge_capacity),
        dict(id=1, kind="Edge", position=[10e3, 0.0, 0.0], compute_capacity=edge_capacity),
        dict(id=2, kind="Gateway", position=[5e3, 5e3, 0.0], compute_capacity=0),
        dict(id=3, kind="Satellite", position=[0.0, 0.0, 550e3], compute_capacity=sat_capacity),
        dict(id=4, kind="Satellite", position=[800e3, 0.0, 550e3], compute_capacity=sat_capacity),
        dict(id=5, kind="GroundStation", position=[400e3, 0.0, 0.0], compute_capacity=0),
        dict(id=6, kind="User", position=[420e3, 0.0, 0.0], compute_capacity=0),
    ]
    links = [
        ground_link(0, 1, rate_bps, bidirectional=True),
        ground_link(0, 2, rate_bps),
        ground_link(1, 2, rate_bps),
        ground_link(2, 3, rate_bps, band="Satellite"),
        isl_link(3, 4),
        ground_link(3, 5, rate_bps, band="Satellite"),
        ground_link(4, 5, rate_bps, band="Satellite"),
        ground_link(5, 6, rate_bps),
    ]
    return dict(nodes=nodes, links=links, sat_user_pairs=[dict(satellite=3, users=[6]), dict(satellite=4, users=[6])])


@pytest.fixture
def toy_graph():
    return build_graph(toy_topology(), ChannelParams())


@pytest.fixture(scope="session")
def _preset():
    cfg, _ = load_config(env={})
    return cfg


@pytest.fixture
def preset_cfg(_preset):
    return _preset.deepcopy()


SMALL_OPTIONS = {
    "workload.tasks_per_step": 8,
    "sac.hidden": [16, 16],
    "sac.batch_size": 4,
    "sac.warmup": 4,
    "sac.buffer_size": 1000,
    "train.episodes": 4,
    "train.checkpoint_every": 2,
    "evaluate.episodes": 3,
    "compare.episodes": 3,
    "metrics.warmup_tasks": 8,
    "metrics.window": 8,
    "metrics.volume_step": 8,
}


@pytest.fixture
def small_cfg(_preset):
    cfg = _preset.deepcopy()
    cfg.merge_from_dict(copy.deepcopy(SMALL_OPTIONS))
    return cfg
