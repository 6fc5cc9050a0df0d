# Evaluation topology: 10 edges, 5 gateways, 3 core satellites with 7 neighbors,
# 3 ground stations and 6 users.
# Positions are static, in a local Cartesian frame (meters).

_N0 = 10.0 ** ((-174.0 - 30.0) / 10.0)  # W/Hz
_ALT = 550e3
_B_G = 100e6
_B_S = 500e6


def _gain_for_rate(rate_bps, bandwidth_hz, tx_power_w):
    # channel power gain that yields rate_bps on the Shannon uplink
    return (2.0 ** (rate_bps / bandwidth_hz) - 1.0) * bandwidth_hz * _N0 / tx_power_w


_gateways = {10: (-50e3, 30e3), 11: (50e3, -30e3), 12: (1000e3, 20e3), 13: (450e3, 850e3), 14: (550e3, 900e3)}
_uplink = {10: 15, 11: 15, 12: 16, 13: 17, 14: 17}
_sats = {
    15: (0.0, 0.0),
    16: (1000e3, 0.0),
    17: (500e3, 866e3),
    18: (-700e3, 300e3),
    19: (-200e3, -700e3),
    20: (1200e3, -700e3),
    21: (1700e3, 300e3),
    22: (1400e3, 800e3),
    23: (900e3, 1600e3),
    24: (0.0, 1600e3),
}
_isl = [(15, 16), (16, 17), (15, 17), (15, 18), (15, 19), (16, 20), (16, 21), (16, 22), (17, 23), (17, 24)]
_stations = {25: ((500e3, -800e3), (19, 20)), 26: ((1300e3, 1300e3), (22, 23)), 27: ((-500e3, 1100e3), (24, 18))}
_users = {28: 25, 29: 25, 30: 26, 31: 26, 32: 27, 33: 27}
# per-gateway uplink rates and per-user access rates spread the load unevenly.
# An edge computes about one 2K segment per slot. A second high-bitrate video
# on the same edge spills most of its bytes over the edge and satellite
# uplinks and misses the video deadline; 360P segments finish locally.
_e2g_rate = {10: 60e6, 11: 40e6, 12: 60e6, 13: 45e6, 14: 35e6}
_user_rate = {28: 30e6, 29: 24e6, 30: 28e6, 31: 20e6, 32: 26e6, 33: 30e6}

schema_version = 1
seed = 2024
mode = "train"

topology = dict(
    nodes=[
        dict(
            id=e,
            kind="Edge",
            position=[
                _gateways[10 + e // 2][0] + (8e3 if e % 2 else -8e3),
                _gateways[10 + e // 2][1] + 5e3,
                0.0,
            ],
            compute_capacity=500_000_000,
        )
        for e in range(10)
    ]
    + [dict(id=g, kind="Gateway", position=[x, y, 0.0], compute_capacity=0) for g, (x, y) in _gateways.items()]
    + [
        dict(id=s, kind="Satellite", position=[x, y, _ALT], compute_capacity=50_000_000_000)
        for s, (x, y) in _sats.items()
    ]
    + [
        dict(id=gs, kind="GroundStation", position=[x, y, 0.0], compute_capacity=0)
        for gs, ((x, y), _) in _stations.items()
    ]
    + [
        dict(
            id=u,
            kind="User",
            position=[_stations[gs][0][0] + (20e3 if u % 2 else -20e3), _stations[gs][0][1], 0.0],
            compute_capacity=0,
        )
        for u, gs in _users.items()
    ],
    links=[
        dict(
            src=e,
            dst=10 + e // 2,
            band="Ground",
            bandwidth_hz=_B_G,
            tx_power_w=1.0,
            gain_mean=_gain_for_rate(_e2g_rate[10 + e // 2], _B_G, 1.0),
            gain_sigma=0.25,
        )
        for e in range(10)
    ]
    + [
        dict(
            src=2 * g,
            dst=2 * g + 1,
            band="Ground",
            bandwidth_hz=_B_G,
            tx_power_w=1.0,
            gain_mean=_gain_for_rate(80e6, _B_G, 1.0),
            gain_sigma=0.25,
            bidirectional=True,
        )
        for g in range(5)
    ]
    + [
        dict(
            src=gw,
            dst=sat,
            band="Satellite",
            bandwidth_hz=_B_S,
            tx_power_w=10.0,
            gain_mean=_gain_for_rate(50e6, _B_S, 10.0),
            gain_sigma=0.25,
        )
        for gw, sat in _uplink.items()
    ]
    + [
        dict(
            src=a,
            dst=b,
            band="Satellite",
            bandwidth_hz=_B_S,
            tx_power_w=1000.0,
            gains=dict(tx=10.0**1.62, rx=10.0**1.62),
            bidirectional=True,
        )
        for a, b in _isl
    ]
    + [
        dict(
            src=sat,
            dst=gs,
            band="Satellite",
            bandwidth_hz=_B_S,
            tx_power_w=10.0,
            gain_mean=_gain_for_rate(150e6, _B_S, 10.0),
            gain_sigma=0.25,
        )
        for gs, (_, sats) in _stations.items()
        for sat in sats
    ]
    + [
        dict(
            src=gs,
            dst=u,
            band="Ground",
            bandwidth_hz=_B_G,
            tx_power_w=1.0,
            gain_mean=_gain_for_rate(_user_rate[u], _B_G, 1.0),
            gain_sigma=0.25,
        )
        for u, gs in _users.items()
    ],
    sat_user_pairs=[
        dict(satellite=sat, users=sorted(u for u, g in _users.items() if g == gs))
        for gs, (_, sats) in _stations.items()
        for sat in sats
    ],
)

channel = dict(
    noise_temperature_k=290.0,
    noise_psd_dbm_hz=-174.0,
    carrier_hz=27e9,
    isl_noise="psd",
)

workload = dict(
    tasks_per_step=25,
    steps_per_episode=1,
    mix_ratio=0.5,
    monitoring_bytes_range=[100_000.0, 500_000.0],
    monitoring_cycles_per_byte=200.0,
    video_cycles_per_byte_range=[50.0, 100.0],
    monitoring_deadline_s=2.0,
    video_deadline_s=5.0,
    deadline_jitter=0.0,
)

ladder = dict(
    levels=[
        dict(bitrate_bps=1_000_000, label="360P", segment_bytes=1_280_000.0),
        dict(bitrate_bps=5_000_000, label="720P", segment_bytes=3_200_000.0),
        dict(bitrate_bps=8_000_000, label="1080P", segment_bytes=5_120_000.0),
        dict(bitrate_bps=16_000_000, label="2K", segment_bytes=7_680_000.0),
    ],
    segment_seconds=1.0,
)

offload = dict(
    slot_s=1.0,
    compute_share=1.0,
    kappa_v=6e-7,
    eta_v=1e-27,
    # channel gain used as h in the upload energy: "sampled" or "mean"
    upload_gain="sampled",
)

qoe = dict(eta=1.0, kappa=1.0, nu=3.0, bitrate_scale_bps=1e6)

reward = dict(delta=1.0, omega=10.0, alpha_delay=1.0, beta_comp=1.0, gamma_comm=1.0, shared=True)

pathsel = dict(alpha_mix=0.5, count_max=5, link_weight="propagation_delay", log_decisions=False)

sac = dict(
    alpha_h=0.2,
    gamma=0.99,
    rho=0.995,
    lr=3e-4,
    momentum=0.9,
    batch_size=256,
    buffer_size=100_000,
    hidden=[128, 128],
    warmup=1000,
    threads=1,
)

# largest 2K segment
observation = dict(max_task_bytes=7_680_000.0, max_deadline_s=5.0)

train = dict(episodes=500, checkpoint_every=100)

evaluate = dict(episodes=400)

compare = dict(schemes=["cc_masac", "sac_single", "rrp", "rnd_maxbr"], episodes=400, workers=1, checkpoints=dict())

metrics = dict(warmup_tasks=2500, window=500, volume_step=500)

