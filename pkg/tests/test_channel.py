import math

import numpy as np
import pytest

from stnoffload.network.channel import (
    BOLTZMANN,
    LIGHT_SPEED,
    ChannelError,
    ChannelParams,
    db_to_linear,
    dbm_to_watts,
    fspl,
    ground_uplink_rate,
    isl_rate,
    isl_snr,
    link_rate,
    noise_power,
    sample_gain,
)
from stnoffload.network.topology import Band, Link


def test_unit_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(16.2) == pytest.approx(10.0**1.62)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-174.0) == pytest.approx(10.0 ** (-20.4), rel=1e-12)


def test_noise_power_psd_override_and_thermal():
    assert noise_power(1e6, ChannelParams()) == pytest.approx(10.0 ** (-20.4) * 1e6, rel=1e-12)
    thermal = ChannelParams(noise_psd_dbm_hz=None, noise_temperature_k=290.0)
    assert noise_power(1e6, thermal) == pytest.approx(BOLTZMANN * 290.0 * 1e6, rel=1e-12)
    with pytest.raises(ChannelError):
        noise_power(0.0, thermal)


def test_ground_uplink_rate_matches_shannon_on_random_inputs():
    rng = np.random.default_rng(0)
    p = ChannelParams()
    for _ in range(100):
        bw = rng.uniform(1e5, 1e9)
        gain = 10.0 ** rng.uniform(-16, -8)
        power = rng.uniform(0.1, 20.0)
        n0 = 10.0 ** ((-174.0 - 30.0) / 10.0) * bw
        expected = bw * np.log2(1.0 + gain * power / n0)
        assert ground_uplink_rate(bw, gain, power, p) == pytest.approx(expected, rel=1e-9)


def test_fspl_and_isl_rate_on_random_inputs():
    rng = np.random.default_rng(1)
    for _ in range(100):
        d = rng.uniform(1e5, 5e6)
        f = rng.uniform(1e9, 4e10)
        loss = (4.0 * math.pi * f * d / LIGHT_SPEED) ** 2
        assert fspl(d, f) == pytest.approx(loss, rel=1e-9)
        snr = 1000.0 * 10.0**1.62 * 10.0**1.62 / (1e-20 * loss)
        assert isl_snr(1000.0, 10.0**1.62, 10.0**1.62, loss, 1e-20) == pytest.approx(snr, rel=1e-9)
        assert isl_rate(5e8, snr) == pytest.approx(5e8 * math.log2(1.0 + snr), rel=1e-9)


def test_fspl_rejects_zero_distance():
    with pytest.raises(ChannelError):
        fspl(0.0, 27e9)


def test_isl_noise_reference_band():
    link = Link(
        src=0,
        dst=1,
        band=Band.SATELLITE,
        bandwidth_hz=500e6,
        tx_power_w=1000.0,
        antenna_gain_tx=10.0**1.62,
        antenna_gain_rx=10.0**1.62,
        is_isl=True,
    )
    psd = link_rate(link, 1e6, ChannelParams(isl_noise="psd"))
    band = link_rate(link, 1e6, ChannelParams(isl_noise="bandwidth"))
    assert psd > band
    # the two differ by exactly the SNR ratio B_s inside the log
    snr_psd = 2.0 ** (psd / 500e6) - 1.0
    snr_band = 2.0 ** (band / 500e6) - 1.0
    assert snr_psd / snr_band == pytest.approx(500e6, rel=1e-6)


def test_isl_rate_ignores_sampled_gain():
    link = Link(src=0, dst=1, band=Band.SATELLITE, bandwidth_hz=1e6, tx_power_w=1000.0, is_isl=True)
    p = ChannelParams()
    assert link_rate(link, 1e6, p, gain=123.0) == link_rate(link, 1e6, p)


def test_sample_gain_is_deterministic_and_unbiased():
    link = Link(src=3, dst=7, band=Band.GROUND, bandwidth_hz=1e6, tx_power_w=1.0, gain_mean=2e-10, gain_sigma=0.25)
    assert sample_gain(link, 5, 42) == sample_gain(link, 5, 42)
    assert sample_gain(link, 5, 42) != sample_gain(link, 6, 42)
    draws = np.array([sample_gain(link, step, 42) for step in range(20000)])
    assert draws.min() > 0
    assert draws.mean() == pytest.approx(2e-10, rel=0.02)


def test_sample_gain_without_fading_returns_mean():
    link = Link(src=0, dst=1, band=Band.GROUND, bandwidth_hz=1e6, tx_power_w=1.0, gain_mean=3.0, gain_sigma=0.0)
    assert sample_gain(link, 11, 0) == 3.0


@pytest.mark.parametrize("kw", [dict(noise_temperature_k=0.0), dict(carrier_hz=-1.0), dict(isl_noise="loud")])
def test_invalid_channel_params(kw):
    with pytest.raises(ChannelError):
        ChannelParams(**kw)
