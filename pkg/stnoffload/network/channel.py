"""
Physical-layer link rates: Shannon uplinks, free-space loss and
inter-satellite SNR, plus the per-step channel gain process.

All functions take and return linear SI quantities. dB values are converted
once when the config is parsed (see ``ChannelParams.from_config``).
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

BOLTZMANN = 1.380649e-23  # J/K
LIGHT_SPEED = 299792458.0  # m/s


class ChannelError(ValueError):
    pass


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    noise_temperature_k: float = 290.0
    carrier_hz: float = 27e9
    # N_0 override in dBm/Hz; None falls back to k_B * T
    noise_psd_dbm_hz: Optional[float] = -174.0
    # "psd": ISL SNR against the 1 Hz noise power, "bandwidth": against noise over B_s
    isl_noise: str = "psd"
    boltzmann: float = BOLTZMANN
    light_speed: float = LIGHT_SPEED

    def __post_init__(self):
        if self.noise_temperature_k <= 0:
            raise ChannelError(f"noise_temperature_k must be positive, got {self.noise_temperature_k}")
        if self.carrier_hz <= 0:
            raise ChannelError(f"carrier_hz must be positive, got {self.carrier_hz}")
        if self.isl_noise not in ("psd", "bandwidth"):
            raise ChannelError(f"isl_noise must be 'psd' or 'bandwidth', got {self.isl_noise!r}")

    @classmethod
    def from_config(cls, cfg):
        return cls(
            noise_temperature_k=float(cfg.noise_temperature_k),
            carrier_hz=float(cfg.carrier_hz),
            noise_psd_dbm_hz=None if cfg.noise_psd_dbm_hz is None else float(cfg.noise_psd_dbm_hz),
            isl_noise=cfg.get("isl_noise", "psd"),
        )


def noise_power(bandwidth_hz, p: ChannelParams):
    """Noise power over ``bandwidth_hz`` in watts."""
    if bandwidth_hz <= 0:
        raise ChannelError(f"bandwidth must be positive, got {bandwidth_hz}")
    if p.noise_psd_dbm_hz is not None:
        return dbm_to_watts(p.noise_psd_dbm_hz) * bandwidth_hz
    return p.boltzmann * p.noise_temperature_k * bandwidth_hz


def ground_uplink_rate(bandwidth_hz, gain, tx_power_w, p: ChannelParams):
    """B log2(1 + g p / (B N_0)); used for edge, gateway and ground-station links."""
    if gain < 0 or tx_power_w < 0:
        raise ChannelError("gain and tx power must be non-negative")
    n0 = noise_power(bandwidth_hz, p)
    return bandwidth_hz * math.log2(1.0 + gain * tx_power_w / n0)


def fspl(dist_m, carrier_hz, light_speed=LIGHT_SPEED):
    if dist_m <= 0:
        raise ChannelError(f"free-space loss is singular at distance {dist_m}")
    return (4.0 * math.pi * carrier_hz * dist_m / light_speed) ** 2


def isl_snr(tx_power_w, gain_tx, gain_rx, loss, noise_w):
    if min(tx_power_w, gain_tx, gain_rx, loss, noise_w) <= 0:
        raise ChannelError("isl_snr inputs must be positive")
    return tx_power_w * gain_tx * gain_rx / (noise_w * loss)


def isl_rate(bandwidth_hz, snr):
    if bandwidth_hz <= 0:
        raise ChannelError(f"bandwidth must be positive, got {bandwidth_hz}")
    if snr < 0:
        raise ChannelError(f"snr must be non-negative, got {snr}")
    return bandwidth_hz * math.log2(1.0 + snr)


def isl_noise_power(bandwidth_hz, p: ChannelParams):
    if p.isl_noise == "psd":
        return noise_power(1.0, p)
    return noise_power(bandwidth_hz, p)


def sample_gain(link, step, seed):
    """Log-normal channel power gain with mean ``link.gain_mean``.

    The draw is keyed on (seed, src, dst, step) only, so it does not depend on
    how many other links were sampled before it.
    """
    if link.gain_sigma == 0:
        return link.gain_mean
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(link.src), int(link.dst), int(step)]))
    z = rng.standard_normal()
    sigma = link.gain_sigma
    return link.gain_mean * math.exp(sigma * z - 0.5 * sigma * sigma)


def link_rate(link, dist_m, p: ChannelParams, gain=None):
    """Maximum data rate of ``link`` in bit/s.

    Satellite-to-satellite links go through free-space loss and SNR; every
    other link uses the Shannon uplink form with its channel power gain.
    """
    if link.is_isl:
        loss = fspl(dist_m, p.carrier_hz, p.light_speed)
        snr = isl_snr(
            link.tx_power_w,
            link.antenna_gain_tx,
            link.antenna_gain_rx,
            loss,
            isl_noise_power(link.bandwidth_hz, p),
        )
        return isl_rate(link.bandwidth_hz, snr)
    if gain is None:
        gain = link.gain_mean
    return ground_uplink_rate(link.bandwidth_hz, gain, link.tx_power_w, p)
