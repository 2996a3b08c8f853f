"""Link budget pieces shared by the analytic and simulation engines."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .antenna import SectorAntennaParams


class LosState(enum.Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class NetworkParams:
    density_per_m2: float
    station_height_m: float
    tx_power_w: float
    near_field_loss: float  # linear
    noise_w: float
    alpha_los: float
    alpha_nlos: float
    m_los: int
    m_nlos: int
    sector: SectorAntennaParams

    def __post_init__(self):
        checks = [
            (self.density_per_m2 > 0, "density must be > 0"),
            (self.station_height_m >= 0, "station height must be >= 0"),
            (self.tx_power_w > 0, "tx power must be > 0"),
            (self.near_field_loss > 0, "near-field loss must be > 0"),
            (self.noise_w >= 0, "noise power must be >= 0"),
            (self.alpha_los > 0 and self.alpha_nlos > 0, "path-loss exponents must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        for name in ("m_los", "m_nlos"):
            m = getattr(self, name)
            if int(m) != m or m < 1:
                raise ValueError(f"{name} must be a positive integer, got {m}")

    def alpha(self, state: LosState) -> float:
        return self.alpha_los if state is LosState.LOS else self.alpha_nlos

    def m(self, state: LosState) -> int:
        return int(self.m_los if state is LosState.LOS else self.m_nlos)

    @property
    def density_per_km2(self) -> float:
        return self.density_per_m2 * 1e6

    @property
    def mean_serving_distance_m(self) -> float:
        return 0.5 / math.sqrt(self.density_per_m2)


def received_power(net: NetworkParams, eta, mu, r_m, delta_gamma_m, state: LosState, fading):
    """p * H * eta * mu * c * d^-alpha with d the 3D link length."""
    d2 = np.asarray(r_m, dtype=float) ** 2 + np.asarray(delta_gamma_m, dtype=float) ** 2
    if np.any(d2 == 0):
        raise ValueError("received_power undefined at zero 3D distance")
    power = net.tx_power_w * fading * eta * mu * net.near_field_loss * d2 ** (-net.alpha(state) / 2)
    return float(power) if np.ndim(power) == 0 else power


def sample_fading(m: int, rng: np.random.Generator, size=None):
    """Nakagami-m power fading: Gamma(m, 1/m), unit mean."""
    if m < 1:
        raise ValueError("fading order must be >= 1")
    if m == 1:
        return rng.standard_exponential(size)
    return rng.gamma(m, 1.0 / m, size)


def sinr(signal_w: float, interference_w: float, noise_w: float) -> float:
    denom = interference_w + noise_w
    if denom <= 0:
        raise ValueError("SINR undefined with zero interference and zero noise")
    return signal_w / denom
