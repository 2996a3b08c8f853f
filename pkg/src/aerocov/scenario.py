"""Evaluation context shared by both engines, and the result record they return."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .antenna import UavAntenna, illuminated_region, sector_gain, uav_gain
from .channel import LosState, NetworkParams
from .environment import EnvironmentParams, los_table


def gs_uptilt(delta_gamma_m: float, density_per_m2: float) -> float:
    """Uptilt pointing the station boresight at the mean serving geometry."""
    return math.atan2(delta_gamma_m, 0.5 / math.sqrt(density_per_m2))


@dataclass(frozen=True)
class Scenario:
    env: EnvironmentParams
    net: NetworkParams
    antenna: UavAntenna
    uav_height_m: float
    threshold: float  # linear SINR threshold

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")
        if not self.uav_height_m >= 0:
            raise ValueError("UAV height must be >= 0")

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    @property
    def delta_gamma(self) -> float:
        return self.uav_height_m - self.net.station_height_m

    @property
    def eta(self) -> float:
        return uav_gain(self.antenna)

    @property
    def density(self) -> float:
        return self.net.density_per_m2

    def los_table(self):
        return los_table(self.env, float(self.net.station_height_m), float(self.uav_height_m))

    def los_probability(self, r_m):
        return self.los_table().probability(r_m)

    def station_gain(self, r_m):
        """mu(phi) toward the UAV from a station at horizontal distance r."""
        return sector_gain(self.net.sector, np.arctan2(self.delta_gamma, r_m))

    def region(self, r1_m: float):
        return illuminated_region(self.antenna, self.delta_gamma, r1_m)

    def serving_s(self, r1_m, state: LosState):
        """m_t * theta * mu(phi_1)^-1 * d_1^alpha_t."""
        d2 = np.asarray(r1_m, dtype=float) ** 2 + self.delta_gamma**2
        return (
            self.net.m(state) * self.threshold / self.station_gain(r1_m)
            * d2 ** (self.net.alpha(state) / 2)
        )

    def serving_distance_pdf(self, r_m):
        lam = self.density
        r_m = np.asarray(r_m, dtype=float)
        return 2 * math.pi * lam * r_m * np.exp(-math.pi * lam * r_m**2)

    @property
    def mean_serving_distance(self) -> float:
        return self.net.mean_serving_distance_m


@dataclass
class CoverageResult:
    probability: float
    std_error: float  # MC standard error, or quadrature tolerance for the analytic engine
    n_trials: int
    method: str  # "analytic" | "monte-carlo"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability out of range: {self.probability}")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")
