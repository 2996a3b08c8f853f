"""Urban building-grid propagation environment.

The line-of-sight model follows the ITU-R statistical city layout: buildings on
a square grid, ``beta`` buildings per km^2 covering a fraction ``delta`` of the
ground, with Rayleigh(``kappa``) distributed heights.  A ground path of length
``r`` crosses ``floor(r_km * sqrt(beta * delta))`` buildings; the link is LOS
when every crossed building is shorter than the straight line between the two
antennas at that building.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Buildings per km^2 -> per m^2.
_KM2_TO_M2 = 1e-6

# P_l(b) is tabulated up to this many crossed buildings; larger counts are
# evaluated individually (they only show up in far integration tails).
_TABLE_MAX = 8192


@dataclass(frozen=True)
class EnvironmentParams:
    beta: float  # buildings per km^2
    delta: float  # built-up area fraction
    kappa: float  # Rayleigh scale of building heights [m]

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must satisfy 0 < delta < 1, got {self.delta}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")

    @property
    def crossings_per_m(self) -> float:
        """Mean number of buildings crossed per metre of ground path."""
        return math.sqrt(self.beta * _KM2_TO_M2 * self.delta)

    @property
    def building_spacing_m(self) -> float:
        """Ground distance between successive building-count increments."""
        return 1.0 / self.crossings_per_m


@dataclass(frozen=True)
class LinkGeometry:
    horizontal_distance_m: float
    tx_height_m: float
    rx_height_m: float

    def __post_init__(self):
        for name in ("horizontal_distance_m", "tx_height_m", "rx_height_m"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.horizontal_distance_m < 0:
            raise ValueError("horizontal_distance_m must be >= 0")
        if self.tx_height_m < 0 or self.rx_height_m < 0:
            raise ValueError("antenna heights must be >= 0")

    @property
    def delta_gamma(self) -> float:
        return self.rx_height_m - self.tx_height_m

    @property
    def vertical_angle(self) -> float:
        return vertical_angle(self)

    @property
    def distance_3d(self) -> float:
        return math.hypot(self.horizontal_distance_m, self.delta_gamma)


def building_count(env: EnvironmentParams, r_m):
    """Number of buildings crossed over ground distance ``r_m`` (array aware)."""
    b = np.floor(np.asarray(r_m, dtype=float) * env.crossings_per_m)
    return np.maximum(b, 0).astype(np.int64)


class LosTable:
    """P_l as a function of the crossed-building count, for fixed endpoint heights.

    P_l depends on the distance only through ``building_count``, so both the
    quadrature and the simulator look values up here.
    """

    def __init__(self, env: EnvironmentParams, h_a: float, h_b: float):
        self.env = env
        self.h_hi = float(max(h_a, h_b))
        self.h_lo = float(min(h_a, h_b))
        self._two_k2 = 2.0 * env.kappa**2
        self._table = np.ones(1)
        self._extra: dict[int, float] = {}

    def _value(self, b: int) -> float:
        if b == 0:
            return 1.0
        if b > _TABLE_MAX:
            # At least floor(q*b) crossed buildings sit below h_lo + q*(h_hi - h_lo),
            # so P_l <= f(that height)^floor(q*b); skip the O(b) product once
            # such a bound underflows.
            for j in range(1, 11):
                q = 0.5**j
                h = self.h_lo + q * (self.h_hi - self.h_lo)
                f = -math.expm1(-h * h / self._two_k2)
                if f <= 0.0 or (f < 1.0 and math.floor(q * b) * math.log(f) < -750.0):
                    return 0.0
        n = np.arange(b, dtype=float)
        h = self.h_hi - (n + 0.5) * (self.h_hi - self.h_lo) / b
        with np.errstate(divide="ignore"):
            return float(np.exp(np.sum(np.log1p(-np.exp(-h * h / self._two_k2)))))

    def _grow(self, b_max: int):
        old = len(self._table)
        if b_max < old:
            return
        new = min(max(b_max + 1, 2 * old), _TABLE_MAX + 1)
        values = np.array([self._value(b) for b in range(old, new)])
        self._table = np.concatenate([self._table, values])

    def __call__(self, b):
        b = np.asarray(b, dtype=np.int64)
        if b.size == 0:
            return np.zeros(b.shape)
        top = int(b.max())
        self._grow(min(top, _TABLE_MAX))
        if top <= _TABLE_MAX:
            return self._table[b]
        out = np.empty(b.shape)
        small = b <= _TABLE_MAX
        out[small] = self._table[b[small]]
        for value in np.unique(b[~small]):
            value = int(value)
            if value not in self._extra:
                self._extra[value] = self._value(value)
            out[b == value] = self._extra[value]
        return out

    def probability(self, r_m):
        return self(building_count(self.env, r_m))

    def breakpoints(self, r_limit: float, floor: float = 1e-12) -> np.ndarray:
        """Distances (< r_limit) where P_l steps, while P_l stays above ``floor``."""
        spacing = self.env.building_spacing_m
        k_max = int(min(r_limit / spacing, _TABLE_MAX))
        if k_max < 1:
            return np.empty(0)
        size = min(64, k_max)
        self._grow(size)
        while size < k_max and self._table[size] > floor:
            size = min(2 * size, k_max)
            self._grow(size)
        ks = np.arange(1, size + 1)
        keep = self._table[ks - 1] > floor
        return ks[keep] * spacing


@lru_cache(maxsize=256)
def los_table(env: EnvironmentParams, h_a: float, h_b: float) -> LosTable:
    return LosTable(env, h_a, h_b)


def los_probability(env: EnvironmentParams, link: LinkGeometry) -> float:
    """ITU-R grid LOS probability for a single link."""
    table = los_table(env, link.tx_height_m, link.rx_height_m)
    return float(table.probability(link.horizontal_distance_m))


def los_probability_array(env: EnvironmentParams, r_m, tx_height_m: float, rx_height_m: float):
    return los_table(env, float(tx_height_m), float(rx_height_m)).probability(r_m)


def vertical_angle(link: LinkGeometry) -> float:
    """Elevation of the receiver seen from the transmitter, in radians.

    At zero horizontal distance this is +pi/2, -pi/2 or 0 depending on the
    sign of the height difference.
    """
    return float(np.arctan2(link.delta_gamma, link.horizontal_distance_m))
