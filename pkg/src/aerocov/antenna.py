"""UAV antenna types, the illuminated interference region and the station sector pattern."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class AntennaKind(enum.Enum):
    OMNI = "omni"
    FIXED = "fixed"  # downtilted cone beneath the UAV
    STEERABLE = "steerable"  # rectangular beam aligned on the serving station


@dataclass(frozen=True)
class UavAntenna:
    kind: AntennaKind
    beamwidth_rad: float = 2 * math.pi
    # FIXED only: serving link gets zero gain when the server lies outside the cone.
    serving_lobe_exclusion: bool = False

    def __post_init__(self):
        if self.kind is not AntennaKind.OMNI and not 0 < self.beamwidth_rad < 2 * math.pi:
            raise ValueError(
                f"{self.kind.value} antenna needs 0 < beamwidth < 2*pi, got {self.beamwidth_rad}"
            )

    @classmethod
    def omni(cls):
        return cls(AntennaKind.OMNI)

    @classmethod
    def fixed(cls, beamwidth_deg: float, serving_lobe_exclusion: bool = False):
        return cls(AntennaKind.FIXED, math.radians(beamwidth_deg), serving_lobe_exclusion)

    @classmethod
    def steerable(cls, beamwidth_deg: float):
        return cls(AntennaKind.STEERABLE, math.radians(beamwidth_deg))


@dataclass(frozen=True)
class IlluminatedRegion:
    """Ring sector of ground positions seen by the UAV main lobe."""

    inner_radius_m: float
    outer_radius_m: float
    arc_angle_rad: float

    def __post_init__(self):
        if self.outer_radius_m < self.inner_radius_m:
            raise ValueError("outer radius below inner radius")
        if not 0 < self.arc_angle_rad <= 2 * math.pi:
            raise ValueError(f"arc angle out of (0, 2*pi]: {self.arc_angle_rad}")

    @property
    def is_empty(self) -> bool:
        return self.outer_radius_m <= self.inner_radius_m

    def contains(self, r_m, azimuth_offset_rad=0.0):
        """Membership for a transmitter at ``r_m`` whose azimuth is offset from boresight."""
        r_m = np.asarray(r_m, dtype=float)
        off = np.abs(np.angle(np.exp(1j * np.asarray(azimuth_offset_rad, dtype=float))))
        inside = (r_m >= self.inner_radius_m) & (r_m <= self.outer_radius_m)
        if self.arc_angle_rad < 2 * math.pi:
            inside &= off <= self.arc_angle_rad / 2
        return inside


@dataclass(frozen=True)
class SectorAntennaParams:
    horizontal_gain: float  # linear
    tilt_rad: float  # > 0 uptilt, < 0 downtilt
    vertical_3db_beamwidth_rad: float = math.radians(10.0)
    sidelobe_floor_db: float = 20.0

    def __post_init__(self):
        if not self.horizontal_gain > 0:
            raise ValueError("horizontal_gain must be > 0")
        if not self.vertical_3db_beamwidth_rad > 0:
            raise ValueError("vertical_3db_beamwidth_rad must be > 0")
        if not self.sidelobe_floor_db > 0:
            raise ValueError("sidelobe_floor_db must be > 0")

    def kink_angles(self):
        """Offsets from tilt where the 3GPP parabola meets the side-lobe floor."""
        half = self.vertical_3db_beamwidth_rad * math.sqrt(self.sidelobe_floor_db / 12.0)
        return self.tilt_rad - half, self.tilt_rad + half


def uav_gain(antenna: UavAntenna) -> float:
    if antenna.kind is AntennaKind.OMNI:
        return 1.0
    return 16 * math.pi / antenna.beamwidth_rad**2


def illuminated_region(antenna: UavAntenna, delta_gamma_m: float, r1_m: float) -> IlluminatedRegion:
    if r1_m < 0:
        raise ValueError(f"serving distance must be >= 0, got {r1_m}")
    dg = abs(delta_gamma_m)
    w = antenna.beamwidth_rad

    if antenna.kind is AntennaKind.OMNI:
        return IlluminatedRegion(r1_m, math.inf, 2 * math.pi)

    if antenna.kind is AntennaKind.FIXED:
        if delta_gamma_m <= 0:
            return IlluminatedRegion(r1_m, r1_m, 2 * math.pi)
        v = math.inf if w / 2 >= math.pi / 2 else delta_gamma_m * math.tan(w / 2)
        return IlluminatedRegion(r1_m, max(v, r1_m), 2 * math.pi)

    # steerable: three-branch outer radius
    v = math.inf
    if w < math.pi / 2 and dg > 0:
        phi1 = math.atan2(dg, r1_m)
        if w / 2 < phi1 < math.pi / 2 - w / 2:
            v = dg / math.tan(phi1 - w / 2)
        elif phi1 >= math.pi / 2 - w / 2:
            v = dg / math.tan(math.pi / 2 - w)
    return IlluminatedRegion(r1_m, max(v, r1_m), min(w, 2 * math.pi))


def fixed_lobe_radius(antenna: UavAntenna, delta_gamma_m: float) -> float:
    """Ground radius of the downtilted cone footprint (FIXED antennas)."""
    if delta_gamma_m <= 0:
        return 0.0
    if antenna.beamwidth_rad / 2 >= math.pi / 2:
        return math.inf
    return delta_gamma_m * math.tan(antenna.beamwidth_rad / 2)


def sector_gain(params: SectorAntennaParams, phi):
    """Linear station gain toward elevation ``phi`` (3GPP vertical pattern)."""
    phi = np.asarray(phi, dtype=float)
    att_db = np.minimum(
        12.0 * ((phi - params.tilt_rad) / params.vertical_3db_beamwidth_rad) ** 2,
        params.sidelobe_floor_db,
    )
    gain = params.horizontal_gain * 10.0 ** (-att_db / 10.0)
    return float(gain) if gain.ndim == 0 else gain
