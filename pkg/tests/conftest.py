import math

import pytest

from aerocov.antenna import SectorAntennaParams, UavAntenna
from aerocov.channel import NetworkParams
from aerocov.environment import EnvironmentParams
from aerocov.montecarlo import DeploymentKind
from aerocov.scenario import Scenario, gs_uptilt

# Published evaluation set, in linear units.
ENV = EnvironmentParams(beta=300.0, delta=0.5, kappa=20.0)
GS_HEIGHT = 30.0
TX_POWER = 40.0
MU_H = 10 ** (-5 / 10)
NEAR_FIELD = 10 ** (-38.4 / 10)
NOISE = 8e-13


def make_antenna(kind):
    if kind == "omni":
        return UavAntenna.omni()
    if kind == "fixed":
        return UavAntenna.fixed(165.0)
    if kind == "steerable":
        return UavAntenna.steerable(60.0)
    raise ValueError(kind)


def make_scenario(kind="omni", density_km2=1.0, uav_height=120.0, theta_db=10.0, m=1,
                  tilt_rad=None, m_nlos=None):
    lam = density_km2 * 1e-6
    if tilt_rad is None:
        tilt_rad = gs_uptilt(uav_height - GS_HEIGHT, lam)
    net = NetworkParams(
        density_per_m2=lam, station_height_m=GS_HEIGHT, tx_power_w=TX_POWER,
        near_field_loss=NEAR_FIELD, noise_w=NOISE, alpha_los=2.1, alpha_nlos=4.0,
        m_los=m, m_nlos=m if m_nlos is None else m_nlos,
        sector=SectorAntennaParams(MU_H, tilt_rad),
    )
    return Scenario(ENV, net, make_antenna(kind), uav_height, 10 ** (theta_db / 10))


def terrestrial(density_km2=5.0, tilt_deg=-6.0, association="nearest"):
    net = NetworkParams(
        density_per_m2=density_km2 * 1e-6, station_height_m=30.0, tx_power_w=TX_POWER,
        near_field_loss=NEAR_FIELD, noise_w=NOISE, alpha_los=2.1, alpha_nlos=4.0,
        m_los=1, m_nlos=1, sector=SectorAntennaParams(MU_H, math.radians(tilt_deg)),
    )
    return DeploymentKind.terrestrial_bs(net, association)


@pytest.fixture
def scenario_factory():
    return make_scenario


@pytest.fixture
def report(capsys):
    """Print one line straight to the terminal, bypassing output capture."""

    def _report(line):
        with capsys.disabled():
            print(f"\n{line}")

    return _report
