import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from aerocov.antenna import SectorAntennaParams
from aerocov.channel import LosState, NetworkParams, received_power, sample_fading, sinr


def unit_network(alpha=2.0):
    return NetworkParams(
        density_per_m2=1e-6, station_height_m=0.0, tx_power_w=1.0, near_field_loss=1.0,
        noise_w=0.0, alpha_los=alpha, alpha_nlos=alpha, m_los=1, m_nlos=1,
        sector=SectorAntennaParams(1.0, 0.0),
    )


def paper_network():
    return NetworkParams(
        density_per_m2=1e-6, station_height_m=30.0, tx_power_w=40.0,
        near_field_loss=10 ** (-3.84), noise_w=8e-13, alpha_los=2.1, alpha_nlos=4.0,
        m_los=1, m_nlos=1, sector=SectorAntennaParams(10 ** (-0.5), 0.0),
    )


def test_received_power_unit_triangle():
    p = received_power(unit_network(), 1.0, 1.0, 3.0, 4.0, LosState.LOS, 1.0)
    assert_allclose(p, 1 / 25, rtol=1e-15)


def test_received_power_paper_boresight():
    net = paper_network()
    p = received_power(net, 1.0, 10 ** (-0.5), 500.0, 90.0, LosState.LOS, 1.0)
    # 40 W * 10^-3.84 * 10^-0.5 * 258100^-1.05
    expected = 40.0 * 10 ** (-3.84) * 10 ** (-0.5) * 258100.0 ** (-1.05)
    assert_allclose(p, expected, rtol=1e-13)
    assert_allclose(p, 3.799e-9, rtol=1e-3)


def test_received_power_alpha4_distance_doubling():
    net = unit_network(alpha=4.0)
    near = received_power(net, 1.0, 1.0, 30.0, 40.0, LosState.NLOS, 1.0)
    far = received_power(net, 1.0, 1.0, 60.0, 80.0, LosState.NLOS, 1.0)
    assert_allclose(near / far, 16.0, rtol=1e-13)


def test_received_power_rejects_zero_distance():
    with pytest.raises(ValueError):
        received_power(unit_network(), 1.0, 1.0, 0.0, 0.0, LosState.LOS, 1.0)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(1.0, 1e4), dr=st.floats(1e-3, 1e4), dg=st.floats(-300.0, 300.0))
def test_received_power_decreasing_in_distance(r, dr, dg):
    net = paper_network()
    a = received_power(net, 1.0, 0.3, r, dg, LosState.NLOS, 1.0)
    b = received_power(net, 1.0, 0.3, r + dr, dg, LosState.NLOS, 1.0)
    assert b < a


def test_fading_moments():
    rng = np.random.default_rng(5)
    h1 = sample_fading(1, rng, 1_000_000)
    assert_allclose(h1.mean(), 1.0, atol=0.01)
    # exponential median is ln 2
    assert_allclose(np.mean(h1 > math.log(2)), 0.5, atol=0.003)
    h3 = sample_fading(3, rng, 1_000_000)
    assert_allclose(h3.mean(), 1.0, atol=0.01)
    assert_allclose(h3.var(), 1 / 3, atol=0.01)


def test_sinr_values():
    assert sinr(1.0, 0.0, 0.5) == 2.0
    assert sinr(0.0, 3.0, 1e-3) == 0.0
    with pytest.raises(ValueError):
        sinr(1.0, 0.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(s=st.floats(0.0, 1e3), i=st.floats(0.0, 1e3), n=st.floats(1e-6, 1e3),
       k=st.floats(1e-3, 1e3))
def test_sinr_scale_invariant(s, i, n, k):
    assert_allclose(sinr(k * s, k * i, k * n), sinr(s, i, n), rtol=1e-12, atol=1e-300)


def test_network_validation():
    with pytest.raises(ValueError):
        NetworkParams(1e-6, 30.0, 40.0, 1e-4, 8e-13, 2.1, 4.0, 0, 1, SectorAntennaParams(1.0, 0.0))
    with pytest.raises(ValueError):
        NetworkParams(-1.0, 30.0, 40.0, 1e-4, 8e-13, 2.1, 4.0, 1, 1, SectorAntennaParams(1.0, 0.0))


def test_mean_serving_distance():
    assert_allclose(paper_network().mean_serving_distance_m, 500.0)
