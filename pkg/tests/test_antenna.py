import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from aerocov.antenna import (
    AntennaKind,
    SectorAntennaParams,
    UavAntenna,
    fixed_lobe_radius,
    illuminated_region,
    sector_gain,
    uav_gain,
)


def test_uav_gain_values():
    assert uav_gain(UavAntenna.omni()) == 1.0
    assert_allclose(uav_gain(UavAntenna.steerable(60.0)), 144 / math.pi, rtol=1e-12)
    assert_allclose(uav_gain(UavAntenna(AntennaKind.FIXED, math.pi)), 16 / math.pi, rtol=1e-12)


def test_omni_region():
    reg = illuminated_region(UavAntenna.omni(), 90.0, 200.0)
    assert (reg.inner_radius_m, reg.outer_radius_m, reg.arc_angle_rad) == (200.0, math.inf, 2 * math.pi)


def test_fixed_region_value():
    reg = illuminated_region(UavAntenna.fixed(165.0), 90.0, 100.0)
    assert_allclose(reg.outer_radius_m, 683.6, atol=0.05)
    assert reg.arc_angle_rad == 2 * math.pi


def test_fixed_region_empty_beyond_lobe():
    reg = illuminated_region(UavAntenna.fixed(165.0), 90.0, 800.0)
    assert reg.is_empty
    assert illuminated_region(UavAntenna.fixed(165.0), 0.0, 10.0).is_empty


def test_steerable_branch_one():
    # phi_1 = 45 deg lies between w/2 = 30 deg and pi/2 - w/2 = 60 deg
    reg = illuminated_region(UavAntenna.steerable(60.0), 90.0, 90.0)
    assert_allclose(reg.outer_radius_m, 90.0 / math.tan(math.radians(15.0)), rtol=1e-12)
    assert_allclose(reg.outer_radius_m, 335.9, atol=0.05)
    assert_allclose(reg.arc_angle_rad, math.pi / 3)


def test_steerable_steep_branch():
    # phi_1 = 70 deg >= pi/2 - w/2: lower beam edge sits at 40 deg elevation
    r1 = 90.0 / math.tan(math.radians(70.0))
    reg = illuminated_region(UavAntenna.steerable(60.0), 90.0, r1)
    assert_allclose(reg.outer_radius_m, 90.0 / math.tan(math.radians(30.0)), rtol=1e-12)


def test_steerable_shallow_branch_infinite():
    r1 = 90.0 / math.tan(math.radians(20.0))
    assert math.isinf(illuminated_region(UavAntenna.steerable(60.0), 90.0, r1).outer_radius_m)


def test_steerable_uses_absolute_height_difference():
    up = illuminated_region(UavAntenna.steerable(60.0), 90.0, 90.0)
    down = illuminated_region(UavAntenna.steerable(60.0), -90.0, 90.0)
    assert up == down


def test_negative_serving_distance_rejected():
    with pytest.raises(ValueError):
        illuminated_region(UavAntenna.omni(), 10.0, -1.0)


def test_region_contains():
    reg = illuminated_region(UavAntenna.steerable(60.0), 90.0, 90.0)
    assert reg.contains(200.0, math.radians(20.0))
    assert not reg.contains(200.0, math.radians(40.0))
    assert not reg.contains(400.0, 0.0)


@settings(max_examples=80, deadline=None)
@given(w1=st.floats(1.0, 179.0), dw=st.floats(0.0, 100.0), dg=st.floats(1.0, 500.0))
def test_fixed_outer_radius_nondecreasing_in_beamwidth(w1, dw, dg):
    w2 = min(w1 + dw, 359.0)
    a = fixed_lobe_radius(UavAntenna.fixed(w1), dg)
    b = fixed_lobe_radius(UavAntenna.fixed(w2), dg)
    assert b >= a


@settings(max_examples=80, deadline=None)
@given(w=st.floats(5.0, 89.0), dg=st.floats(1.0, 500.0))
def test_steerable_continuity_at_steep_boundary(w, dg):
    ant = UavAntenna.steerable(w)
    half = math.radians(w) / 2
    r_edge = dg / math.tan(math.pi / 2 - half)
    expected = dg / math.tan(math.pi / 2 - math.radians(w))
    for r in (r_edge * (1 - 1e-12), r_edge, r_edge * (1 + 1e-12)):
        assert_allclose(illuminated_region(ant, dg, r).outer_radius_m, expected, rtol=1e-9)


@settings(max_examples=80, deadline=None)
@given(w=st.floats(5.0, 89.0), dg=st.floats(1.0, 500.0), r1=st.floats(0.0, 1e4))
def test_steerable_outer_radius_nondecreasing_in_r1(w, dg, r1):
    # moving the server away lowers the beam, so the footprint can only grow
    ant = UavAntenna.steerable(w)
    v1 = illuminated_region(ant, dg, r1).outer_radius_m
    v2 = illuminated_region(ant, dg, r1 * 1.1 + 1.0).outer_radius_m
    assert v2 >= v1


def test_sector_gain_pattern():
    params = SectorAntennaParams(10 ** (-0.5), math.radians(8.0))
    tilt = params.tilt_rad
    assert sector_gain(params, tilt) == params.horizontal_gain
    assert_allclose(sector_gain(params, tilt + math.radians(5.0)),
                    params.horizontal_gain * 10 ** (-0.3), rtol=1e-12)
    floor = params.horizontal_gain * 10 ** (-2.0)
    assert_allclose(sector_gain(params, -math.pi / 2), floor, rtol=1e-12)
    phi = np.linspace(-math.pi / 2, math.pi / 2, 401)
    g = sector_gain(params, phi)
    assert g.shape == phi.shape
    assert np.all(g <= params.horizontal_gain) and np.all(g >= floor * (1 - 1e-12))


def test_sector_kinks_where_floor_starts():
    params = SectorAntennaParams(1.0, math.radians(10.0))
    for phi in params.kink_angles():
        assert_allclose(sector_gain(params, phi), 0.01, rtol=1e-9)


def test_antenna_validation():
    with pytest.raises(ValueError):
        UavAntenna.steerable(0.0)
    with pytest.raises(ValueError):
        UavAntenna.fixed(360.0)
