import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from aerocov.analytic import backhaul_probability
from aerocov.antenna import sector_gain
from aerocov.channel import LosState
from aerocov.environment import LinkGeometry, los_probability
from aerocov.montecarlo import (
    DeploymentKind,
    TrialConfig,
    _evaluate,
    auto_sim_radius,
    block_rng,
    estimate_coverage,
    far_field_interference,
    run_trial,
    sample_deployment,
    simulate_block,
)

from conftest import ENV, make_scenario, terrestrial


def test_ppp_count_mean():
    # 1 / km^2 on a 10 km disc: 314.16 stations on average
    rng = np.random.default_rng(3)
    counts = [len(sample_deployment(1e-6, 10_000.0, rng)) for _ in range(2000)]
    assert_allclose(np.mean(counts), 100 * math.pi, rtol=0.01)
    assert_allclose(np.var(counts), 100 * math.pi, rtol=0.1)


def test_ppp_points_inside_disc_and_uniform():
    pts = sample_deployment(1e-2, 1000.0, np.random.default_rng(4))
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert np.all(r <= 1000.0)
    # uniform in area: half the points inside radius R / sqrt(2)
    assert_allclose(np.mean(r < 1000.0 / math.sqrt(2)), 0.5, atol=0.01)


def test_block_streams_are_distinct_and_reproducible():
    a = block_rng(5, 0).random(4)
    assert_allclose(block_rng(5, 0).random(4), a)
    assert not np.allclose(block_rng(5, 1).random(4), a)
    assert not np.allclose(block_rng(6, 0).random(4), a)


def test_worker_count_does_not_change_result():
    scn = make_scenario("steerable", 1.0, 100.0)
    kind = DeploymentKind.dedicated_gs()
    one = estimate_coverage(scn, kind, TrialConfig(5000, seed=11, workers=1))
    three = estimate_coverage(scn, kind, TrialConfig(5000, seed=11, workers=3))
    assert one.probability == three.probability
    assert one.diagnostics == three.diagnostics


def test_standard_error_formula():
    res = estimate_coverage(make_scenario("omni", 1.0, 100.0), DeploymentKind.dedicated_gs(),
                            TrialConfig(4000, seed=2))
    p = res.probability
    assert_allclose(res.std_error, math.sqrt(p * (1 - p) / 4000), rtol=1e-15)
    assert res.n_trials == 4000 and res.method == "monte-carlo"


@pytest.mark.parametrize("association", ["nearest", "strongest"])
def test_server_choice(association):
    scn = make_scenario("omni", 1.0, 100.0)
    kind = DeploymentKind.dedicated_gs() if association == "nearest" else \
        DeploymentKind("gs", None, association)
    out = simulate_block(scn, kind, 500, 3000.0, np.random.default_rng(9))
    if association == "nearest":
        assert np.all(out["r1"] <= out["nearest_other"])
    else:
        # strongest mean power may pick a farther LOS station over a nearer NLOS one
        assert np.all(out["r1"] > 0)


def test_single_station_threshold_extremes():
    scn = make_scenario("omni", 1.0, 100.0)
    kind = DeploymentKind.dedicated_gs()
    cfg = TrialConfig(1)
    station = [[300.0, 0.0]]
    assert run_trial(scn.replace(threshold=1e-9), kind, cfg, np.random.default_rng(0), station)
    assert not run_trial(scn.replace(threshold=1e12), kind, cfg, np.random.default_rng(0), station)


def test_single_station_rayleigh_coverage():
    # one station, no interference: P(h >= theta N / P_rx) = exp(-theta N / P_rx)
    scn = make_scenario("omni", 1.0, 100.0)
    net = scn.net
    r = 2000.0
    mu = sector_gain(net.sector, math.atan2(scn.delta_gamma, r))
    mean_rx = net.tx_power_w * mu * net.near_field_loss * (r * r + scn.delta_gamma**2) ** (-net.alpha_nlos / 2)
    # threshold placed so that the expected coverage is 0.3
    theta = -math.log(0.3) * mean_rx * scn.eta / net.noise_w
    scn = scn.replace(threshold=theta)
    out = _evaluate(scn, np.full(20000, r), np.zeros(20000), np.ones(20000, dtype=int),
                    np.random.default_rng(12), forced_server_state=LosState.NLOS)
    expected = 0.3
    assert_allclose(out["covered"].mean(), expected, atol=4 * math.sqrt(expected * (1 - expected) / 20000))


def test_steerable_station_outside_azimuth_lobe_adds_nothing():
    # 60 deg beam: a station 40 deg off the serving azimuth is outside the lobe
    scn = make_scenario("steerable", 1.0, 120.0)
    r = np.array([300.0, 300.0, 300.0])
    az = np.radians([0.0, 40.0, 20.0])
    out = _evaluate(scn, r[:2], az[:2], np.array([2]), np.random.default_rng(1))
    assert out["interference"][0] == 0.0
    assert out["n_interferers"][0] == 0
    out = _evaluate(scn, r, az, np.array([3]), np.random.default_rng(1))
    assert out["n_interferers"][0] == 1 and out["interference"][0] > 0


def test_fixed_lobe_counts_only_inside_cone():
    scn = make_scenario("fixed", 1.0, 120.0)
    v = 90.0 * math.tan(math.radians(82.5))
    r = np.array([100.0, 0.9 * v, 1.1 * v])
    out = _evaluate(scn, r, np.zeros(3), np.array([3]), np.random.default_rng(1))
    assert out["n_interferers"][0] == 1
    assert out["nearest_interferer"][0] == 0.9 * v


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_covered_implies_sinr_condition(seed):
    scn = make_scenario("omni", 2.0, 80.0)
    out = simulate_block(scn, DeploymentKind.dedicated_gs(), 200, 3000.0, np.random.default_rng(seed))
    ok = out["signal"] >= scn.threshold * (out["interference"] + scn.net.noise_w)
    assert np.array_equal(out["covered"], ok & (out["signal"] > 0))


@pytest.mark.parametrize("kind, density, uav_height", [
    ("omni", 1.0, 100.0),
    ("steerable", 0.5, 120.0),
])
def test_far_field_removes_truncation_bias(kind, density, uav_height):
    # a 3 km disc is far too small on its own; the far-field model restores
    # agreement with the untruncated analytic value
    scn = make_scenario(kind, density, uav_height)
    exact = backhaul_probability(scn).probability
    gs = DeploymentKind.dedicated_gs()
    fixed = estimate_coverage(scn, gs, TrialConfig(20_000, seed=6, sim_radius_m=3000.0))
    bare = estimate_coverage(scn, gs, TrialConfig(20_000, seed=6, sim_radius_m=3000.0,
                                                  far_field_mean=False))
    assert abs(fixed.probability - exact) <= 3 * fixed.std_error
    assert bare.probability - exact > 4 * bare.std_error


def test_far_field_mean_interference():
    # inner disc plus far field must reproduce the mean interference of a
    # disc large enough that nothing beyond it matters
    scn = make_scenario("omni", 1.0, 100.0)
    kind = DeploymentKind.dedicated_gs()
    far = far_field_interference(scn, 2000.0)
    a = simulate_block(scn, kind, 20000, 2000.0, np.random.default_rng(1), far)["interference"]
    b = simulate_block(scn, kind, 4000, 20000.0, np.random.default_rng(2))["interference"]
    se = math.hypot(a.std() / math.sqrt(a.size), b.std() / math.sqrt(b.size))
    assert far.expected_los > 0
    assert abs(a.mean() - b.mean()) <= 4 * se


def test_far_field_los_count_matches_cell_sum():
    # P_L is constant on each cell between building crossings, so the expected
    # number of LOS stations beyond R is an exact sum of annulus areas
    scn = make_scenario("omni", 1.0, 100.0)
    far = far_field_interference(scn, 2000.0)
    step = 1.0 / math.sqrt(ENV.beta * 1e-6 * ENV.delta)  # metres between crossings
    edges = np.concatenate([[2000.0], np.arange(math.ceil(2000.0 / step), 800) * step])
    mid = 0.5 * (edges[:-1] + edges[1:])
    p = np.array([los_probability(ENV, LinkGeometry(r, 30.0, 100.0)) for r in mid])
    expected = np.sum(p * math.pi * 1e-6 * np.diff(edges**2))
    assert_allclose(far.expected_los, expected, rtol=1e-5)


def test_far_field_nlos_mean_depends_on_serving_distance():
    scn = make_scenario("steerable", 1.0, 120.0)
    far = far_field_interference(scn, 5000.0)
    vals = far.nlos_mean(scn, np.array([50.0, 300.0, 2000.0]))
    # steep beam: footprint ends well inside the disc
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= 0)
    assert_allclose(vals[-1], scn.antenna.beamwidth_rad * far.nlos_total)


def test_far_field_empty_fixed_lobe():
    scn = make_scenario("fixed", 1.0, 30.0)
    far = far_field_interference(scn, 1000.0)
    r1 = np.full(50, 300.0)
    assert np.all(far.sample(scn, r1, np.zeros(50), np.random.default_rng(0)) == 0.0)


def test_auto_radius_floor():
    scn = make_scenario("omni", 1.0, 100.0)
    assert auto_sim_radius(scn) >= max(10 * scn.mean_serving_distance, 5000.0)


def test_terrestrial_network_resolves():
    scn = make_scenario("omni", 1.0, 100.0)
    kind = terrestrial()
    assert kind.resolve(scn).net.station_height_m == 30.0
    assert kind.resolve(scn).net is kind.network
    with pytest.raises(ValueError):
        DeploymentKind("bs")


def test_mc_matches_analytic_omni_low_density():
    scn = make_scenario("omni", 0.25, 60.0)
    a = backhaul_probability(scn)
    m = estimate_coverage(scn, DeploymentKind.dedicated_gs(), TrialConfig(40_000, seed=41))
    assert abs(a.probability - m.probability) <= 3 * m.std_error + a.std_error
