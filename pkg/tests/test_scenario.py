import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vlc_agc import agc_loop, agc_static, scenario, system
from vlc_agc.errors import ParameterError
from vlc_agc.scenario import TrajectoryConfig
from vlc_agc.units import db

SP = system.tracking_platform()


def test_period_at_one_metre_per_second():
    assert TrajectoryConfig(rail_length=2.0, speed=1.0).period == pytest.approx(4.0)


def test_position_waveform():
    cfg = TrajectoryConfig()
    assert scenario.position_at(cfg, 0.0) == 0.0
    assert scenario.position_at(cfg, cfg.period / 2) == pytest.approx(cfg.rail_length)
    assert scenario.position_at(cfg, cfg.period) == pytest.approx(0.0)
    still = TrajectoryConfig(speed=0.0)
    assert np.all(scenario.position_at(still, np.linspace(0, 10, 7)) == 0.0)


@given(st.floats(0.05, 3.0), st.floats(0.0, 50.0))
def test_position_is_continuous_with_unit_speed(speed, t):
    cfg = TrajectoryConfig(speed=speed)
    x = scenario.position_at(cfg, t)
    assert 0.0 <= x <= cfg.rail_length
    dt = 1e-6
    dx = abs(scenario.position_at(cfg, t + dt) - x)
    assert dx <= speed * dt * (1 + 1e-6) + 1e-12


def test_geometry_at_centre_and_diagonal():
    cfg = TrajectoryConfig(rail_length=8.0, perpendicular_distance=3.0)
    g = scenario.geometry_at(cfg, 4.0)
    assert (g.distance, g.emission_angle, g.incidence_angle) == pytest.approx((3.0, 0.0, 0.0))
    g = scenario.geometry_at(cfg, 7.0)
    assert g.distance == pytest.approx(3.0 * math.sqrt(2))
    assert g.emission_angle == pytest.approx(math.radians(45))
    assert g.incidence_angle == 0.0


def test_lag_pointing_error_near_centre():
    v, d, s = 0.5, 0.05, 3.0
    cfg = TrajectoryConfig(speed=v, lag_delay=d, perpendicular_distance=s, tracking_mode="lag")
    centre = cfg.rail_length / 2
    g = scenario.geometry_at(cfg, centre, centre - v * d)
    assert g.incidence_angle == pytest.approx(math.atan(v * d / s), rel=1e-3)


def test_geometry_rejects_off_rail():
    with pytest.raises(ParameterError):
        scenario.geometry_at(TrajectoryConfig(), 5.0)


def test_trajectory_validation():
    with pytest.raises(ParameterError):
        TrajectoryConfig(rail_length=0)
    with pytest.raises(ParameterError):
        TrajectoryConfig(speed=-1)
    with pytest.raises(ParameterError):
        TrajectoryConfig(tracking_mode="psychic")


def test_window_must_hold_enough_bits():
    with pytest.raises(ParameterError):
        scenario.run_mobile_sim(SP, "static", TrajectoryConfig(), 1.0, 1e-4)


def test_vibration_frequency_limit():
    cfg = TrajectoryConfig(vibration_db=1.0, vibration_hz=200e3)
    with pytest.raises(ParameterError):
        scenario.run_mobile_sim(SP, "static", cfg, 1.0, 0.5)


def test_static_limit_matches_benchmark():
    cfg = TrajectoryConfig(speed=0.0)
    res = scenario.run_mobile_sim(SP, "static", cfg, 1.0, 0.25, seed=4, bits_per_window=100_000)
    bench = scenario.static_benchmark(SP, "static", [0.0] * 4, 100_000, seed=4, trajectory=cfg)
    for w, b in zip(res.windowed_ber, bench["ber"]):
        assert w == b


def test_benchmark_equilibrium_flatness_and_symmetry():
    cfg = TrajectoryConfig()
    pos = np.array([0.25, 0.5, 1.0, 1.5, 1.75])
    bench = scenario.static_benchmark(SP, "static", pos, 50_000, seed=1, trajectory=cfg)
    assert set(bench["region"]) == {"equilibrium"}
    spread = db(bench["output_power"].max() / bench["output_power"].min())
    assert spread <= 0.05
    np.testing.assert_allclose(bench["input_power"], bench["input_power"][::-1], rtol=1e-12)


def test_benchmark_fixed_gain_tracks_input():
    bench = scenario.static_benchmark(SP, "none", [0.3, 1.0], 20_000, seed=1)
    expected = bench["input_power"] * 10 ** 0.45 + SP.agc.agc_noise_power
    np.testing.assert_allclose(bench["output_power"], expected, rtol=1e-12)


def test_benchmark_rejects_off_rail():
    with pytest.raises(ParameterError):
        scenario.static_benchmark(SP, "static", [-0.1], 10_000)


def test_agc_flattens_output_power_against_fixed_gain():
    # close enough that the reference system stays inside its equilibrium range
    sp = system.reference_system()
    cfg = TrajectoryConfig(rail_length=1.0, perpendicular_distance=0.5)
    kw = dict(bits_per_window=20_000)
    agc = scenario.run_mobile_sim(sp, "static", cfg, 2.0, 0.125, seed=0, **kw)
    fixed = scenario.run_mobile_sim(sp, "none", cfg, 2.0, 0.125, seed=0, **kw)
    assert set(agc.region) == {"equilibrium"}
    assert np.var(db(agc.output_power)) < np.var(db(fixed.output_power))


def test_loop_dynamics_negligible_at_walking_speed():
    cfg = TrajectoryConfig(speed=1.0)
    res = scenario.run_mobile_sim(SP, "loop", cfg, 4.0, 0.25, seed=0, bits_per_window=20_000)
    static_g = agc_static.gain(SP.agc, res.input_power)
    assert np.max(np.abs(db(res.applied_gain / static_g))) <= 0.1
    assert set(res.trace) == {"time", "input_power", "gain", "output_power"}


def test_vibration_tracked_by_the_loop():
    loop = agc_loop.design_loop(SP.agc, rise_time=math.log(9) * 1e-3)   # tau = 1 ms
    cfg = TrajectoryConfig(speed=0.0, vibration_db=1.0, vibration_hz=20.0)
    res = scenario.run_mobile_sim(SP, "loop", cfg, 0.5, 0.05, seed=0, bits_per_window=10_000,
                                  loop=loop, trace_interval=1e-4)
    dev = db(res.trace["output_power"] / SP.agc.equilibrium_power)
    assert np.max(np.abs(dev)) <= 0.2
    # without the loop the same perturbation moves the input by most of +-1 dB
    p_in = db(res.trace["input_power"])
    assert np.ptp(p_in) > 1.5


def test_mobile_is_deterministic():
    cfg = TrajectoryConfig(speed=0.5)
    a = scenario.run_mobile_sim(SP, "static", cfg, 1.0, 0.25, seed=9, bits_per_window=20_000)
    b = scenario.run_mobile_sim(SP, "static", cfg, 1.0, 0.25, seed=9, bits_per_window=20_000)
    assert a.windowed_ber == b.windowed_ber
