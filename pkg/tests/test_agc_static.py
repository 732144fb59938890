import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vlc_agc import agc_static, frontend
from vlc_agc.agc_static import AgcStaticParams, Region
from vlc_agc.errors import ParameterError
from vlc_agc.units import db, from_db

AGC = AgcStaticParams()


def test_defaults():
    assert db(AGC.max_gain) == pytest.approx(40.0)
    assert db(AGC.max_gain / AGC.min_gain) == pytest.approx(48.0)
    assert AGC.agc_noise_power == pytest.approx(2.71e-15 * 12.5e6)


def test_from_gain_range():
    p = AgcStaticParams.from_gain_range(30.0, 20.0)
    assert db(p.min_gain) == pytest.approx(10.0)


def test_thresholds_by_hand():
    net = 1e-3 - AGC.agc_noise_power
    assert AGC.lower_threshold == pytest.approx(net / 1e4, rel=1e-12)
    assert AGC.upper_threshold == pytest.approx(net / from_db(-8), rel=1e-12)


def test_regions():
    p_l, p_u = agc_static.thresholds(AGC)
    assert agc_static.region(AGC, 0.5 * p_l) is Region.BELOW
    assert agc_static.region(AGC, p_l) is Region.EQUILIBRIUM
    assert agc_static.region(AGC, p_u) is Region.EQUILIBRIUM
    assert agc_static.region(AGC, 2 * p_u) is Region.ABOVE


@settings(max_examples=100)
@given(st.floats(-80.0, 20.0))
def test_gain_piecewise_and_continuous(p_dbm):
    p = 1e-3 * 10 ** (p_dbm / 10)
    g = agc_static.gain(AGC, p)
    assert AGC.min_gain <= g <= AGC.max_gain
    y = agc_static.output_power(AGC, p)
    if agc_static.region(AGC, p) is Region.EQUILIBRIUM:
        assert y == AGC.equilibrium_power
    else:
        assert y == pytest.approx(g * p + AGC.agc_noise_power, rel=1e-12)


def test_gain_continuous_at_thresholds():
    for t, g_edge in ((AGC.lower_threshold, AGC.max_gain), (AGC.upper_threshold, AGC.min_gain)):
        assert agc_static.gain(AGC, t) == pytest.approx(g_edge, rel=1e-12)
        assert agc_static.gain(AGC, t * (1 + 1e-9)) == pytest.approx(g_edge, rel=1e-6)
        assert agc_static.gain(AGC, t * (1 - 1e-9)) == pytest.approx(g_edge, rel=1e-6)


def test_gain_vectorised():
    p = np.logspace(-12, 0, 50)
    g = agc_static.gain(AGC, p)
    assert g.shape == p.shape
    assert np.all(np.diff(g) <= 0)


def test_equilibrium_snr_closed_form_matches_general():
    m = AGC.agc_index
    p_n = 1e-8
    for snr_i in (0.1, 10.0, 1e3, 1e5):
        out = agc_static.output_snr(AGC, snr_i, p_n)
        if out.region is Region.EQUILIBRIUM:
            assert out.output_snr == pytest.approx(float(agc_static.equilibrium_snr(m, snr_i)), rel=1e-9)


@given(st.floats(1.5, 1e6), st.floats(1e-3, 1e9))
def test_equilibrium_snr_bounded(m, snr_i):
    s = float(agc_static.equilibrium_snr(m, snr_i))
    assert s <= snr_i * (1 + 1e-12)
    assert s <= (m - 1) * (1 + 1e-12)


def test_output_snr_flags_distortion_above():
    out = agc_static.output_snr(AGC, 1e3, 1.0)
    assert out.region is Region.ABOVE
    assert out.distortion_flag


def test_agc_index_and_validation():
    assert agc_static.agc_index(1e-3, 1e-7) == pytest.approx(1e4)
    with pytest.raises(ParameterError):
        agc_static.agc_index(1e-7, 1e-3)
    with pytest.raises(ParameterError):
        AgcStaticParams(max_gain=1.0, min_gain=2.0)
    with pytest.raises(ParameterError):
        AgcStaticParams(agc_noise_power=2e-3)


def test_snr_sweep_shape():
    sweep = agc_static.snr_sweep([10.0, 100.0], [1.0, 10.0, 100.0])
    assert sweep["snr_o"].shape == (6,)
    assert sweep["snr_o"][2] == pytest.approx(9 * 100 / 110)


def test_gmax_sweep_orders_by_gmax_at_the_floor():
    tx, det = frontend.TransmitterParams(), frontend.DetectorParams()
    h = np.array([1e-9])
    res = agc_static.gmax_sweep(tx, det, [from_db(25), from_db(40)], 48.0, h)
    lo, hi = res["snr_o"]
    assert hi > lo
    assert set(res) >= {"g_max", "h", "p_x", "snr_i", "snr_o", "snr_o_ref", "region"}


def test_dynamic_range_with_front_end():
    tx, det = frontend.TransmitterParams(), frontend.DetectorParams()
    rep = agc_static.dynamic_range(AGC, tx, det)
    assert rep.equilibrium_range_db == pytest.approx(48.0, abs=1e-9)
    assert rep.optical_range_db == pytest.approx(24.0, abs=1e-9)
    assert rep.validity
    p_l = frontend.signal_power(rep.gain_at_lower, tx, det) + frontend.noise_power(rep.gain_at_lower, tx, det)
    assert p_l == pytest.approx(AGC.lower_threshold, rel=1e-9)


def test_dynamic_range_validity_fails_when_noise_dominates():
    tx, det = frontend.TransmitterParams(), frontend.DetectorParams()
    agc = AgcStaticParams(max_gain=from_db(70), min_gain=from_db(22))
    assert not agc_static.dynamic_range(agc, tx, det).validity


def test_design_margin():
    assert agc_static.gmax_design_margin(2.0, 1.0) == 2.0
    with pytest.raises(ParameterError):
        agc_static.gmax_design_margin(1.0, 0.0)
