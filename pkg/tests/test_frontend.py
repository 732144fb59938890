import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vlc_agc import frontend
from vlc_agc.errors import ParameterError
from vlc_agc.frontend import DetectorParams, TransmitterParams

TX = TransmitterParams()
DET = DetectorParams()


def test_noise_floor_uses_lumped_density():
    assert frontend.noise_floor(DET) == pytest.approx(6.654e-18 * 12.5e6, rel=1e-12)


def test_noise_floor_without_override_uses_components():
    det = DetectorParams(independent_noise_density=None, circuit_noise_variance=1e-12,
                         ambient_optical_power=1e-6)
    shot = 2 * 1.6e-19 * 30 * 4.77 * 12.5e6 * 460 * 1e-6
    assert frontend.independent_noise_variance(det) == pytest.approx(1e-12 + shot, rel=1e-12)


def test_shot_coefficient():
    assert DET.shot_coefficient == pytest.approx(2 * 1.6e-19 * 30 * 4.77 * 12.5e6, rel=1e-12)


def test_power_budget_by_hand():
    h = 1e-5
    mean_current = h * 0.125 * 460
    p_s = mean_current ** 2 * 0.08 * 50
    shot = DET.shot_coefficient * mean_current * 8.0 * 50
    p_n = 1e-3 * p_s + shot + 6.654e-18 * 12.5e6
    pw = frontend.front_end_powers(h, TX, DET)
    assert pw.signal_power == pytest.approx(p_s, rel=1e-12)
    assert pw.noise_power == pytest.approx(p_n, rel=1e-12)
    assert pw.total_power == pytest.approx(p_s + p_n, rel=1e-12)
    assert pw.input_snr == pytest.approx(p_s / p_n, rel=1e-12)


def test_snr_saturates_at_transmitter_noise():
    # at very high gain the only noise left is lambda * p_s
    assert frontend.input_snr(1.0, TX, DET) == pytest.approx(1 / TX.noise_signal_ratio, rel=1e-3)


def test_zero_gain_leaves_the_floor():
    assert frontend.signal_power(0.0, TX, DET) == 0.0
    assert frontend.noise_power(0.0, TX, DET) == pytest.approx(frontend.noise_floor(DET))


@settings(max_examples=80)
@given(st.floats(1e-9, 1e-2))
def test_gain_for_total_power_inverts(h):
    p_x = frontend.signal_power(h, TX, DET) + frontend.noise_power(h, TX, DET)
    assert frontend.gain_for_total_power(p_x, TX, DET) == pytest.approx(h, rel=1e-7)


def test_gain_for_total_power_below_floor():
    with pytest.raises(ParameterError):
        frontend.gain_for_total_power(0.5 * frontend.noise_floor(DET), TX, DET)


def test_transmitter_threshold_check():
    with pytest.raises(ParameterError, match="threshold"):
        TransmitterParams(bias_voltage=6.1)
    with pytest.raises(ParameterError):
        TransmitterParams(signal_variance=0)


def test_detector_validation():
    with pytest.raises(ParameterError):
        DetectorParams(bandwidth=-1)


def _drive(n, seed=0):
    rng = np.random.default_rng(seed)
    return TX.amplitude * (2.0 * rng.integers(0, 2, n) - 1.0)


def test_stream_ac_power_and_zero_covariance():
    h = 1e-5
    s = _drive(1_000_000, 1)
    rx = frontend.simulate_rx_stream(TX, DET, h, s, seed=2, keep_components=True)
    p_x = frontend.signal_power(h, TX, DET) + frontend.noise_power(h, TX, DET)
    assert frontend.ac_power(rx.samples, DET.load_resistance) == pytest.approx(p_x, rel=0.01)
    b = rx.optical_power
    nd = rx.dependent_noise
    cov = np.mean((b - b.mean()) * (nd - nd.mean()))
    se = np.std(b) * np.std(nd) / math.sqrt(b.size)
    assert abs(cov) < 3 * se


def test_stream_independent_of_worker_count():
    s = _drive(300_000)
    a = frontend.simulate_rx_stream(TX, DET, 1e-5, s, seed=9, batch_size=50_000, workers=1).samples
    b = frontend.simulate_rx_stream(TX, DET, 1e-5, s, seed=9, batch_size=50_000, workers=4).samples
    np.testing.assert_array_equal(a, b)


def test_stream_accepts_seed_sequence():
    s = _drive(1000)
    a = frontend.simulate_rx_stream(TX, DET, 1e-5, s, seed=np.random.SeedSequence(4)).samples
    b = frontend.simulate_rx_stream(TX, DET, 1e-5, s, seed=np.random.SeedSequence(4)).samples
    np.testing.assert_array_equal(a, b)


def test_stream_rejects_negative_light():
    with pytest.raises(ParameterError):
        frontend.simulate_rx_stream(TX, DET, 1e-5, np.array([-10.0]), seed=0)
    with pytest.raises(ParameterError):
        frontend.simulate_rx_stream(TX, DET, -1.0, np.zeros(4), seed=0)
