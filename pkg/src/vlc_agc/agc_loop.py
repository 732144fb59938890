"""
Time-domain feedback AGC.

    y      = sqrt(g(v_c)) x + n_a                 (amplitude; n_a has power p_a)
    g(v_c) = clip(g0 exp(slope v_c), g_min, g_max)
    P      <- single-pole average of y^2           (true-power detector)
    v_c    <- v_c + dt k2 (k1 v_ref - d(P))        (integrating loop filter)

Samples are power-normalised amplitudes (sqrt(W)): the power of a stream is
the mean of its squares. The detector law d(P) is either dB-linear,
``gain * 10 log10(P / intercept)``, or linear, ``gain * P``. With the
exponential gain law and the dB-linear detector the loop is exactly first
order in dB with

    tau = ln(10) / (10 * slope * k2 * detector_gain)

independent of the input level. The linear law has the same small-signal
time constant 1/(slope k2 k1 v_ref) but becomes asymmetric for larger steps.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import optimize

from .agc_static import AgcStaticParams
from .errors import FitError, ParameterError, SettleTimeout

LOG_LAW = "log"
LINEAR_LAW = "linear"

_TINY_POWER = 1e-30


@dataclass(frozen=True)
class LoopParams:
    ref_scale: float
    integrator_gain: float
    reference_voltage: float
    vga_base_gain: float
    vga_exponent_slope: float
    gain_limits: tuple
    detector_gain: float
    detector_time_constant: float
    sample_interval: float
    noise_power: float = 0.0
    detector_law: str = LOG_LAW
    detector_intercept: float = 1e-9

    def __post_init__(self):
        for name in ("ref_scale", "integrator_gain", "reference_voltage", "vga_base_gain",
                     "vga_exponent_slope", "detector_gain", "detector_time_constant",
                     "sample_interval", "detector_intercept"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        g_min, g_max = self.gain_limits
        if not 0 < g_min <= g_max:
            raise ParameterError("gain_limits must satisfy 0 < g_min <= g_max")
        if self.noise_power < 0:
            raise ParameterError("noise_power must be >= 0")
        if self.detector_law not in (LOG_LAW, LINEAR_LAW):
            raise ParameterError(f"unknown detector law {self.detector_law!r}")
        if self.detector_time_constant < 20 * self.sample_interval:
            raise ParameterError("detector time constant must span at least 20 samples")

    @property
    def control_limits(self):
        """Control voltages at which the VGA reaches g_min and g_max."""
        g_min, g_max = self.gain_limits
        return (math.log(g_min / self.vga_base_gain) / self.vga_exponent_slope,
                math.log(g_max / self.vga_base_gain) / self.vga_exponent_slope)


@dataclass(frozen=True)
class LoopState:
    control_voltage: float = 0.0
    detector_average: float = 0.0
    time: float = 0.0
    # +1 pinned at g_max, -1 pinned at g_min, 0 inside the range
    saturated: int = 0


@dataclass
class LoopRun:
    state: LoopState
    output: np.ndarray
    gain: np.ndarray
    detector_average: np.ndarray


@dataclass
class StepResponse:
    time: np.ndarray
    output_power_db: np.ndarray
    measured_tau: float
    t95: float
    step_db: float
    final_db: float


def target_power(params: LoopParams) -> float:
    """Detector input power at which k1 v_ref = d(P), i.e. the equilibrium output power."""
    v = params.ref_scale * params.reference_voltage
    if params.detector_law == LOG_LAW:
        return params.detector_intercept * 10.0 ** (v / (10.0 * params.detector_gain))
    return v / params.detector_gain


def time_constant(params: LoopParams) -> float:
    """Small-signal time constant of the loop in the dB domain."""
    if params.detector_law == LOG_LAW:
        per_neper = params.detector_gain * 10.0 / math.log(10.0)
    else:
        per_neper = params.ref_scale * params.reference_voltage
    return 1.0 / (params.vga_exponent_slope * params.integrator_gain * per_neper)


def design_loop(agc: AgcStaticParams, *, rise_time: float = 1e-3,
                sample_interval: float = 2e-7, detector_samples: int = 100,
                detector_law: str = LOG_LAW, slope_db_per_volt: float = 50.0,
                detector_gain: Optional[float] = None, detector_intercept: float = 1e-9,
                ref_scale: float = 1.0) -> LoopParams:
    """
    Loop constants realising the static model `agc` with a given 10-90 % rise time.

    v_ref is chosen so the equilibrium output is p_e, and k2 so that the
    first-order time constant is rise_time / ln 9.
    """
    slope = slope_db_per_volt * math.log(10.0) / 10.0
    if detector_gain is None:
        detector_gain = 0.05 if detector_law == LOG_LAW else 1.0 / agc.equilibrium_power
    if detector_law == LOG_LAW:
        v_ref = detector_gain * 10.0 * math.log10(agc.equilibrium_power / detector_intercept) / ref_scale
        per_neper = detector_gain * 10.0 / math.log(10.0)
    else:
        v_ref = detector_gain * agc.equilibrium_power / ref_scale
        per_neper = ref_scale * v_ref
    if v_ref <= 0:
        raise ParameterError("equilibrium power must exceed the detector intercept")
    tau = rise_time / math.log(9.0)
    k2 = 1.0 / (tau * slope * per_neper)
    g0 = math.sqrt(agc.min_gain * agc.max_gain)
    return LoopParams(
        ref_scale=ref_scale, integrator_gain=k2, reference_voltage=v_ref,
        vga_base_gain=g0, vga_exponent_slope=slope,
        gain_limits=(agc.min_gain, agc.max_gain), detector_gain=detector_gain,
        detector_time_constant=detector_samples * sample_interval,
        sample_interval=sample_interval, noise_power=agc.agc_noise_power,
        detector_law=detector_law, detector_intercept=detector_intercept)


def vga_gain(params: LoopParams, v_c: float) -> float:
    g_min, g_max = params.gain_limits
    exponent = params.vga_exponent_slope * v_c
    if exponent > 700.0:
        return g_max
    return min(max(params.vga_base_gain * math.exp(exponent), g_min), g_max)


def detector_voltage(params: LoopParams, average_power: float) -> float:
    if params.detector_law == LOG_LAW:
        p = max(average_power, _TINY_POWER)
        return params.detector_gain * 10.0 * math.log10(p / params.detector_intercept)
    return params.detector_gain * average_power


def _smoothing(params: LoopParams, dt: float) -> float:
    return -math.expm1(-dt / params.detector_time_constant)


def detect(params: LoopParams, state: LoopState, y_sample: float):
    """Advance the power detector by one sample; returns (state', detector voltage)."""
    a = _smoothing(params, params.sample_interval)
    avg = state.detector_average + a * (y_sample * y_sample - state.detector_average)
    return replace(state, detector_average=avg), detector_voltage(params, avg)


def _integrate(params: LoopParams, v_c: float, d: float, dt: float):
    v_lo, v_hi = params.control_limits
    v_c += dt * params.integrator_gain * (params.ref_scale * params.reference_voltage - d)
    # anti-windup: the integrator stops at the voltages that pin the gain
    if v_c >= v_hi:
        return v_hi, 1
    if v_c <= v_lo:
        return v_lo, -1
    return v_c, 0


def step_loop(params: LoopParams, state: LoopState, x_sample: float, noise: float = 0.0):
    """One tick of the loop. `noise` is the amplifier noise sample added to the output."""
    g = vga_gain(params, state.control_voltage)
    y = math.sqrt(g) * x_sample + noise
    state, d = detect(params, state, y)
    v_c, sat = _integrate(params, state.control_voltage, d, params.sample_interval)
    return replace(state, control_voltage=v_c, time=state.time + params.sample_interval,
                   saturated=sat), y


def run_loop(params: LoopParams, x, state: Optional[LoopState] = None, *,
             seed=None, envelope: bool = False, dt: Optional[float] = None) -> LoopRun:
    """
    Drive the loop with a whole input sequence.

    Sample mode: `x` holds amplitudes and amplifier noise is drawn from `seed`.
    Envelope mode: `x` holds input powers; the detector sees the expected output
    power g x + p_a and the output is that power. Envelope mode may use a
    coarser `dt` as long as it stays below a twentieth of the loop time constant.
    """
    state = state or LoopState()
    x = np.asarray(x, dtype=float)
    if dt is None:
        dt = params.sample_interval
    elif not envelope and dt != params.sample_interval:
        raise ParameterError("sample mode runs at the configured sample interval")
    if envelope and dt > time_constant(params) / 20:
        raise ParameterError("envelope step must be below tau/20")

    n = x.size
    a = _smoothing(params, dt)
    g0, slope = params.vga_base_gain, params.vga_exponent_slope
    g_min, g_max = params.gain_limits
    v_lo, v_hi = params.control_limits
    k = dt * params.integrator_gain
    target = params.ref_scale * params.reference_voltage
    log_law = params.detector_law == LOG_LAW
    dg, icpt = params.detector_gain, params.detector_intercept
    p_a = params.noise_power

    if envelope or p_a == 0.0:
        noise = np.zeros(n)
    else:
        noise = np.random.default_rng(seed).normal(0.0, math.sqrt(p_a), n)

    out = np.empty(n)
    gains = np.empty(n)
    avgs = np.empty(n)
    v_c, avg, sat = state.control_voltage, state.detector_average, state.saturated
    exp, sqrt, log10 = math.exp, math.sqrt, math.log10
    xs, ns = x.tolist(), noise.tolist()
    for i in range(n):
        g = g0 * exp(slope * v_c)
        if g > g_max:
            g = g_max
        elif g < g_min:
            g = g_min
        if envelope:
            y = g * xs[i] + p_a
            avg += a * (y - avg)
        else:
            y = sqrt(g) * xs[i] + ns[i]
            avg += a * (y * y - avg)
        if log_law:
            d = dg * 10.0 * log10((avg if avg > _TINY_POWER else _TINY_POWER) / icpt)
        else:
            d = dg * avg
        v_c += k * (target - d)
        if v_c >= v_hi:
            v_c, sat = v_hi, 1
        elif v_c <= v_lo:
            v_c, sat = v_lo, -1
        else:
            sat = 0
        out[i] = y
        gains[i] = g
        avgs[i] = avg
    new_state = LoopState(v_c, avg, state.time + n * dt, sat)
    return LoopRun(new_state, out, gains, avgs)


def _carrier(power: float, n: int, rng) -> np.ndarray:
    # bipolar NRZ at one sample per bit: constant instantaneous power
    return math.sqrt(power) * (2.0 * rng.integers(0, 2, n) - 1.0)


def settle(params: LoopParams, constant_input_power: float, max_time: float = 0.05, *,
           state: Optional[LoopState] = None, tolerance: Optional[float] = None,
           seed=0) -> LoopState:
    """
    Run the loop on a constant-power input until it reaches equilibrium.

    Settled means the detector voltage, averaged over one loop time constant,
    is within `tolerance` of k1 v_ref (default: the voltage of 0.01 dB) in two
    consecutive blocks, or the gain is pinned at a limit and the detector
    average has stopped moving.
    """
    tau = time_constant(params)
    if tolerance is None:
        p = target_power(params)
        tolerance = abs(detector_voltage(params, p * 10 ** 0.001) - detector_voltage(params, p))
    rng = np.random.default_rng(seed)
    block = max(int(round(tau / params.sample_interval)), 1)
    state = state or LoopState()
    target = params.ref_scale * params.reference_voltage
    prev_mean = None
    residual = prev_residual = float("inf")
    while state.time < max_time:
        run = run_loop(params, _carrier(constant_input_power, block, rng), state,
                       seed=rng.integers(2 ** 63))
        state = run.state
        mean_avg = float(np.mean(run.detector_average))
        residual = abs(target - detector_voltage(params, mean_avg))
        # two blocks in a row, so a transient passing through the band does not count
        if residual < tolerance and prev_residual < tolerance:
            return state
        prev_residual = residual
        if state.saturated and prev_mean is not None and abs(mean_avg - prev_mean) <= 1e-4 * prev_mean:
            return state
        prev_mean = mean_avg
    raise SettleTimeout(f"loop not settled after {max_time:g} s (residual {residual:.3g} V)",
                        residual)


def settled_output_power(params: LoopParams, state: LoopState, input_power: float) -> float:
    """Expected output power g(v_c) p_x + p_a for a settled state."""
    return vga_gain(params, state.control_voltage) * input_power + params.noise_power


def fit_first_order(t, y):
    """Least-squares fit y = c + A exp(-t/tau); returns (c, A, tau)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    c0 = float(np.mean(y[-max(len(y) // 20, 1):]))
    a0 = float(y[0] - c0)
    # initial tau from the 1/e crossing
    crossing = np.nonzero(np.abs(y - c0) <= abs(a0) / math.e)[0]
    tau0 = float(t[crossing[0]]) if crossing.size and t[crossing[0]] > 0 else float(t[-1] / 5)
    try:
        (c, amp, tau), _ = optimize.curve_fit(
            lambda tt, c, amp, tau: c + amp * np.exp(-tt / tau), t, y, p0=(c0, a0, tau0),
            maxfev=10000)
    except RuntimeError as exc:
        raise FitError(str(exc)) from exc
    if not tau > 0:
        raise FitError("fitted time constant is not positive")
    return float(c), float(amp), float(tau)


def measure_step_response(params: LoopParams, power_step_db: float, duration: Optional[float] = None,
                          *, base_power: Optional[float] = None, seed=0) -> StepResponse:
    """
    Settle the loop, step the input power by `power_step_db` and record the
    output power (in dBm, from the instantaneous gain) for `duration` seconds.
    The dB trajectory is fitted with a first-order exponential; t95 is the time
    after which the output stays within 5 % of its initial deviation.
    """
    tau_lin = time_constant(params)
    if duration is None:
        duration = 10 * tau_lin
    if base_power is None:
        g_min, g_max = params.gain_limits
        base_power = target_power(params) / math.sqrt(g_min * g_max)
    rng = np.random.default_rng(seed)
    state = settle(params, base_power, max_time=200 * tau_lin, seed=rng.integers(2 ** 63))
    stepped = base_power * 10 ** (power_step_db / 10)
    n = int(round(duration / params.sample_interval))
    run = run_loop(params, _carrier(stepped, n, rng), state, seed=rng.integers(2 ** 63))
    p_y = run.gain * stepped + params.noise_power
    y_db = 10 * np.log10(p_y / 1e-3)
    t = np.arange(n) * params.sample_interval

    final = float(np.mean(y_db[-max(n // 20, 1):]))
    dev = y_db - final
    dev0 = dev[0]
    if dev0 == 0:
        raise FitError("step produced no output deviation")
    # overshoot beyond 10 % of the step means the loop is not first order
    if np.min(dev * np.sign(dev0)) < -0.1 * abs(dev0):
        raise FitError("output trajectory overshoots; not a first-order response")
    outside = np.nonzero(np.abs(dev) > 0.05 * abs(dev0))[0]
    t95 = float(t[outside[-1] + 1]) if outside.size and outside[-1] + 1 < n else float("nan")
    _, _, tau = fit_first_order(t, y_db)
    return StepResponse(t, y_db, tau, t95, power_step_db, final)
