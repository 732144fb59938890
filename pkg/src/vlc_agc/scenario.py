"""
Mobile link: a transmitter shuttles along a rail in front of a tracking
receiver, the channel gain follows the geometry, and the AGC (fixed gain,
settled model or feedback loop) follows the received power. BER is
measured over windows short enough for the channel to be treated as
constant inside each one.

Geometry: the rail runs parallel to the receiver at `perpendicular_distance`.
The lateral offset is measured from the rail centre, the LED faces the
receiver line, so the emission angle is atan(|lateral| / standoff). The
receiver points at where it believes the transmitter is; with lag tracking
that belief is the position `lag_delay` seconds ago and the pointing error
becomes the incidence angle.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import agc_loop, agc_static, channel, frontend
from .channel import ChannelGeometry
from .errors import ParameterError
from .system import SystemParams
from .units import from_db
from .waveform import BerResult, OokConfig, count_errors, hard_decision_demod, ook_bits

FIXED_GAIN = from_db(4.5)


@dataclass(frozen=True)
class TrajectoryConfig:
    rail_length: float = 2.0
    speed: float = 1.0
    perpendicular_distance: float = 3.0
    tracking_mode: str = "ideal"
    lag_delay: float = 0.05
    # sinusoidal perturbation of the received signal power, +-amplitude_db
    vibration_db: float = 0.0
    vibration_hz: float = 0.0

    def __post_init__(self):
        if self.rail_length <= 0:
            raise ParameterError("rail_length must be positive")
        if self.speed < 0:
            raise ParameterError("speed must be >= 0")
        if self.perpendicular_distance <= 0:
            raise ParameterError("perpendicular_distance must be positive")
        if self.tracking_mode not in ("ideal", "lag"):
            raise ParameterError("tracking_mode must be 'ideal' or 'lag'")
        if self.lag_delay < 0 or self.vibration_db < 0 or self.vibration_hz < 0:
            raise ParameterError("lag_delay and vibration settings must be >= 0")

    @property
    def period(self) -> float:
        return math.inf if self.speed == 0 else 2 * self.rail_length / self.speed


@dataclass
class MobileSimResult:
    time: np.ndarray
    rail_position: np.ndarray
    channel_gain: np.ndarray
    input_power: np.ndarray
    applied_gain: np.ndarray
    output_power: np.ndarray
    region: list
    windowed_ber: list
    # finer (t, p_x, gain, p_y) samples; filled by the loop mode
    trace: dict = field(default_factory=dict)


def position_at(cfg: TrajectoryConfig, t):
    """Triangular back-and-forth motion starting at rail end 0; defined for all t."""
    t = np.asarray(t, dtype=float)
    if cfg.speed == 0:
        pos = np.zeros_like(t)
    else:
        phase = np.mod(t, cfg.period) * cfg.speed
        pos = np.where(phase <= cfg.rail_length, phase, 2 * cfg.rail_length - phase)
    return float(pos) if pos.ndim == 0 else pos


def _angles(cfg, position, believed_position):
    s = cfg.perpendicular_distance
    lateral = np.asarray(position, dtype=float) - cfg.rail_length / 2
    believed = np.asarray(believed_position, dtype=float) - cfg.rail_length / 2
    distance = np.hypot(s, lateral)
    emission = np.arctan(np.abs(lateral) / s)
    incidence = np.abs(np.arctan(lateral / s) - np.arctan(believed / s))
    return distance, emission, incidence


def geometry_at(cfg: TrajectoryConfig, position: float,
                believed_position: Optional[float] = None) -> ChannelGeometry:
    """Link geometry for a rail position; `believed_position` only matters for lag tracking."""
    if not 0 <= position <= cfg.rail_length:
        raise ParameterError("position lies off the rail")
    if cfg.tracking_mode == "ideal" or believed_position is None:
        believed_position = position
    d, phi, psi = _angles(cfg, position, believed_position)
    return ChannelGeometry(float(d), float(phi), float(min(psi, np.pi / 2)))


def channel_gain_at(system: SystemParams, cfg: TrajectoryConfig, t):
    """Channel gain along the trajectory, including tracking lag and vibration."""
    t = np.asarray(t, dtype=float)
    pos = position_at(cfg, t)
    believed = position_at(cfg, t - cfg.lag_delay) if cfg.tracking_mode == "lag" else pos
    d, phi, psi = _angles(cfg, pos, believed)
    h = channel.channel_gain_array(system.channel, d, phi, np.minimum(psi, np.pi / 2))
    if cfg.vibration_db > 0 and cfg.vibration_hz > 0:
        # +-vibration_db on signal power is +-vibration_db/2 on h
        h = h * 10 ** (cfg.vibration_db * np.sin(2 * np.pi * cfg.vibration_hz * t) / 20)
    return h


def _window_ber(system: SystemParams, h: float, g: float, n_bits: int, ook: OokConfig,
                seed_seq) -> BerResult:
    """Simulate the front-end stream at gain h, AC-couple, amplify by g with noise p_a, count errors."""
    rx_seed, amp_seed = seed_seq.spawn(2)
    bits = ook_bits(ook, n_bits)
    drive = system.tx.amplitude * (2.0 * np.repeat(bits, ook.samples_per_bit) - 1.0)
    if h <= 0:
        # nothing reaches the detector: the decision is noise alone
        x = np.random.default_rng(rx_seed).normal(
            0.0, math.sqrt(frontend.independent_noise_variance(system.det)), drive.size)
    else:
        x = frontend.simulate_rx_stream(system.tx, system.det, h, drive, rx_seed).samples
    u = math.sqrt(system.det.load_resistance) * (x - x.mean())
    y = math.sqrt(g) * u
    p_a = system.agc.agc_noise_power
    if p_a > 0:
        y += np.random.default_rng(amp_seed).normal(0.0, math.sqrt(p_a), y.size)
    return BerResult.from_counts(count_errors(bits, hard_decision_demod(y, ook)), n_bits)


def _gains(system, agc_mode, p_x, fixed_gain):
    if agc_mode == "none":
        return np.full(np.shape(p_x), fixed_gain)
    return np.asarray(agc_static.gain(system.agc, p_x))


def _regions(system, agc_mode, p_x):
    if agc_mode == "none":
        return ["fixed"] * len(p_x)
    return [agc_static.region(system.agc, p).value for p in p_x]


def _envelope_loop(system, cfg, loop, duration, dt):
    """Run the loop on the received power envelope from t=0 to `duration`."""
    n = int(math.ceil(duration / dt)) + 1
    t = np.arange(n) * dt
    h = channel_gain_at(system, cfg, t)
    p_x = frontend.signal_power(h, system.tx, system.det) + frontend.noise_power(h, system.tx, system.det)
    tau = agc_loop.time_constant(loop)
    warm = agc_loop.run_loop(loop, np.full(int(40 * tau / dt), p_x[0]), envelope=True, dt=dt)
    run = agc_loop.run_loop(loop, p_x, warm.state, envelope=True, dt=dt)
    return t, p_x, run


def run_mobile_sim(system: SystemParams, agc_mode: str, trajectory: TrajectoryConfig,
                   duration: float, window: float, seed=0, *, bits_per_window: int = 200_000,
                   ook: Optional[OokConfig] = None, fixed_gain: float = FIXED_GAIN,
                   loop: Optional[agc_loop.LoopParams] = None, loop_dt: float = 1e-5,
                   trace_interval: Optional[float] = None) -> MobileSimResult:
    """
    Windowed simulation of the moving link.

    Each window takes the channel at its midpoint. The BER of a window is
    estimated from `bits_per_window` simulated bits (a sample of the
    window's traffic). In loop mode the AGC integrates continuously over the
    received power envelope at `loop_dt` and each window uses the loop gain
    at its midpoint; `trace` then holds the envelope every `trace_interval`.
    Window k draws its noise from ``SeedSequence([seed, k])``.
    """
    if agc_mode not in ("none", "static", "loop"):
        raise ParameterError("agc_mode must be 'none', 'static' or 'loop'")
    ook = ook or OokConfig()
    if window * ook.bit_rate < 1e4:
        raise ParameterError("a window must hold at least 1e4 bits")
    if not 0 < window <= duration:
        raise ParameterError("need 0 < window <= duration")
    if trajectory.vibration_hz >= system.det.bandwidth / 100:
        raise ParameterError("vibration frequency must stay below bandwidth/100")

    n_win = int(math.floor(duration / window + 1e-9))
    t_mid = (np.arange(n_win) + 0.5) * window
    pos = position_at(trajectory, t_mid)
    h = channel_gain_at(system, trajectory, t_mid)
    p_x = frontend.signal_power(h, system.tx, system.det) + frontend.noise_power(h, system.tx, system.det)
    trace = {}

    if agc_mode == "loop":
        loop = loop or agc_loop.design_loop(system.agc)
        t_env, p_env, run = _envelope_loop(system, trajectory, loop, duration, loop_dt)
        idx = np.minimum(np.rint(t_mid / loop_dt).astype(int), t_env.size - 1)
        g = run.gain[idx]
        step = max(int(round((trace_interval or window) / loop_dt)), 1)
        trace = {"time": t_env[::step], "input_power": p_env[::step],
                 "gain": run.gain[::step], "output_power": run.output[::step]}
    else:
        g = _gains(system, agc_mode, p_x, fixed_gain)

    p_y = g * p_x + system.agc.agc_noise_power
    results = [_window_ber(system, float(h[k]), float(g[k]), bits_per_window, ook,
                           np.random.SeedSequence([int(seed), k]))
               for k in range(n_win)]
    return MobileSimResult(t_mid, pos, h, p_x, g, p_y, _regions(system, agc_mode, p_x),
                           results, trace)


def static_benchmark(system: SystemParams, agc_mode: str, positions, n_bits: int, seed=0, *,
                     trajectory: Optional[TrajectoryConfig] = None,
                     ook: Optional[OokConfig] = None, fixed_gain: float = FIXED_GAIN) -> dict:
    """
    Stationary transmitter at each rail position, perfectly tracked.

    Position k draws its noise from ``SeedSequence([seed, k])``, the same
    stream as window k of `run_mobile_sim`. The loop mode uses the settled
    gain, which equals the static model by construction.
    """
    trajectory = trajectory or TrajectoryConfig()
    ook = ook or OokConfig()
    pos = np.asarray(positions, dtype=float)
    if np.any(pos < 0) or np.any(pos > trajectory.rail_length):
        raise ParameterError("positions must lie on the rail")
    d, phi, psi = _angles(trajectory, pos, pos)
    h = channel.channel_gain_array(system.channel, d, phi, psi)
    p_x = frontend.signal_power(h, system.tx, system.det) + frontend.noise_power(h, system.tx, system.det)
    g = _gains(system, agc_mode, p_x, fixed_gain)
    p_y = g * p_x + system.agc.agc_noise_power
    results = [_window_ber(system, float(h[k]), float(g[k]), n_bits, ook,
                           np.random.SeedSequence([int(seed), k]))
               for k in range(pos.size)]
    return {"position": pos, "channel_gain": h, "input_power": p_x, "gain": g,
            "output_power": p_y, "region": _regions(system, agc_mode, p_x), "ber": results}
