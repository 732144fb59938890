"""
Receiver front-end: noisy LED transmitter, APD detection and the electrical
power budget seen at the AGC input.

Transmitted optical power  b = alpha (s + n_t + v_b),  n_t ~ N(0, lam D[s])
Detector current           x = beta (h b + b0) + n_i + n_d

AC powers into the load r_l (DC is blocked):

    p_s = (h alpha beta)^2 D[s] r_l
    p_n = lam p_s + 2 q M F_A df sqrt(p_s r_l / D[s]) (E[s] + v_b) + sigma_i^2 r_l
    p_x = p_s + p_n
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError

ELECTRON_CHARGE = 1.6e-19

# Measured lumped densities (W/Hz) from the reference parameter table.
INDEPENDENT_NOISE_DENSITY = 6.654e-18
AGC_NOISE_DENSITY = 2.71e-15


@dataclass(frozen=True)
class TransmitterParams:
    """LED drive. `noise_signal_ratio` is sigma_t^2 / D[s], linear."""

    signal_variance: float = 0.08
    signal_mean: float = 0.0
    bias_voltage: float = 8.0
    conversion_coeff: float = 0.125
    noise_signal_ratio: float = 1e-3
    threshold_voltage: float = 6.0

    def __post_init__(self):
        if self.signal_variance <= 0:
            raise ParameterError("signal_variance must be positive")
        if self.noise_signal_ratio < 0:
            raise ParameterError("noise_signal_ratio must be >= 0")
        if self.conversion_coeff <= 0:
            raise ParameterError("conversion_coeff must be positive")
        low = self.bias_voltage + self.signal_mean - np.sqrt(self.signal_variance)
        if low < self.threshold_voltage:
            raise ParameterError(
                f"drive swings down to {low:.3g} V, below the LED threshold "
                f"{self.threshold_voltage:.3g} V")

    @property
    def amplitude(self) -> float:
        """Bipolar OOK level a with D[s] = a^2."""
        return float(np.sqrt(self.signal_variance))


@dataclass(frozen=True)
class DetectorParams:
    responsivity: float = 460.0
    electron_charge: float = ELECTRON_CHARGE
    multiplication: float = 30.0
    excess_noise_factor: float = 4.77
    bandwidth: float = 12.5e6
    ambient_optical_power: float = 0.0
    circuit_noise_variance: float = INDEPENDENT_NOISE_DENSITY * 12.5e6 / 50.0
    load_resistance: float = 50.0
    # Lumped sigma_i^2 * r_l per Hz; when set it replaces the computed value.
    independent_noise_density: Optional[float] = INDEPENDENT_NOISE_DENSITY

    def __post_init__(self):
        for name in ("responsivity", "electron_charge", "multiplication",
                     "excess_noise_factor", "bandwidth", "circuit_noise_variance",
                     "load_resistance"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.ambient_optical_power < 0:
            raise ParameterError("ambient_optical_power must be >= 0")
        if self.independent_noise_density is not None and self.independent_noise_density <= 0:
            raise ParameterError("independent_noise_density must be positive")

    @property
    def shot_coefficient(self) -> float:
        """2 q M F_A df, the shot-noise variance per ampere of mean current."""
        return (2 * self.electron_charge * self.multiplication
                * self.excess_noise_factor * self.bandwidth)


@dataclass(frozen=True)
class FrontEndPowers:
    signal_power: float
    noise_power: float
    total_power: float
    input_snr: float


@dataclass
class RxSampleStream:
    samples: np.ndarray
    seed: Optional[int]
    optical_power: Optional[np.ndarray] = None
    dependent_noise: Optional[np.ndarray] = None


def independent_noise_variance(det: DetectorParams) -> float:
    """sigma_i^2 = sigma_c^2 + 2 q M F_A df beta b0, or the measured lumped value."""
    if det.independent_noise_density is not None:
        return det.independent_noise_density * det.bandwidth / det.load_resistance
    return det.circuit_noise_variance + det.shot_coefficient * det.responsivity * det.ambient_optical_power


def noise_floor(det: DetectorParams) -> float:
    """sigma_i^2 r_l, the front-end noise power with no light on the detector."""
    return independent_noise_variance(det) * det.load_resistance


def signal_power(h, tx: TransmitterParams, det: DetectorParams):
    h = np.asarray(h, dtype=float)
    p = (h * tx.conversion_coeff * det.responsivity) ** 2 * tx.signal_variance * det.load_resistance
    return float(p) if p.ndim == 0 else p


def noise_power(h, tx: TransmitterParams, det: DetectorParams):
    ps = np.asarray(signal_power(h, tx, det))
    transmitter = tx.noise_signal_ratio * ps
    shot = (det.shot_coefficient * np.sqrt(ps * det.load_resistance / tx.signal_variance)
            * (tx.signal_mean + tx.bias_voltage))
    p = transmitter + shot + noise_floor(det)
    return float(p) if p.ndim == 0 else p


def input_snr(h, tx: TransmitterParams, det: DetectorParams):
    return np.divide(signal_power(h, tx, det), noise_power(h, tx, det))


def front_end_powers(h: float, tx: TransmitterParams, det: DetectorParams) -> FrontEndPowers:
    ps = signal_power(h, tx, det)
    pn = noise_power(h, tx, det)
    return FrontEndPowers(ps, pn, ps + pn, ps / pn)


def gain_for_total_power(p_x: float, tx: TransmitterParams, det: DetectorParams) -> float:
    """Channel gain h at which the front-end AC power equals `p_x`.

    p_x(h) = (1 + lam) c h^2 + k h + floor is quadratic in h; returns the
    nonnegative root, or raises when p_x is below the dark-noise floor.
    """
    c = (tx.conversion_coeff * det.responsivity) ** 2 * tx.signal_variance * det.load_resistance
    a2 = (1 + tx.noise_signal_ratio) * c
    a1 = (det.shot_coefficient * tx.conversion_coeff * det.responsivity
          * det.load_resistance * (tx.signal_mean + tx.bias_voltage))
    a0 = noise_floor(det) - p_x
    if a0 > 0:
        raise ParameterError("requested power lies below the front-end noise floor")
    return float((-a1 + np.sqrt(a1 * a1 - 4 * a2 * a0)) / (2 * a2))


def ac_power(samples, load_resistance: float) -> float:
    """Power of the mean-removed current stream into the load."""
    x = np.asarray(samples, dtype=float)
    return float(np.var(x) * load_resistance)


def _rx_batch(tx, det, h, s, seed_seq, keep):
    rng = np.random.default_rng(seed_seq)
    sigma_t = np.sqrt(tx.noise_signal_ratio * tx.signal_variance)
    n_t = rng.normal(0.0, sigma_t, s.size)
    b = tx.conversion_coeff * (s + n_t + tx.bias_voltage)
    n_i = rng.normal(0.0, np.sqrt(independent_noise_variance(det)), s.size)
    # instantaneous signal-induced shot variance; averages to the mean-power form
    var_d = det.shot_coefficient * h * tx.conversion_coeff * det.responsivity * (s + tx.bias_voltage)
    n_d = rng.normal(0.0, 1.0, s.size) * np.sqrt(var_d)
    x = det.responsivity * (h * b + det.ambient_optical_power) + n_i + n_d
    return x, (b if keep else None), (n_d if keep else None)


def simulate_rx_stream(tx: TransmitterParams, det: DetectorParams, h: float, tx_samples,
                       seed: Optional[int] = None, *, batch_size: int = 1 << 18,
                       workers: int = 1, keep_components: bool = False) -> RxSampleStream:
    """
    Draw detector-current samples for a transmitted drive sequence.

    The sequence is cut into fixed batches, each seeded from its own child of
    ``SeedSequence(seed)`` (or of `seed` itself when it already is a
    SeedSequence), so the output depends only on `seed` and
    `batch_size`, never on `workers`.
    """
    s = np.asarray(tx_samples, dtype=float)
    if np.any(s + tx.bias_voltage < 0):
        raise ParameterError("drive samples make the optical power negative")
    if h < 0:
        raise ParameterError("channel gain must be >= 0")

    n_batches = max(1, -(-s.size // batch_size))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_batches)
    chunks = [s[i * batch_size:(i + 1) * batch_size] for i in range(n_batches)]

    def work(i):
        return _rx_batch(tx, det, h, chunks[i], children[i], keep_components)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, range(n_batches)))
    else:
        parts = [work(i) for i in range(n_batches)]

    x = np.concatenate([p[0] for p in parts])
    if keep_components:
        return RxSampleStream(x, seed, np.concatenate([p[1] for p in parts]),
                              np.concatenate([p[2] for p in parts]))
    return RxSampleStream(x, seed)
