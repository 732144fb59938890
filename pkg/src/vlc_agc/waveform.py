"""
Bipolar NRZ OOK, hard-decision demodulation and Monte Carlo BER through the
AGC models.

The drive is s = +-a around the LED bias (zero mean, D[s] = a^2). The
demodulator averages each bit's samples and compares with a threshold; with
white noise per sample the decision SNR is samples_per_bit * SNR, and a tie
decides 0.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from . import agc_loop, agc_static
from .agc_static import AgcStaticParams
from .prbs import prbs

MODES = ("none", "static", "loop")


@dataclass(frozen=True)
class OokConfig:
    bit_rate: float = 25e6
    samples_per_bit: int = 1
    amplitude: float = math.sqrt(0.08)
    prbs_order: int = 31
    seed: int = 1
    # explicit repeating bit pattern; overrides the PRBS when given
    pattern: Optional[tuple] = None

    def __post_init__(self):
        if self.samples_per_bit < 1:
            raise ValueError("samples_per_bit must be >= 1")
        if self.amplitude <= 0 or self.bit_rate <= 0:
            raise ValueError("amplitude and bit_rate must be positive")


@dataclass(frozen=True)
class BerResult:
    bit_errors: int
    bits_total: int
    ber: float
    wilson_ci95: tuple

    @classmethod
    def from_counts(cls, errors: int, total: int) -> "BerResult":
        ci = stats.binomtest(int(errors), int(total)).proportion_ci(0.95, method="wilson")
        return cls(int(errors), int(total), errors / total, (float(ci.low), float(ci.high)))

    def contains(self, p: float) -> bool:
        return self.wilson_ci95[0] <= p <= self.wilson_ci95[1]

    def overlaps(self, other: "BerResult") -> bool:
        return (self.wilson_ci95[0] <= other.wilson_ci95[1]
                and other.wilson_ci95[0] <= self.wilson_ci95[1])


@dataclass(frozen=True)
class BerPoint:
    snr_i: float
    snr_o: float
    result: BerResult
    analytic_ber: float


def ook_bits(cfg: OokConfig, n_bits: int) -> np.ndarray:
    if cfg.pattern is not None:
        pat = np.asarray(cfg.pattern, dtype=np.uint8)
        return np.resize(pat, n_bits)
    return prbs(cfg.prbs_order, n_bits, cfg.seed)


def bits_to_samples(bits, cfg: OokConfig) -> np.ndarray:
    levels = cfg.amplitude * (2.0 * np.asarray(bits, dtype=float) - 1.0)
    return np.repeat(levels, cfg.samples_per_bit)


def generate_ook(cfg: OokConfig, n_bits: int):
    """Bits and the matching bipolar NRZ drive samples."""
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    bits = ook_bits(cfg, n_bits)
    return bits, bits_to_samples(bits, cfg)


def hard_decision_demod(samples, cfg: OokConfig, threshold: float = 0.0) -> np.ndarray:
    """Per-bit mean against `threshold`; exactly-at-threshold decides 0."""
    x = np.asarray(samples, dtype=float)
    if x.size % cfg.samples_per_bit:
        raise ValueError("sample count is not a whole number of bits")
    means = x.reshape(-1, cfg.samples_per_bit).mean(axis=1)
    return (means > threshold).astype(np.uint8)


def analytic_ber_ook(snr):
    """Q(sqrt(snr)) for hard-decision bipolar signalling."""
    s = np.maximum(np.asarray(snr, dtype=float), 0.0)
    out = 0.5 * special.erfc(np.sqrt(s / 2.0))
    return float(out) if out.ndim == 0 else out


def count_errors(sent, received) -> int:
    return int(np.count_nonzero(np.asarray(sent) != np.asarray(received)))


def _batches(n_bits: int, batch_bits: int):
    edges = list(range(0, n_bits, batch_bits)) + [n_bits]
    return list(zip(edges[:-1], edges[1:]))


def _static_batch(bits, cfg, p_s, p_n, g, p_a, seed_seq):
    rng = np.random.default_rng(seed_seq)
    s = np.sqrt(p_s) * (2.0 * np.repeat(bits, cfg.samples_per_bit).astype(float) - 1.0)
    x = s + rng.normal(0.0, np.sqrt(p_n), s.size)
    y = np.sqrt(g) * x
    if p_a > 0:
        y += rng.normal(0.0, np.sqrt(p_a), s.size)
    return count_errors(bits, hard_decision_demod(y, cfg))


def run_ber_experiment(snr_i_points: Sequence[float], n_bits: int, seed=0, *,
                       agc_mode: str = "static", agc: Optional[AgcStaticParams] = None,
                       fixed_gain: float = 1.0, amp_noise_power: Optional[float] = None,
                       input_power: Optional[float] = None, ook: Optional[OokConfig] = None,
                       loop: Optional[agc_loop.LoopParams] = None,
                       batch_bits: int = 1 << 20, workers: int = 1) -> list:
    """
    BER against input SNR through no AGC (fixed gain), the settled AGC or the loop.

    For each linear SNR point an input of total power `input_power` (default:
    the middle of the equilibrium range) is synthesised as signal plus
    Gaussian noise, amplified, given amplifier noise p_a, demodulated and
    compared with the sent bits. `analytic_ber` is Q(sqrt(spb * SNR_o)).

    Batches of `batch_bits` use child seeds of ``SeedSequence(seed)``, so the
    counts do not depend on `workers`. With the same seed, the bits and the
    input noise are identical across modes (common random numbers).
    """
    if agc_mode not in MODES:
        raise ValueError(f"agc_mode must be one of {MODES}")
    ook = ook or OokConfig()
    if agc_mode != "none" and agc is None:
        agc = AgcStaticParams()
    if amp_noise_power is None:
        amp_noise_power = 0.0 if agc_mode == "none" else agc.agc_noise_power
    if input_power is None:
        input_power = (math.sqrt(agc.lower_threshold * agc.upper_threshold)
                       if agc is not None else 1e-3)
    if agc_mode == "loop" and loop is None:
        loop = agc_loop.design_loop(agc)

    bits = ook_bits(ook, n_bits)
    spb = ook.samples_per_bit
    points = []
    for idx, snr_i in enumerate(snr_i_points):
        p_n = input_power / (1.0 + snr_i)
        p_s = input_power - p_n
        if agc_mode == "none":
            g = fixed_gain
        else:
            g = agc_static.gain(agc, input_power)
        snr_o = float(agc_static.snr_through_gain(snr_i, p_n, g, amp_noise_power))
        predicted = analytic_ber_ook(spb * snr_o)
        if n_bits * predicted < 100:
            warnings.warn(f"only {n_bits * predicted:.3g} errors expected at SNR_i={snr_i:.4g}; "
                          "BER estimate will be coarse", RuntimeWarning, stacklevel=2)
        point_seed = np.random.SeedSequence([int(seed), idx])
        if agc_mode == "loop":
            errors = _loop_errors(bits, ook, p_s, p_n, loop, input_power, point_seed, batch_bits)
        else:
            spans = _batches(n_bits, batch_bits)
            children = point_seed.spawn(len(spans))

            def work(i):
                a, b = spans[i]
                return _static_batch(bits[a:b], ook, p_s, p_n, g, amp_noise_power, children[i])

            if workers > 1:
                with ThreadPoolExecutor(workers) as pool:
                    errors = sum(pool.map(work, range(len(spans))))
            else:
                errors = sum(work(i) for i in range(len(spans)))
        points.append(BerPoint(float(snr_i), snr_o, BerResult.from_counts(errors, n_bits), predicted))
    return points


def _loop_errors(bits, ook, p_s, p_n, loop, input_power, seed_seq, batch_bits):
    # the loop runs sample by sample, so batches are sequential and carry its state
    spans = _batches(bits.size, batch_bits)
    children = seed_seq.spawn(1 + 2 * len(spans))
    state = agc_loop.settle(loop, input_power, seed=children[0])
    errors = 0
    for i, (a, b) in enumerate(spans):
        rng = np.random.default_rng(children[1 + 2 * i])
        chunk = bits[a:b]
        s = np.sqrt(p_s) * (2.0 * np.repeat(chunk, ook.samples_per_bit).astype(float) - 1.0)
        x = s + rng.normal(0.0, np.sqrt(p_n), s.size)
        run = agc_loop.run_loop(loop, x, state, seed=children[2 + 2 * i])
        state = run.state
        errors += count_errors(chunk, hard_decision_demod(run.output, ook))
    return errors
