"""
Settled AGC amplifier.

A fixed-gain stage obeys p_y = g p_x + p_a. At equilibrium the VGA holds
p_y = p_e, which fixes the gain to (p_e - p_a)/p_x until it hits g_max or
g_min. The input thresholds of the equilibrium range are

    p_l = (p_e - p_a) / g_max,   p_u = (p_e - p_a) / g_min

and with the AGC index m = p_e / p_a the output SNR inside the range is
(m - 1) SNR_i / (m + SNR_i).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import frontend
from .errors import ParameterError
from .units import db, from_db


class Region(str, Enum):
    BELOW = "below_equilibrium"
    EQUILIBRIUM = "equilibrium"
    ABOVE = "above_equilibrium"


@dataclass(frozen=True)
class AgcStaticParams:
    max_gain: float = from_db(40.0)
    min_gain: float = from_db(40.0 - 48.0)
    equilibrium_power: float = 1e-3
    agc_noise_power: float = frontend.AGC_NOISE_DENSITY * 12.5e6

    def __post_init__(self):
        if not 0 < self.min_gain <= self.max_gain:
            raise ParameterError("need 0 < min_gain <= max_gain")
        if not 0 < self.agc_noise_power < self.equilibrium_power:
            raise ParameterError("need 0 < agc_noise_power < equilibrium_power")

    @classmethod
    def from_gain_range(cls, max_gain_db: float, range_db: float, **kw):
        return cls(max_gain=from_db(max_gain_db), min_gain=from_db(max_gain_db - range_db), **kw)

    @property
    def agc_index(self) -> float:
        return agc_index(self.equilibrium_power, self.agc_noise_power)

    @property
    def lower_threshold(self) -> float:
        return thresholds(self)[0]

    @property
    def upper_threshold(self) -> float:
        return thresholds(self)[1]


@dataclass(frozen=True)
class AgcOutput:
    gain_applied: float
    output_power: float
    output_snr: float
    region: Region
    distortion_flag: bool


@dataclass(frozen=True)
class DynamicRangeReport:
    equilibrium_range_db: float
    optical_range_db: float
    gain_at_lower: float
    gain_at_upper: float
    validity: bool
    lower_threshold: float = float("nan")
    upper_threshold: float = float("nan")
    snr_at_lower: float = float("nan")
    snr_at_upper: float = float("nan")


def agc_index(p_e: float, p_a: float) -> float:
    """m = p_e / p_a."""
    if not 0 < p_a < p_e:
        raise ParameterError("AGC index needs 0 < p_a < p_e")
    return p_e / p_a


def thresholds(params: AgcStaticParams):
    net = params.equilibrium_power - params.agc_noise_power
    return net / params.max_gain, net / params.min_gain


def region(params: AgcStaticParams, p_x: float) -> Region:
    p_l, p_u = thresholds(params)
    if p_x < p_l:
        return Region.BELOW
    if p_x > p_u:
        return Region.ABOVE
    return Region.EQUILIBRIUM


def gain(params: AgcStaticParams, p_x):
    """Piecewise VGA power gain for input power `p_x` (scalar or array)."""
    p_l, p_u = thresholds(params)
    p = np.asarray(p_x, dtype=float)
    net = params.equilibrium_power - params.agc_noise_power
    with np.errstate(divide="ignore"):
        g = np.where(p < p_l, params.max_gain,
                     np.where(p > p_u, params.min_gain, net / np.where(p > 0, p, 1.0)))
    return float(g) if g.ndim == 0 else g


def output_power(params: AgcStaticParams, p_x):
    p = np.asarray(p_x, dtype=float)
    g = np.asarray(gain(params, p))
    out = g * p + params.agc_noise_power
    # g p_x = p_e - p_a holds algebraically in equilibrium; pin it against rounding
    p_l, p_u = thresholds(params)
    out = np.where((p >= p_l) & (p <= p_u), params.equilibrium_power, out)
    return float(out) if out.ndim == 0 else out


def snr_through_gain(snr_i, p_n, g, p_a):
    """SNR after a stage of power gain g adding noise p_a."""
    return np.asarray(snr_i, dtype=float) / (1.0 + p_a / (g * np.asarray(p_n, dtype=float)))


def output_snr(params: AgcStaticParams, snr_i: float, p_n: float) -> AgcOutput:
    """Output of the settled AGC for an input with SNR `snr_i` and noise power `p_n`."""
    if snr_i < 0 or p_n <= 0:
        raise ParameterError("need snr_i >= 0 and p_n > 0")
    p_x = p_n * (1.0 + snr_i)
    g = gain(params, p_x)
    reg = region(params, p_x)
    return AgcOutput(
        gain_applied=g,
        output_power=output_power(params, p_x),
        output_snr=float(snr_through_gain(snr_i, p_n, g, params.agc_noise_power)),
        region=reg,
        distortion_flag=reg is Region.ABOVE,
    )


def equilibrium_snr(m, snr_i):
    """Closed form (m-1) SNR_i / (m + SNR_i) of the equilibrium branch."""
    m = np.asarray(m, dtype=float)
    s = np.asarray(snr_i, dtype=float)
    return (m - 1.0) * s / (m + s)


def gmax_design_margin(p_a: float, noise_floor: float) -> float:
    """p_a / noise floor: g_max has to be well above this for a lossless low end."""
    if noise_floor <= 0:
        raise ParameterError("noise floor must be positive")
    return p_a / noise_floor


def snr_sweep(m_list, snr_i_grid) -> dict:
    """Equilibrium-branch output SNR over a grid of AGC indices and input SNRs (linear)."""
    m = np.asarray(m_list, dtype=float)
    s = np.asarray(snr_i_grid, dtype=float)
    mm, ss = np.meshgrid(m, s, indexing="ij")
    return {"m": mm.ravel(), "snr_i": ss.ravel(), "snr_o": equilibrium_snr(mm, ss).ravel()}


def gmax_sweep(tx, det, g_max_list, gain_range_db: float, h_grid, *,
               equilibrium_power: float = 1e-3, agc_noise_power: float | None = None,
               reference_gain: float = from_db(10.0)) -> dict:
    """
    Output SNR against front-end input power for several VGA maximum gains.

    Rows are (g_max, h, p_x, snr_i, snr_o, region); `snr_o_ref` is a fixed-gain
    amplifier with the same noise p_a for comparison.
    """
    if agc_noise_power is None:
        agc_noise_power = frontend.AGC_NOISE_DENSITY * det.bandwidth
    h = np.asarray(h_grid, dtype=float)
    ps = frontend.signal_power(h, tx, det)
    pn = frontend.noise_power(h, tx, det)
    px = ps + pn
    snr_i = ps / pn
    rows = {k: [] for k in ("g_max", "h", "p_x", "snr_i", "snr_o", "snr_o_ref", "region")}
    for gm in g_max_list:
        params = AgcStaticParams(max_gain=gm, min_gain=gm / from_db(gain_range_db),
                                 equilibrium_power=equilibrium_power,
                                 agc_noise_power=agc_noise_power)
        g = gain(params, px)
        rows["g_max"].append(np.full(h.size, gm))
        rows["h"].append(h)
        rows["p_x"].append(px)
        rows["snr_i"].append(snr_i)
        rows["snr_o"].append(snr_through_gain(snr_i, pn, g, agc_noise_power))
        rows["snr_o_ref"].append(snr_through_gain(snr_i, pn, reference_gain, agc_noise_power))
        rows["region"].append(np.array([region(params, p).value for p in px]))
    return {k: np.concatenate(v) for k, v in rows.items()}


def dynamic_range(params: AgcStaticParams, tx=None, det=None,
                  min_snr: float = 10.0) -> DynamicRangeReport:
    """
    Width of the equilibrium range and the matching optical range.

    With a front-end (`tx`, `det`) the channel gains at both thresholds are
    found by inverting p_x(h) exactly, and `validity` records whether the input
    SNR there exceeds `min_snr` (so that p_x ~ p_s and the optical range is
    half the electrical one). Without one, the ideal square-law relation
    h_u/h_l = sqrt(p_u/p_l) is reported and validity is True.
    """
    p_l, p_u = thresholds(params)
    dr = db(p_u / p_l)
    if tx is None or det is None:
        return DynamicRangeReport(dr, dr / 2, float("nan"), float("nan"), True, p_l, p_u)
    h_l = frontend.gain_for_total_power(p_l, tx, det)
    h_u = frontend.gain_for_total_power(p_u, tx, det)
    snr_l = float(frontend.input_snr(h_l, tx, det))
    snr_u = float(frontend.input_snr(h_u, tx, det))
    return DynamicRangeReport(dr, dr / 2, h_l, h_u, bool(snr_l > min_snr and snr_u > min_snr),
                              p_l, p_u, snr_l, snr_u)
