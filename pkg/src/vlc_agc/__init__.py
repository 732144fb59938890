"""Visible-light receive chain with automatic gain control: channel, front end,
static AGC model, feedback loop, OOK BER and a mobile rail scenario."""

from . import agc_loop, agc_static, channel, frontend, scenario, waveform
from .agc_static import AgcStaticParams, Region
from .channel import ChannelGeometry, ChannelParams
from .errors import FitError, NoSolutionError, ParameterError, SettleTimeout
from .frontend import DetectorParams, TransmitterParams
from .system import SystemParams, reference_system, tracking_platform

__version__ = "0.1.0"

__all__ = [
    "agc_loop", "agc_static", "channel", "frontend", "scenario", "waveform",
    "AgcStaticParams", "Region", "ChannelGeometry", "ChannelParams",
    "FitError", "NoSolutionError", "ParameterError", "SettleTimeout",
    "DetectorParams", "TransmitterParams", "SystemParams", "reference_system", "tracking_platform",
]
