"""
Run configuration: an INI file whose keys carry their unit as a suffix.

    [agc]
    max_gain_db = 40
    equilibrium_power_dbm = 0

A value may also name its own unit (``equilibrium_power_w = 0 dBm``); the
token then wins over the key suffix. Every quantity is converted to linear SI
on load. Keys that are not in the schema are rejected with their
``section.key`` path, and the physical invariants of every parameter object
are checked once the whole file is read.
"""

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import agc_loop, channel
from .agc_static import AgcStaticParams
from .channel import ChannelParams
from .errors import ParameterError
from .frontend import DetectorParams, TransmitterParams
from .scenario import TrajectoryConfig
from .system import SystemParams
from .waveform import OokConfig


class ConfigError(ValueError):
    """Unparseable, unknown or invalid configuration entry."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# --- units ------------------------------------------------------------------

def _scale(k):
    return (lambda v: v * k), (lambda v: v / k)


_DB = (lambda v: 10.0 ** (v / 10.0)), (lambda v: 10.0 * math.log10(v))
_DBM = (lambda v: 1e-3 * 10.0 ** (v / 10.0)), (lambda v: 10.0 * math.log10(v / 1e-3))
_DEG = (math.radians, math.degrees)

# key suffix -> (dimension, to SI, from SI)
SUFFIXES = {
    "db": ("ratio", *_DB),
    "w": ("power", *_scale(1.0)),
    "dbm": ("power", *_DBM),
    "hz": ("frequency", *_scale(1.0)),
    "m": ("length", *_scale(1.0)),
    "m2": ("area", *_scale(1.0)),
    "s": ("time", *_scale(1.0)),
    "deg": ("angle", *_DEG),
    "rad": ("angle", *_scale(1.0)),
    "v": ("voltage", *_scale(1.0)),
    "v2": ("voltage2", *_scale(1.0)),
    "a2": ("current2", *_scale(1.0)),
    "ohm": ("resistance", *_scale(1.0)),
    "c": ("charge", *_scale(1.0)),
    "a_per_w": ("responsivity", *_scale(1.0)),
    "w_per_v": ("conversion", *_scale(1.0)),
    "w_per_hz": ("density", *_scale(1.0)),
    "m_per_s": ("speed", *_scale(1.0)),
    "db_per_v": ("slope", *_scale(1.0)),
}

# unit token allowed inside a value -> (dimension, to SI)
TOKENS = {
    "dB": ("ratio", _DB[0]),
    "W": ("power", _scale(1.0)[0]), "mW": ("power", _scale(1e-3)[0]),
    "uW": ("power", _scale(1e-6)[0]), "nW": ("power", _scale(1e-9)[0]),
    "dBm": ("power", _DBM[0]),
    "dBW": ("power", _DB[0]),
    "Hz": ("frequency", _scale(1.0)[0]), "kHz": ("frequency", _scale(1e3)[0]),
    "MHz": ("frequency", _scale(1e6)[0]), "GHz": ("frequency", _scale(1e9)[0]),
    "m": ("length", _scale(1.0)[0]), "cm": ("length", _scale(1e-2)[0]),
    "mm": ("length", _scale(1e-3)[0]),
    "m2": ("area", _scale(1.0)[0]), "mm2": ("area", _scale(1e-6)[0]),
    "s": ("time", _scale(1.0)[0]), "ms": ("time", _scale(1e-3)[0]),
    "us": ("time", _scale(1e-6)[0]), "ns": ("time", _scale(1e-9)[0]),
    "deg": ("angle", _DEG[0]), "rad": ("angle", _scale(1.0)[0]),
    "V": ("voltage", _scale(1.0)[0]),
    "ohm": ("resistance", _scale(1.0)[0]),
    "A/W": ("responsivity", _scale(1.0)[0]),
    "W/Hz": ("density", _scale(1.0)[0]), "mW/Hz": ("density", _scale(1e-3)[0]),
    "m/s": ("speed", _scale(1.0)[0]),
}


# --- schema -----------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    """One configurable quantity. `suffix` is the unit used when emitting."""

    name: str
    suffix: Optional[str]          # None for unitless numbers, ints and strings
    default: Any                   # SI value, list of SI values, or None
    kind: str = "float"            # float | int | str | floats
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""
    optional: bool = False
    choices: tuple = ()

    @property
    def dimension(self):
        return SUFFIXES[self.suffix][0] if self.suffix else None


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _all_pos(vs):
    return all(v > 0 for v in vs)


P = Param
_DEF_CH = ChannelParams()
_DEF_TX = TransmitterParams()
_DEF_DET = DetectorParams()

SCHEMA = {
    "run": [
        P("seed", None, 0, "int", _nonneg, ">= 0"),
        P("output_dir", None, ".", "str"),
    ],
    "channel": [
        P("half_power_angle", "deg", _DEF_CH.half_power_angle),
        P("receiver_area", "m2", _DEF_CH.receiver_area, check=_pos, rule="> 0"),
        P("optical_filter_gain", None, 1.0, check=_pos, rule="> 0"),
        P("half_fov", "deg", _DEF_CH.half_fov),
        P("refractive_index", None, 1.5),
        P("angle_coupling", None, "normal_incidence", "str",
          choices=tuple(channel.ANGLE_COUPLINGS)),
    ],
    "transmitter": [
        P("signal_variance", "v2", _DEF_TX.signal_variance),
        P("signal_mean", "v", _DEF_TX.signal_mean),
        P("bias_voltage", "v", _DEF_TX.bias_voltage),
        P("conversion_coeff", "w_per_v", _DEF_TX.conversion_coeff),
        P("noise_signal_ratio", None, _DEF_TX.noise_signal_ratio),
        P("threshold_voltage", "v", _DEF_TX.threshold_voltage),
    ],
    "detector": [
        P("responsivity", "a_per_w", _DEF_DET.responsivity),
        P("electron_charge", "c", _DEF_DET.electron_charge),
        P("multiplication", None, _DEF_DET.multiplication),
        P("excess_noise_factor", None, _DEF_DET.excess_noise_factor),
        P("bandwidth", "hz", _DEF_DET.bandwidth, check=_pos, rule="> 0"),
        P("ambient_optical_power", "w", _DEF_DET.ambient_optical_power),
        P("circuit_noise_variance", "a2", _DEF_DET.circuit_noise_variance),
        P("load_resistance", "ohm", _DEF_DET.load_resistance),
        P("independent_noise_density", "w_per_hz", _DEF_DET.independent_noise_density,
          optional=True),
    ],
    "agc": [
        P("max_gain", "db", 10.0 ** 4.0),
        P("min_gain", "db", 10.0 ** -0.8),
        P("equilibrium_power", "dbm", 1e-3),
        P("agc_noise_density", "w_per_hz", 2.71e-15, check=_pos, rule="> 0"),
        # replaces density * bandwidth when given
        P("agc_noise_power", "w", None, optional=True, check=_pos, rule="> 0"),
    ],
    "loop": [
        P("rise_time", "s", 1e-3, check=_pos, rule="> 0"),
        P("sample_interval", "s", 2e-7, check=_pos, rule="> 0"),
        P("detector_samples", None, 100, "int", _pos, "> 0"),
        P("detector_law", None, agc_loop.LOG_LAW, "str",
          choices=(agc_loop.LOG_LAW, agc_loop.LINEAR_LAW)),
        P("vga_slope", "db_per_v", 50.0, check=_pos, rule="> 0"),
        # V/dB for the log law, V/W for the linear law
        P("detector_gain", None, None, optional=True, check=_pos, rule="> 0"),
        P("detector_intercept", "w", 1e-9, check=_pos, rule="> 0"),
        P("ref_scale", None, 1.0, check=_pos, rule="> 0"),
    ],
    "waveform": [
        P("bit_rate", "hz", 25e6, check=_pos, rule="> 0"),
        P("samples_per_bit", None, 1, "int", _pos, "> 0"),
        P("prbs_order", None, 31, "int"),
        P("prbs_seed", None, 1, "int", _nonneg, ">= 0"),
        P("pattern", None, None, "str", optional=True),
    ],
    "trajectory": [
        P("rail_length", "m", 2.0),
        P("speed", "m_per_s", 1.0),
        P("perpendicular_distance", "m", 3.0),
        P("tracking_mode", None, "ideal", "str", choices=("ideal", "lag")),
        P("lag_delay", "s", 0.05),
        P("vibration_amplitude", "db", None, optional=True),
        P("vibration_frequency", "hz", None, optional=True),
    ],
    "snr_curves": [
        P("agc_index", "db", [10.0 ** (k / 10) for k in (0, 10, 20, 30, 40)], "floats", _all_pos),
        P("snr_i_start", "db", 10.0 ** -1.0),
        P("snr_i_stop", "db", 10.0 ** 8.0),
        P("snr_i_points", None, 91, "int", _pos, "> 0"),
    ],
    "gmax_sweep": [
        P("max_gain", "db", [10.0 ** (k / 10) for k in (25, 30, 35, 40)], "floats", _all_pos),
        P("gain_range", "db", 10.0 ** 4.8, check=_pos, rule="> 0"),
        P("distance_start", "m", 0.1, check=_pos, rule="> 0"),
        P("distance_stop", "m", 100.0, check=_pos, rule="> 0"),
        P("distance_points", None, 121, "int", _pos, "> 0"),
        P("reference_gain", "db", 10.0),
    ],
    "dynamic_range": [
        P("min_snr", "db", 10.0),
        P("distance", "m", 1.0, check=_pos, rule="> 0"),
    ],
    "ber": [
        P("agc_mode", None, "static", "str", choices=("none", "static", "loop")),
        P("snr_i", "db", [10.0 ** (k / 10) for k in range(0, 42, 2)], "floats", _all_pos),
        P("n_bits", None, 1_000_000, "int", _pos, "> 0"),
        P("fixed_gain", "db", 1.0),
        # overrides the AGC noise as p_e / m for this experiment
        P("agc_index", "db", None, optional=True),
        P("input_power", "w", None, optional=True, check=_pos, rule="> 0"),
        P("workers", None, 1, "int", _pos, "> 0"),
    ],
    "loop_step": [
        P("step", "db", 10.0 ** 0.3),
        P("duration", "s", None, optional=True, check=_pos, rule="> 0"),
        P("base_power", "w", None, optional=True, check=_pos, rule="> 0"),
    ],
    "mobile": [
        P("agc_mode", None, "static", "str", choices=("none", "static", "loop")),
        P("duration", "s", 4.0, check=_pos, rule="> 0"),
        P("window", "s", 0.25, check=_pos, rule="> 0"),
        P("bits_per_window", None, 200_000, "int", _pos, "> 0"),
        P("fixed_gain", "db", 10.0 ** 0.45),
        P("loop_step", "s", 1e-5, check=_pos, rule="> 0"),
        P("trace_interval", "s", None, optional=True, check=_pos, rule="> 0"),
    ],
}


def _key(p: Param) -> str:
    return f"{p.name}_{p.suffix}" if p.suffix else p.name


def _lookup():
    """Map every accepted key spelling to (param, key suffix)."""
    table = {}
    for section, params in SCHEMA.items():
        for p in params:
            if p.suffix is None:
                table[(section, p.name)] = (p, None)
                continue
            for suf, (dim, *_rest) in SUFFIXES.items():
                if dim == p.dimension:
                    table[(section, f"{p.name}_{suf}")] = (p, suf)
    return table


_KEYS = _lookup()


# --- values -----------------------------------------------------------------

def _number(text: str, p: Param, suffix: Optional[str], path: str) -> float:
    parts = text.split(None, 1)
    try:
        x = float(parts[0])
    except (ValueError, IndexError):
        raise ConfigError(path, f"expected a number, got {text!r}") from None
    if len(parts) == 2:
        token = parts[1].strip()
        if token not in TOKENS:
            raise ConfigError(path, f"unknown unit {token!r}")
        dim, to_si = TOKENS[token]
        if dim != p.dimension:
            raise ConfigError(path, f"unit {token!r} is a {dim}, expected a {p.dimension or 'plain number'}")
        return to_si(x)
    if suffix is None:
        return x
    return SUFFIXES[suffix][1](x)


def _parse_value(text: str, p: Param, suffix: Optional[str], path: str):
    text = text.strip()
    if p.optional and text.lower() == "none":
        return None
    if p.kind == "str":
        if p.choices and text not in p.choices:
            raise ConfigError(path, f"{text!r} is not one of {', '.join(p.choices)}")
        return text
    if p.kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(path, f"expected an integer, got {text!r}") from None
    if p.kind == "floats":
        items = [t for t in text.split(",") if t.strip()]
        if not items:
            raise ConfigError(path, "expected a comma-separated list")
        return [_number(t, p, suffix, path) for t in items]
    return _number(text, p, suffix, path)


def _format_number(p: Param, v: float) -> str:
    if p.suffix:
        v = SUFFIXES[p.suffix][2](v)
    # 12 significant digits keep parse -> emit stable under the dB round trip
    return format(v + 0.0, ".12g")


def _format(p: Param, v) -> str:
    if v is None:
        return "none"
    if p.kind in ("str", "int"):
        return str(v)
    if p.kind == "floats":
        return ", ".join(_format_number(p, x) for x in v)
    return _format_number(p, v)


# --- run config -------------------------------------------------------------

@dataclass
class RunConfig:
    """Parsed configuration: SI values keyed by (section, name), plus builders."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        for section, params in SCHEMA.items():
            for p in params:
                self.values.setdefault((section, p.name), p.default)

    def get(self, section: str, name: str):
        return self.values[(section, name)]

    def with_values(self, **updates) -> "RunConfig":
        """Copy with ``section__name=value`` overrides, revalidated."""
        vals = dict(self.values)
        for k, v in updates.items():
            section, name = k.split("__", 1)
            if (section, name) not in vals:
                raise ConfigError(f"{section}.{name}", "unknown key")
            vals[(section, name)] = v
        cfg = RunConfig(vals)
        cfg.validate()
        return cfg

    @property
    def seed(self) -> int:
        return self.get("run", "seed")

    # builders ---------------------------------------------------------------
    def channel_params(self) -> ChannelParams:
        g = lambda n: self.get("channel", n)  # noqa: E731
        return ChannelParams(g("half_power_angle"), g("receiver_area"), g("optical_filter_gain"),
                             g("half_fov"), g("refractive_index"))

    def angle_coupling(self):
        return channel.ANGLE_COUPLINGS[self.get("channel", "angle_coupling")]

    def transmitter(self) -> TransmitterParams:
        return TransmitterParams(**{p.name: self.get("transmitter", p.name)
                                    for p in SCHEMA["transmitter"]})

    def detector(self) -> DetectorParams:
        return DetectorParams(**{p.name: self.get("detector", p.name)
                                 for p in SCHEMA["detector"]})

    def agc(self) -> AgcStaticParams:
        p_a = self.get("agc", "agc_noise_power")
        if p_a is None:
            p_a = self.get("agc", "agc_noise_density") * self.get("detector", "bandwidth")
        return AgcStaticParams(max_gain=self.get("agc", "max_gain"),
                               min_gain=self.get("agc", "min_gain"),
                               equilibrium_power=self.get("agc", "equilibrium_power"),
                               agc_noise_power=p_a)

    def system(self) -> SystemParams:
        return SystemParams(self.channel_params(), self.transmitter(), self.detector(), self.agc())

    def loop(self, agc: Optional[AgcStaticParams] = None) -> agc_loop.LoopParams:
        g = lambda n: self.get("loop", n)  # noqa: E731
        return agc_loop.design_loop(
            agc or self.agc(), rise_time=g("rise_time"), sample_interval=g("sample_interval"),
            detector_samples=g("detector_samples"), detector_law=g("detector_law"),
            slope_db_per_volt=g("vga_slope"), detector_gain=g("detector_gain"),
            detector_intercept=g("detector_intercept"), ref_scale=g("ref_scale"))

    def ook(self) -> OokConfig:
        g = lambda n: self.get("waveform", n)  # noqa: E731
        pattern = g("pattern")
        if pattern is not None:
            if not pattern or set(pattern) - {"0", "1"}:
                raise ConfigError("waveform.pattern", "must be a string of 0 and 1")
            pattern = tuple(int(c) for c in pattern)
        return OokConfig(bit_rate=g("bit_rate"), samples_per_bit=g("samples_per_bit"),
                         amplitude=math.sqrt(self.get("transmitter", "signal_variance")),
                         prbs_order=g("prbs_order"), seed=g("prbs_seed"), pattern=pattern)

    def trajectory(self) -> TrajectoryConfig:
        g = lambda n: self.get("trajectory", n)  # noqa: E731
        vib = g("vibration_amplitude")
        return TrajectoryConfig(rail_length=g("rail_length"), speed=g("speed"),
                                perpendicular_distance=g("perpendicular_distance"),
                                tracking_mode=g("tracking_mode"), lag_delay=g("lag_delay"),
                                vibration_db=10.0 * math.log10(vib) if vib else 0.0,
                                vibration_hz=g("vibration_frequency") or 0.0)

    def validate(self):
        """Check per-key rules, then build every parameter object once."""
        for section, params in SCHEMA.items():
            for p in params:
                v = self.get(section, p.name)
                if v is not None and p.check is not None and not p.check(v):
                    raise ConfigError(f"{section}.{_key(p)}", f"must be {p.rule or 'valid'}")
        builders = [("channel", self.channel_params), ("transmitter", self.transmitter),
                    ("detector", self.detector), ("agc", self.agc), ("loop", self.loop),
                    ("waveform", self.ook), ("trajectory", self.trajectory)]
        for section, build in builders:
            try:
                build()
            except ConfigError:
                raise
            except (ParameterError, ValueError) as exc:
                raise ConfigError(section, str(exc)) from None
        from .prbs import TAPS
        if self.get("waveform", "prbs_order") not in TAPS:
            raise ConfigError("waveform.prbs_order", f"must be one of {sorted(TAPS)}")
        vib_hz = self.get("trajectory", "vibration_frequency")
        if vib_hz is not None and vib_hz >= self.get("detector", "bandwidth") / 100:
            raise ConfigError("trajectory.vibration_frequency_hz", "must stay below bandwidth/100")
        return self

    # text -------------------------------------------------------------------
    def emit(self) -> str:
        """Canonical text: every key, in schema order, in its default unit."""
        lines = []
        for section, params in SCHEMA.items():
            lines.append(f"[{section}]")
            for p in params:
                lines.append(f"{_key(p)} = {_format(p, self.get(section, p.name))}")
            lines.append("")
        return "\n".join(lines)

    def sha256(self) -> str:
        return hashlib.sha256(self.emit().encode("utf-8")).hexdigest()


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       default_section="\0defaults")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in parser.items(section):
            path = f"{section}.{key}"
            if (section, key) not in _KEYS:
                raise ConfigError(path, "unknown key")
            p, suffix = _KEYS[(section, key)]
            if (section, p.name) in values:
                raise ConfigError(path, f"{p.name} is given more than once")
            values[(section, p.name)] = _parse_value(raw, p, suffix, path)
    return RunConfig(values).validate()


def parse_config(path) -> RunConfig:
    """Read and validate a config file; missing keys take the reference defaults."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from None
    return parse_config_text(text)


def default_config() -> RunConfig:
    return RunConfig().validate()


def tracking_config() -> RunConfig:
    """Defaults for the rail-tracking link (see `system.tracking_platform`)."""
    from .system import tracking_platform
    sp = tracking_platform()
    return default_config().with_values(
        channel__half_fov=sp.channel.half_fov,
        detector__independent_noise_density=sp.det.independent_noise_density,
        agc__max_gain=sp.agc.max_gain, agc__min_gain=sp.agc.min_gain,
        agc__agc_noise_power=sp.agc.agc_noise_power,
        trajectory__tracking_mode="lag", trajectory__lag_delay=0.6,
    )


__all__ = ["ConfigError", "RunConfig", "SCHEMA", "parse_config", "parse_config_text",
           "default_config", "tracking_config"]
