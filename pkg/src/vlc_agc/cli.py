"""
Command-line front end: ``vlc-agc-sim <command> --config FILE [--seed N] [--out DIR]``.

Each command writes ``<out>/<command>.csv``: a ``#`` metadata block
(command, config hash, seed, version, timestamp and the full resolved
config) followed by a header row and data rows. Everything except the
timestamp line is a pure function of config and seed.

Exit status: 0 on success, 2 on bad usage, 3 on a configuration error,
4 when the run itself fails.
"""

import argparse
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np

from . import agc_loop, agc_static, channel, frontend, scenario, waveform
from .agc_static import AgcStaticParams
from .config import ConfigError, RunConfig, default_config, parse_config, tracking_config
from .errors import FitError, NoSolutionError, ParameterError, SettleTimeout
from .units import db, dbm

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

COMMANDS = ("snr-curves", "gmax-sweep", "dynamic-range", "ber", "loop-step", "mobile")


def tool_version() -> str:
    try:
        return metadata.version("vlc-agc-sim")
    except metadata.PackageNotFoundError:
        return "unknown"


def _cell(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class CurveTable:
    command: str
    columns: list
    rows: list
    config_text: str
    config_sha256: str
    seed: int
    version: str = field(default_factory=tool_version)
    footer: dict = field(default_factory=dict)

    def __post_init__(self):
        width = len(self.columns)
        for i, r in enumerate(self.rows):
            if len(r) != width:
                raise ValueError(f"row {i} has {len(r)} cells, expected {width}")

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def body(self) -> str:
        """Header and data rows; byte-identical for identical config and seed."""
        lines = [",".join(self.columns)]
        lines += [",".join(_cell(v) for v in r) for r in self.rows]
        lines += [f"# {k} = {_cell(v)}" for k, v in self.footer.items()]
        return "\n".join(lines) + "\n"

    def header(self, timestamp: str) -> str:
        meta = [f"# command = {self.command}", f"# config_sha256 = {self.config_sha256}",
                f"# seed = {self.seed}", f"# version = {self.version}",
                f"# created = {timestamp}", "# config:"]
        meta += [f"#   {line}" for line in self.config_text.splitlines() if line]
        return "\n".join(meta) + "\n"

    def to_csv(self, timestamp: Optional[str] = None) -> str:
        timestamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        return self.header(timestamp) + self.body()


def csv_body(text: str) -> str:
    """Drop the metadata block of a written table, keeping header, rows and footer."""
    lines = text.splitlines(keepends=True)
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        i += 1
    return "".join(lines[i:])


def _table(cfg: RunConfig, command: str, columns, rows, footer=None) -> CurveTable:
    return CurveTable(command, list(columns), [list(r) for r in rows], cfg.emit(),
                      cfg.sha256(), cfg.seed, footer=footer or {})


# --- commands ---------------------------------------------------------------

def cmd_snr_curves(cfg: RunConfig) -> CurveTable:
    g = lambda n: cfg.get("snr_curves", n)  # noqa: E731
    snr_i = np.logspace(math.log10(g("snr_i_start")), math.log10(g("snr_i_stop")),
                        g("snr_i_points"))
    sweep = agc_static.snr_sweep(g("agc_index"), snr_i)
    with np.errstate(divide="ignore"):
        rows = zip(db(sweep["m"]), db(sweep["snr_i"]), db(sweep["snr_o"]))
    return _table(cfg, "snr-curves", ["m_db", "snr_i_db", "snr_o_db"], rows)


def cmd_gmax_sweep(cfg: RunConfig) -> CurveTable:
    g = lambda n: cfg.get("gmax_sweep", n)  # noqa: E731
    sp = cfg.system()
    d = np.logspace(math.log10(g("distance_start")), math.log10(g("distance_stop")),
                    g("distance_points"))
    h = channel.channel_gain_array(sp.channel, d, 0.0, 0.0)
    res = agc_static.gmax_sweep(sp.tx, sp.det, g("max_gain"), db(g("gain_range")), h,
                                equilibrium_power=sp.agc.equilibrium_power,
                                agc_noise_power=sp.agc.agc_noise_power,
                                reference_gain=g("reference_gain"))
    rows = zip(db(res["g_max"]), dbm(res["p_x"]), db(res["snr_i"]), db(res["snr_o"]),
               res["region"], db(res["snr_o_ref"]))
    return _table(cfg, "gmax-sweep",
                  ["g_max_db", "p_x_dbm", "snr_i_db", "snr_o_db", "region", "snr_o_ref_db"], rows)


def cmd_dynamic_range(cfg: RunConfig) -> CurveTable:
    """One-row report: ranges, thresholds and the link geometry at the thresholds."""
    sp = cfg.system()
    rep = agc_static.dynamic_range(sp.agc, sp.tx, sp.det, min_snr=cfg.get("dynamic_range", "min_snr"))
    distance = cfg.get("dynamic_range", "distance")

    def attempt(fn):
        try:
            return fn()
        except NoSolutionError:
            return float("nan")

    h_l, h_u = rep.gain_at_lower, rep.gain_at_upper
    couple = cfg.angle_coupling()
    row = [rep.equilibrium_range_db, rep.optical_range_db,
           dbm(rep.lower_threshold), dbm(rep.upper_threshold), h_l, h_u,
           db(rep.snr_at_lower), db(rep.snr_at_upper), rep.validity,
           db(sp.agc.agc_index),
           attempt(lambda: channel.distance_for_gain(sp.channel, h_l)),
           attempt(lambda: channel.distance_for_gain(sp.channel, h_u)),
           distance,
           attempt(lambda: math.degrees(channel.emission_angle_for_gain(
               sp.channel, h_l, distance, couple)))]
    cols = ["dr_db", "optical_dr_db", "p_l_dbm", "p_u_dbm", "h_lower", "h_upper",
            "snr_i_lower_db", "snr_i_upper_db", "valid", "m_db",
            "max_distance_m", "min_distance_m", "at_distance_m", "max_emission_angle_deg"]
    return _table(cfg, "dynamic-range", cols, [row])


def cmd_ber(cfg: RunConfig) -> CurveTable:
    g = lambda n: cfg.get("ber", n)  # noqa: E731
    agc = cfg.agc()
    if g("agc_index") is not None:
        agc = AgcStaticParams(agc.max_gain, agc.min_gain, agc.equilibrium_power,
                              agc.equilibrium_power / g("agc_index"))
    mode = g("agc_mode")
    loop = cfg.loop(agc) if mode == "loop" else None
    points = waveform.run_ber_experiment(
        g("snr_i"), g("n_bits"), cfg.seed, agc_mode=mode, agc=agc, fixed_gain=g("fixed_gain"),
        input_power=g("input_power"), ook=cfg.ook(), loop=loop, workers=g("workers"))
    rows = [(db(p.snr_i), db(p.snr_o), p.result.ber, *p.result.wilson_ci95, p.analytic_ber,
             p.result.bit_errors, p.result.bits_total) for p in points]
    return _table(cfg, "ber", ["snr_i_db", "snr_o_db", "ber", "ci_low", "ci_high", "analytic_ber",
                               "bit_errors", "bits"], rows)


def cmd_loop_step(cfg: RunConfig) -> CurveTable:
    g = lambda n: cfg.get("loop_step", n)  # noqa: E731
    loop = cfg.loop()
    res = agc_loop.measure_step_response(loop, db(g("step")), g("duration"),
                                         base_power=g("base_power"), seed=cfg.seed)
    return _table(cfg, "loop-step", ["t_s", "p_y_dbm"], zip(res.time, res.output_power_db),
                  footer={"tau_s": res.measured_tau, "t95_s": res.t95,
                          "tau_design_s": agc_loop.time_constant(loop)})


def cmd_mobile(cfg: RunConfig) -> CurveTable:
    g = lambda n: cfg.get("mobile", n)  # noqa: E731
    sp = cfg.system()
    mode = g("agc_mode")
    res = scenario.run_mobile_sim(
        sp, mode, cfg.trajectory(), g("duration"), g("window"), cfg.seed,
        bits_per_window=g("bits_per_window"), ook=cfg.ook(), fixed_gain=g("fixed_gain"),
        loop=cfg.loop(sp.agc) if mode == "loop" else None, loop_dt=g("loop_step"),
        trace_interval=g("trace_interval"))
    rows = [(t, x, h, dbm(px), db(gn), dbm(py), b.ber, *b.wilson_ci95, reg)
            for t, x, h, px, gn, py, b, reg in zip(
                res.time, res.rail_position, res.channel_gain, res.input_power,
                res.applied_gain, res.output_power, res.windowed_ber, res.region)]
    return _table(cfg, "mobile", ["t_s", "position_m", "h", "p_x_dbm", "gain_db", "p_y_dbm",
                                  "ber", "ci_low", "ci_high", "region"], rows)


HANDLERS = {
    "snr-curves": cmd_snr_curves,
    "gmax-sweep": cmd_gmax_sweep,
    "dynamic-range": cmd_dynamic_range,
    "ber": cmd_ber,
    "loop-step": cmd_loop_step,
    "mobile": cmd_mobile,
}

PRESETS = {"reference": default_config, "tracking": tracking_config}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vlc-agc-sim",
                                 description="VLC receive chain and AGC simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {tool_version()}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=(HANDLERS[name].__doc__ or "").strip().split("\n")[0] or None)
        p.add_argument("--config", type=Path, help="INI config; reference defaults when omitted")
        p.add_argument("--seed", type=int, help="overrides run.seed")
        p.add_argument("--out", type=Path, help="output directory (overrides run.output_dir)")
    p = sub.add_parser("config", help="print a complete canonical config")
    p.add_argument("--preset", choices=sorted(PRESETS), default="reference")
    p.add_argument("--config", type=Path, help="normalise this file instead of a preset")
    return ap


def _load(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else default_config()
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "must be >= 0")
        cfg = cfg.with_values(run__seed=args.seed)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        if args.command == "config":
            cfg = parse_config(args.config) if args.config else PRESETS[args.preset]()
            sys.stdout.write(cfg.emit())
            return EXIT_OK
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or Path(cfg.get("run", "output_dir"))
    try:
        table = HANDLERS[args.command](cfg)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{args.command}.csv"
        path.write_text(table.to_csv(), encoding="utf-8")
    except (ConfigError, ParameterError) as exc:
        print(f"config error in {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSolutionError, SettleTimeout, FitError, RuntimeError, OSError, ValueError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
