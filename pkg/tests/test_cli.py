import hashlib
import math
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from vlc_agc import cli, config
from vlc_agc.config import ConfigError, parse_config_text
from vlc_agc.units import db

REPO = Path(__file__).resolve().parents[1]


def _body_rows(text):
    body = cli.csv_body(text).splitlines()
    header = body[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in body[1:] if not line.startswith("#")]
    return rows


def test_empty_config_gives_reference_defaults():
    cfg = parse_config_text("")
    assert db(cfg.agc().agc_index) == pytest.approx(44.7, abs=0.05)
    assert cfg.emit() == config.default_config().emit()


def test_shipped_config_is_the_default():
    shipped = config.parse_config(REPO / "configs" / "table1.cfg")
    assert shipped.emit() == config.default_config().emit()
    assert (REPO / "configs" / "table1.cfg").read_text() == config.default_config().emit()


def test_dbm_value_token():
    cfg = parse_config_text("[agc]\nequilibrium_power_w = 0 dBm\n")
    assert cfg.get("agc", "equilibrium_power") == pytest.approx(1e-3, rel=1e-15)
    cfg = parse_config_text("[agc]\nequilibrium_power_dbm = 0\n")
    assert cfg.get("agc", "equilibrium_power") == pytest.approx(1e-3, rel=1e-15)


def test_alternative_suffixes_and_tokens():
    cfg = parse_config_text("[channel]\nhalf_fov_rad = 0.5\n[detector]\nbandwidth_hz = 25 MHz\n"
                            "[agc]\nagc_noise_density_w_per_hz = 2.71e-12 mW/Hz\n")
    assert cfg.get("channel", "half_fov") == 0.5
    assert cfg.get("detector", "bandwidth") == 25e6
    assert cfg.get("agc", "agc_noise_density") == pytest.approx(2.71e-15)


@pytest.mark.parametrize("text,path", [
    ("[detector]\nbandwidth_hz = -12.5e6\n", "detector.bandwidth_hz"),
    ("[agc]\nmystery = 1\n", "agc.mystery"),
    ("[agc]\nmax_gain_db = 40 MHz\n", "agc.max_gain_db"),
    ("[agc]\nmax_gain_db = 40\nmax_gain_db2 = 3\n", "agc.max_gain_db2"),
    ("[agc]\nmax_gain_db = forty\n", "agc.max_gain_db"),
    ("[ber]\nagc_mode = sometimes\n", "ber.agc_mode"),
    ("[waveform]\nprbs_order = 8\n", "waveform.prbs_order"),
    ("[space]\nx = 1\n", "space"),
])
def test_errors_carry_key_path(text, path):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.path == path


def test_duplicate_spellings_rejected():
    with pytest.raises(ConfigError, match="more than once"):
        parse_config_text("[agc]\nequilibrium_power_dbm = 0\nequilibrium_power_w = 1e-3\n")


def test_invariants_revalidated():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("[transmitter]\nbias_voltage_v = 6.1\n")
    assert exc.value.path == "transmitter"
    with pytest.raises(ConfigError):
        parse_config_text("[agc]\nmax_gain_db = 10\nmin_gain_db = 20\n")


@settings(max_examples=60, deadline=None)
@given(g_max=st.floats(5.0, 60.0), span=st.floats(1.0, 60.0), pe=st.floats(-20.0, 20.0),
       fov=st.floats(1.0, 89.0), bw=st.floats(1e3, 1e9), seed=st.integers(0, 2 ** 31))
def test_emit_parse_emit_fixed_point(g_max, span, pe, fov, bw, seed):
    text = (f"[run]\nseed = {seed}\n[channel]\nhalf_fov_deg = {fov!r}\n"
            f"[detector]\nbandwidth_hz = {bw!r}\n"
            f"[agc]\nmax_gain_db = {g_max!r}\nmin_gain_db = {g_max - span!r}\n"
            f"equilibrium_power_dbm = {pe!r}\n")
    try:
        first = parse_config_text(text).emit()
    except ConfigError:
        return
    assert parse_config_text(first).emit() == first


def test_tracking_preset_round_trips():
    text = config.tracking_config().emit()
    assert parse_config_text(text).emit() == text
    assert (REPO / "configs" / "tracking.cfg").read_text() == text


def _run(tmp_path, *args):
    return cli.main(list(args) + ["--out", str(tmp_path)])


def test_dynamic_range_command(tmp_path):
    assert _run(tmp_path, "dynamic-range") == cli.EXIT_OK
    row = _body_rows((tmp_path / "dynamic-range.csv").read_text())[0]
    assert float(row["dr_db"]) == pytest.approx(48.0, abs=1e-9)
    assert float(row["optical_dr_db"]) == pytest.approx(24.0, abs=1e-9)
    assert float(row["max_distance_m"]) == pytest.approx(1.57, abs=0.01)


def test_snr_curves_row(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("[snr_curves]\nsnr_i_start_db = 0\nsnr_i_stop_db = 60\nsnr_i_points = 61\n")
    assert _run(tmp_path, "snr-curves", "--config", str(cfg)) == cli.EXIT_OK
    rows = _body_rows((tmp_path / "snr-curves.csv").read_text())
    hit = [r for r in rows if float(r["m_db"]) == 10.0 and abs(float(r["snr_i_db"]) - 30) < 1e-9]
    assert len(hit) == 1
    assert float(hit[0]["snr_o_db"]) == pytest.approx(9.50, abs=0.005)


def test_gmax_sweep_columns(tmp_path):
    assert _run(tmp_path, "gmax-sweep") == cli.EXIT_OK
    text = (tmp_path / "gmax-sweep.csv").read_text()
    header = cli.csv_body(text).splitlines()[0]
    assert header.startswith("g_max_db,p_x_dbm,snr_i_db,snr_o_db,region")


def test_metadata_block(tmp_path):
    assert _run(tmp_path, "dynamic-range", "--seed", "17") == cli.EXIT_OK
    text = (tmp_path / "dynamic-range.csv").read_text()
    meta = [line for line in text.splitlines() if line.startswith("# ") and " = " in line][:5]
    keys = [m[2:].split(" = ")[0] for m in meta]
    assert keys == ["command", "config_sha256", "seed", "version", "created"]
    assert "# seed = 17" in text
    cfg = config.default_config().with_values(run__seed=17)
    assert f"# config_sha256 = {cfg.sha256()}" in text
    assert cfg.sha256() == hashlib.sha256(cfg.emit().encode()).hexdigest()


def test_ber_rerun_is_byte_identical(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("[ber]\nsnr_i_db = 4, 8\nn_bits = 50000\nagc_mode = static\n")
    outs = []
    for sub in ("a", "b"):
        assert cli.main(["ber", "--config", str(cfg), "--seed", "3",
                         "--out", str(tmp_path / sub)]) == cli.EXIT_OK
        outs.append(cli.csv_body((tmp_path / sub / "ber.csv").read_text()))
    assert outs[0] == outs[1]
    rows = _body_rows((tmp_path / "a" / "ber.csv").read_text())
    assert list(rows[0]) == ["snr_i_db", "snr_o_db", "ber", "ci_low", "ci_high", "analytic_ber",
                             "bit_errors", "bits"]


def test_seed_changes_ber_body(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("[ber]\nsnr_i_db = 4\nn_bits = 50000\n")
    bodies = []
    for seed in ("1", "2"):
        cli.main(["ber", "--config", str(cfg), "--seed", seed, "--out", str(tmp_path / seed)])
        bodies.append(cli.csv_body((tmp_path / seed / "ber.csv").read_text()))
    assert bodies[0] != bodies[1]


def test_loop_step_footer(tmp_path):
    assert _run(tmp_path, "loop-step") == cli.EXIT_OK
    text = (tmp_path / "loop-step.csv").read_text()
    body = cli.csv_body(text)
    assert body.splitlines()[0] == "t_s,p_y_dbm"
    footer = dict(line[2:].split(" = ") for line in body.splitlines() if line.startswith("# "))
    tau, t95 = float(footer["tau_s"]), float(footer["t95_s"])
    assert 2.9 <= t95 / tau <= 3.1


def test_mobile_command(tmp_path):
    cfg = tmp_path / "m.cfg"
    cfg.write_text((REPO / "configs" / "tracking.cfg").read_text().replace(
        "bits_per_window = 200000", "bits_per_window = 20000").replace(
        "duration_s = 4", "duration_s = 1"))
    assert _run(tmp_path, "mobile", "--config", str(cfg)) == cli.EXIT_OK
    rows = _body_rows((tmp_path / "mobile.csv").read_text())
    assert len(rows) == 4
    assert list(rows[0])[:9] == ["t_s", "position_m", "h", "p_x_dbm", "gain_db", "p_y_dbm",
                                 "ber", "ci_low", "ci_high"]


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[detector]\nbandwidth_hz = -1\n")
    assert cli.main(["ber", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "detector.bandwidth_hz" in capsys.readouterr().err
    assert cli.main(["ber", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    assert cli.main(["not-a-command"]) == cli.EXIT_USAGE
    # a precondition that only the run can check is still a config error
    short = tmp_path / "short.cfg"
    short.write_text("[mobile]\nwindow_s = 1e-5\n")
    assert _run(tmp_path, "mobile", "--config", str(short)) == cli.EXIT_CONFIG
    # an unwritable output location fails at run time
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["dynamic-range", "--out", str(blocker / "sub")]) == cli.EXIT_RUNTIME


def test_config_command_prints_canonical_text(capsys):
    assert cli.main(["config", "--preset", "reference"]) == cli.EXIT_OK
    assert capsys.readouterr().out == config.default_config().emit()


def test_curve_table_must_be_rectangular():
    with pytest.raises(ValueError):
        cli.CurveTable("x", ["a", "b"], [[1.0]], "", "", 0)


def test_nan_cells_are_written():
    t = cli.CurveTable("x", ["a"], [[math.nan]], "", "", 0)
    assert t.body() == "a\nnan\n"
