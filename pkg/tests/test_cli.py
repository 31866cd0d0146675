import json
import os

import pytest

from bolab import cli, io


def run(argv):
    return cli.main(argv)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def masked_manifest(path):
    with open(path) as fh:
        obj = json.load(fh)
    obj["wall_time_s"] = None
    obj["config"].pop("out_dir", None)
    return obj


def test_list(capsys):
    assert run(["--list"]) == 0
    out = capsys.readouterr().out
    for name, _ in cli.EXPERIMENTS:
        assert name in out
    assert len(cli.EXPERIMENTS) == 16


def test_missing_action_is_usage_error(capsys):
    assert run([]) == 2
    assert run(["bo"]) == 2


def test_validation_error_exit_code(tmp_path):
    assert run(["--out-dir", str(tmp_path), "bo", "travelling-wave",
                "--r", "1.5"]) == 2


def test_numerical_diagnostic_exit_code(tmp_path):
    poles = tmp_path / "poles.csv"
    io.write_csv(str(poles), "m", ["xi", "eta"], [(1.0, 1e-7), (3.0, 1.0)])
    assert run(["--out-dir", str(tmp_path), "solitons", "evolve",
                "--poles-file", str(poles), "--t-final", "0.1"]) == 3


def test_bad_flag_value_is_argparse_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["--out-dir", str(tmp_path), "bo", "travelling-wave",
             "--r", "notanumber"])
    assert exc.value.code == 2


def test_travelling_wave_artifacts(tmp_path):
    out = str(tmp_path)
    assert run(["--out-dir", out, "--seed", "7", "bo", "travelling-wave",
                "--modes", "64"]) == 0
    text = read(os.path.join(out, "profile.csv")).decode()
    lines = text.split("\r\n")
    assert lines[0] == "# subcommand=bo travelling-wave seed=7"
    assert lines[1] == "x,f(x)"
    with open(os.path.join(out, "travelling_wave.json")) as fh:
        rep = json.load(fh)
    assert rep["speed"] == pytest.approx(5.0 / 3.0)
    assert rep["residual"] < 1e-8
    manifest = masked_manifest(os.path.join(out, "run_manifest.json"))
    assert manifest["subcommand"] == "bo travelling-wave"
    assert manifest["seed"] == 7
    assert "profile.csv" in manifest["artifacts"]
    assert "numpy" in manifest["versions"]


def test_determinism_byte_identical(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    args = ["gibbs", "sample", "--steps", "600", "--burn-in", "200"]
    assert run(["--out-dir", a, "--seed", "5"] + args) == 0
    assert run(["--out-dir", b, "--seed", "5"] + args) == 0
    assert read(os.path.join(a, "samples.csv")) == read(
        os.path.join(b, "samples.csv"))
    assert read(os.path.join(a, "gibbs.json")) == read(
        os.path.join(b, "gibbs.json"))
    assert masked_manifest(os.path.join(a, "run_manifest.json")) == \
        masked_manifest(os.path.join(b, "run_manifest.json"))
    # a different seed changes the draws
    c = str(tmp_path / "c")
    assert run(["--out-dir", c, "--seed", "6"] + args) == 0
    assert read(os.path.join(a, "samples.csv")) != read(
        os.path.join(c, "samples.csv"))


def test_config_file_defaults_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("r = 0.6\nmodes = 32\n# comment\n")
    out1 = str(tmp_path / "o1")
    assert run(["--config", str(cfg), "--out-dir", out1,
                "bo", "travelling-wave"]) == 0
    m1 = masked_manifest(os.path.join(out1, "run_manifest.json"))
    assert m1["config"]["r"] == 0.6
    assert m1["config"]["modes"] == 32
    out2 = str(tmp_path / "o2")
    assert run(["--config", str(cfg), "--out-dir", out2,
                "bo", "travelling-wave", "--r", "0.9"]) == 0
    m2 = masked_manifest(os.path.join(out2, "run_manifest.json"))
    assert m2["config"]["r"] == 0.9         # explicit flag wins
    assert m2["config"]["modes"] == 32


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("not_a_real_option = 3\n")
    assert run(["--config", str(bad), "bo", "travelling-wave"]) == 2
    assert run(["--config", str(tmp_path / "missing.txt"),
                "bo", "travelling-wave"]) == 4
    malformed = tmp_path / "m.txt"
    malformed.write_text("just a line without equals\n")
    assert run(["--config", str(malformed), "bo", "travelling-wave"]) == 2


def test_plot_flag_renders_png(tmp_path):
    out = str(tmp_path)
    assert run(["--out-dir", out, "--plot", "bo", "travelling-wave",
                "--modes", "32"]) == 0
    png = read(os.path.join(out, "profile.png"))
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_solitons_field_dump_roundtrip(tmp_path):
    out = str(tmp_path)
    assert run(["--out-dir", out, "solitons", "evolve", "--n", "2",
                "--t-final", "0.1", "--dt-out", "0.05"]) == 0
    f = io.field_from_text(read(os.path.join(out, "field.txt")).decode())
    # superposition of two unit-wavenumber solitons: mean is -2kn = -4
    assert f.mean == pytest.approx(-4.0, abs=1e-10)
    with open(os.path.join(out, "solitons.json")) as fh:
        rep = json.load(fh)
    assert rep["kinetic_drift"] < 1e-6


def test_gas_partition_report(tmp_path):
    out = str(tmp_path)
    assert run(["--out-dir", out, "gas", "partition", "--n", "5"]) == 0
    with open(os.path.join(out, "gas_partition.json")) as fh:
        rep = json.load(fh)
    assert rep["abs_error"] < 1e-10


def test_euler_evolve_smoke(tmp_path):
    out = str(tmp_path)
    assert run(["--out-dir", out, "euler", "evolve", "--grid", "128",
                "--t-final", "0.1", "--dt", "2e-3"]) == 0
    with open(os.path.join(out, "euler_evolve.json")) as fh:
        rep = json.load(fh)
    assert rep["energy_drift"] < 1e-10
    assert rep["shock_time"] is None
