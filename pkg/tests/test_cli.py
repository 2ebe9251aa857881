import argparse
import json

import pytest

from fluxread.cli import main, parse_quantity, parse_range


def test_parse_quantity_units():
    assert parse_quantity("0.7pF", "capacitance") == pytest.approx(0.7e-12)
    assert parse_quantity("700fF", "capacitance") == pytest.approx(700e-15)
    assert parse_quantity("720pH", "inductance") == pytest.approx(720e-12)
    assert parse_quantity("1.8nH", "inductance") == pytest.approx(1.8e-9)
    assert parse_quantity("1.7uA", "current") == pytest.approx(1.7e-6)
    assert parse_quantity("1.7µA", "current") == pytest.approx(1.7e-6)
    assert parse_quantity("100ns", "time") == pytest.approx(100.0)
    assert parse_quantity("0.1us", "time") == pytest.approx(100.0)


def test_parse_quantity_rejects_bare_and_wrong_dimension():
    with pytest.raises(argparse.ArgumentTypeError, match="bare number"):
        parse_quantity("1.8", "inductance")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_quantity("1.8pF", "inductance")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_quantity("abc", "time")


def test_parse_range():
    lo, hi = parse_range("0.3:1.2pF", "capacitance")
    assert lo == pytest.approx(0.3e-12)
    assert hi == pytest.approx(1.2e-12)
    lo, hi = parse_range("18nH:32nH", "inductance")
    assert lo == pytest.approx(18e-9)
    assert hi == pytest.approx(32e-9)


def test_spectrum_command_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["spectrum", "--out-dir", str(out1)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_left"] == 3
    assert (out1 / "spectrum.csv").exists()
    assert (out1 / "spectrum.png").exists()
    assert (out1 / "manifest.json").exists()
    header = (out1 / "spectrum.csv").read_text().splitlines()[1]
    assert header == "# n_left = 3"
    assert main(["spectrum", "--out-dir", str(out2)]) == 0
    capsys.readouterr()
    for name in ("spectrum.csv", "spectrum.png", "manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_spectrum_grid_convergence_flag(tmp_path, capsys):
    vals = []
    for grid in ("2048", "4096"):
        assert main(["spectrum", "--grid", grid, "--no-figures",
                     "--out-dir", str(tmp_path / grid)]) == 0
        vals.append(json.loads(capsys.readouterr().out)["energies_GHz"][0])
    assert abs(vals[0] - vals[1]) <= 1e-4


def test_spectrum_uncoupled_flux_invariance(tmp_path, capsys):
    outs = []
    for i, phi in enumerate(("0.0", "2.5")):
        d = tmp_path / f"m0_{i}"
        assert main(["spectrum", "--M", "0pH", "--phi-r", phi,
                     "--no-figures", "--out-dir", str(d)]) == 0
        capsys.readouterr()
        lines = (d / "spectrum.csv").read_text().splitlines()
        outs.append([l for l in lines if not l.startswith("# phi_r")])
    assert outs[0] == outs[1]


def test_tables_2_exact(tmp_path, capsys):
    assert main(["tables", "--which", "2", "--out-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    lines = (tmp_path / "table2.csv").read_text().splitlines()
    assert lines[0] == "F1,T1_us"
    got = {float(l.split(",")[0]): float(l.split(",")[1]) for l in lines[1:]}
    assert round(got[0.9], 2) == 0.47
    assert round(got[0.9999], 0) == 500


def test_config_file_via_cli(tmp_path, capsys):
    cfg = tmp_path / "params.cfg"
    cfg.write_text("M_nH = 0\nphi_p = 4.992\n")
    assert main(["spectrum", "--config", str(cfg), "--no-figures",
                 "--out-dir", str(tmp_path / "o")]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_left"] == 8  # uncoupled well holds more levels
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["params_SI"]["M"] == 0.0
    assert manifest["version"]


def test_flag_overrides_config(tmp_path, capsys):
    cfg = tmp_path / "params.cfg"
    cfg.write_text("M_nH = 0\n")
    assert main(["spectrum", "--config", str(cfg), "--M", "1nH",
                 "--no-figures", "--out-dir", str(tmp_path / "o")]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_left"] == 3


def test_well_vanished_is_reported(tmp_path, capsys):
    rc = main(["spectrum", "--M", "1.5nH", "--no-figures",
               "--out-dir", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "WellVanished" in err


def test_phase_command(tmp_path, capsys):
    out = tmp_path / "ph"
    assert main(["phase", "--t-end", "10ns", "--no-figures",
                 "--out-dir", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["rate_rad_per_ns"] > 0
    for f in ("trajectory_n0.csv", "trajectory_n1.csv",
              "trajectory_reference.csv", "phase_summary.json"):
        assert (out / f).exists()
    head = (out / "trajectory_n0.csv").read_text().splitlines()[0]
    assert head == "t_ns,phi_r,p_r,theta"


def test_fidelity_command_short_window(tmp_path, capsys):
    out = tmp_path / "fid"
    assert main(["fidelity", "--t-a", "2ns", "--n0", "1", "--no-figures",
                 "--out-dir", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert 0.99 < payload["F1"] <= 1.0
    assert (out / "fidelity_n1.csv").exists()
    assert (out / "events_n1.csv").exists()
    report = json.loads((out / "fidelity_report.json").read_text())
    assert report["F1"] == payload["F1"]


def test_sweep_command_wiring(tmp_path, capsys, monkeypatch):
    from fluxread import analysis, cli
    from fluxread.analysis import SweepRow

    def fake_sweep(param, values, base, M_variants=None, t_a=10.0, t_end=100.0):
        return [SweepRow(swept_param=param, value=v, N_min=3, N_max=15,
                         f_min=7.6, f_max=10.5, F0=0.9996, F1=0.9986,
                         theta_ta=0.07, rate=0.007) for v in values]

    monkeypatch.setattr(cli, "sweep", fake_sweep)
    out = tmp_path / "sw"
    assert main(["sweep", "--param", "Cr", "--range", "4:5pF", "--points", "3",
                 "--out-dir", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["file"] == "fig9.csv"
    assert payload["ok_rows"] == 3
    assert (out / "fig9.csv").exists()
    assert (out / "fig9.png").exists()


def test_tables_1_and_3_wiring(tmp_path, capsys, monkeypatch):
    from fluxread import cli
    from fluxread.analysis import SweepRow

    monkeypatch.setattr(cli, "run_point",
                        lambda pp, t_a=10.0, t_end=100.0, swept_param="", value=0.0:
                        SweepRow(swept_param=swept_param, value=value, status="ok"))
    monkeypatch.setattr(cli, "table3_rows",
                        lambda pp, F1_required=0.9985, t_a=10.0:
                        [("M", 1e-9, 2), ("Lr", 23e-9, -3)])
    out = tmp_path / "tb"
    assert main(["tables", "--which", "1", "--out-dir", str(out)]) == 0
    capsys.readouterr()
    assert (out / "table1.csv").read_text().count("\n") == 6  # header + 5 rows
    assert main(["tables", "--which", "3", "--out-dir", str(out)]) == 0
    capsys.readouterr()
    lines = (out / "table3.csv").read_text().splitlines()
    assert lines[0] == "param,working_value,target_percent"
    assert lines[1].startswith("M,")


def test_phase_figure_rendered(tmp_path, capsys):
    out = tmp_path / "phfig"
    assert main(["phase", "--t-end", "8ns", "--out-dir", str(out)]) == 0
    capsys.readouterr()
    assert (out / "phase.png").stat().st_size > 10000
