import csv
import json

import pytest

from vlptrack.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_calibrate_writes_table(tmp_path):
    out = tmp_path / "table.csv"
    rc = main(["calibrate", "--leds", "3", "--grid-spacing", "2.5",
               "--draws", "1", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["model", "n_leds", "omega_m", "draws", "grid_spacing"]
    assert len(rows) == 6
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]


def test_sweep_blocking_csv_and_plot(tmp_path):
    out = tmp_path / "rows.csv"
    fig = tmp_path / "rows.png"
    rc = main(["sweep-blocking", "--routes", "2", "--block-prob", "0.2",
               "--schemes", "none,fixed", "--out", str(out), "--plot", str(fig)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["sweep_value", "scheme", "rmse_m", "routes", "seed"]
    assert len(rows) == 3
    assert {r[1] for r in rows[1:]} == {"none", "fixed"}
    assert all(r[3] == "2" for r in rows[1:])
    assert fig.exists() and fig.stat().st_size > 0


def test_sweep_blocking_stdout_json(capsys):
    rc = main(["sweep-blocking", "--routes", "1", "--block-prob", "0.3",
               "--schemes", "none", "--format", "json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload[0]["scheme"] == "none"
    assert payload[0]["routes"] == 1


def test_sweep_auto_calibrates_when_needed(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    rc = main(["sweep-blocking", "--routes", "1", "--block-prob", "0.25",
               "--leds", "3", "--schemes", "calibrated",
               "--grid-spacing", "2.5", "--draws", "1", "--out", str(out)])
    assert rc == 0
    assert "no --table given" in capsys.readouterr().err
    rows = read_csv(out)
    assert rows[1][1] == "calibrated"


def test_sweep_leds_uses_saved_table(tmp_path):
    table = tmp_path / "table.csv"
    assert main(["calibrate", "--leds", "3,4", "--grid-spacing", "2.5",
                 "--draws", "1", "--out", str(table)]) == 0
    out = tmp_path / "rows.csv"
    rc = main(["sweep-leds", "--leds", "3,4", "--routes", "1",
               "--schemes", "calibrated", "--table", str(table),
               "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert [r[0] for r in rows[1:]] == ["3", "4"]


def test_trace_route_csv_columns(tmp_path):
    out = tmp_path / "trace.csv"
    rc = main(["trace-route", "--schemes", "none,conventional",
               "--block-prob", "0.5", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["step", "true_x", "true_y", "true_z", "layout",
                       "meas_x", "meas_y", "meas_z",
                       "none_x", "none_y", "none_z",
                       "conventional_x", "conventional_y", "conventional_z"]
    # at p=0.5 some steps lose every AP; those dump empty measurement cells
    assert any(r[5] == "" for r in rows[1:])
    assert all(r[11] != "" for r in rows[1:])


def test_trace_route_json_and_plot(tmp_path):
    out = tmp_path / "trace.json"
    fig = tmp_path / "trace.png"
    rc = main(["trace-route", "--schemes", "fixed", "--format", "json",
               "--out", str(out), "--plot", str(fig)])
    assert rc == 0
    steps = json.loads(out.read_text())
    assert steps[0]["step"] == 0
    assert "fixed" in steps[0]
    assert fig.exists() and fig.stat().st_size > 0


def test_eval_models_wide_table(tmp_path):
    out = tmp_path / "models.csv"
    fig = tmp_path / "models.png"
    rc = main(["eval-models", "--leds", "3", "--grid-spacing", "2.5",
               "--draws", "1", "--out", str(out), "--plot", str(fig)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["n_leds", "single", "side_pair", "diagonal_pair",
                       "triple", "full"]
    assert rows[1][0] == "3"
    assert fig.exists() and fig.stat().st_size > 0


def test_config_file_and_seed_flag(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("routes = 1\nschemes = none\nleds = 3\n")
    out = tmp_path / "rows.csv"
    rc = main(["sweep-blocking", "--config", str(cfg), "--seed", "77",
               "--block-prob", "0.1", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[1][3] == "1"
    assert rows[1][4] == "77"


def test_bad_scheme_exits_one(capsys):
    rc = main(["sweep-blocking", "--routes", "1", "--block-prob", "0.1",
               "--schemes", "bogus"])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_unwritable_out_exits_two(capsys):
    rc = main(["calibrate", "--leds", "3", "--grid-spacing", "2.5",
               "--draws", "1", "--out", "/no/such/dir/table.csv"])
    assert rc == 2
    assert "i/o error" in capsys.readouterr().err


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as exc:
        main(["sweep-blocking", "--no-such-flag"])
    assert exc.value.code == 1


def test_missing_config_file_exits(capsys):
    rc = main(["sweep-blocking", "--routes", "1", "--block-prob", "0.1",
               "--config", "/no/such/file.cfg"])
    assert rc == 2
