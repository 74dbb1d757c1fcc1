import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from crofton_lab.cli import main
from crofton_lab.config import ConfigError, load_config, parse_tau

HEMI = "2/(1+x^2+y^2)"


def run(args, capsys=None):
    out = io.StringIO()
    code = main(args, stdout=out)
    return code, out.getvalue()


def report_body(path):
    return json.dumps(json.loads(path.read_text())["report"], sort_keys=True)


def test_all_on_hemisphere(tmp_path):
    code, text = run(["all", "--rho", HEMI, "-o", str(tmp_path)])
    assert code == 0
    lines = text.strip().splitlines()
    assert len(lines) == 6 and all(" pass " in ln for ln in lines)
    for name in ("santalo", "crofton", "proposition", "inequality", "deficit", "characterize"):
        assert json.loads((tmp_path / f"{name}.json").read_text())["report"]["passed"]
        assert (tmp_path / f"{name}.csv").exists()
    for name in ("reports.csv", "lengths.csv", "pair_hist.csv", "identities.png", "crofton.png",
                 "lengths.png", "pair_hist.png", "geodesics.png"):
        assert (tmp_path / name).stat().st_size > 0, name
    with open(tmp_path / "reports.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 6


def test_shoot_flat_diameter(tmp_path):
    code, text = run(["shoot", "--rho", "1", "--s", "0", "--theta", "0", "-o", str(tmp_path)])
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["t", "x", "y"]
    first = [float(v) for v in rows[1]]
    last = [float(v) for v in rows[-1]]
    assert first == [0.0, 1.0, 0.0]
    assert last[0] == pytest.approx(2.0, abs=1e-9)
    assert last[1:] == pytest.approx([-1.0, 0.0], abs=1e-9)
    assert (tmp_path / "path.csv").read_text() == text
    assert (tmp_path / "path.png").exists()


def test_negative_scale_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[metric]\nrho = -1\n")
    code, _ = run(["santalo", "-c", str(cfg), "-o", str(tmp_path)])
    assert code == 2
    assert "positive" in capsys.readouterr().err


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[metric]\nrho = 1\ncolour = blue\n")
    assert run(["santalo", "-c", str(cfg)])[0] == 2
    assert "metric.colour" in capsys.readouterr().err


def test_bad_theta_is_config_error(tmp_path):
    assert run(["shoot", "--rho", "1", "--theta", "2", "-o", str(tmp_path)])[0] == 2


def test_solver_failure_exit_status(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[solver]\nmax_length = 0.5\n")
    code, _ = run(["shoot", "-c", str(cfg), "--rho", HEMI, "-o", str(tmp_path)])
    assert code == 3
    assert "MaxLengthExceeded" in capsys.readouterr().err


def test_solver_failure_in_report(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[solver]\nmax_length = 0.5\n[gamma]\nn_s = 16\nn_u = 8\n")
    assert run(["santalo", "-c", str(cfg), "-o", str(tmp_path), "--no-plots"])[0] == 3
    assert "geodesic 0" in capsys.readouterr().err


def test_tolerance_failure_exit_status(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[gamma]\nn_s = 16\nn_u = 8\n[tolerance]\nsantalo = 1e-12\n")
    code, text = run(["santalo", "-c", str(cfg), "--rho", "1+0.1*x", "-o", str(tmp_path)])
    assert code == 1
    assert "FAIL" in text
    assert "santalo" in capsys.readouterr().err


def test_reports_are_byte_identical(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        code, _ = run(["characterize", "--rho", "1+0.1*x", "--samples", "300", "--seed", "5",
                       "-o", str(d), "--no-plots"])
        assert code == 0
        run(["proposition", "--rho", "1+0.1*x", "--samples", "300", "--seed", "5",
             "-o", str(d), "--no-plots"])
    for name in ("characterize.json", "proposition.json"):
        assert report_body(dirs[0] / name) == report_body(dirs[1] / name)
    for name in ("characterize.csv", "proposition.csv", "lengths.csv", "pair_hist.csv"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_thread_count_does_not_change_reports(tmp_path, monkeypatch):
    bodies = []
    for threads in ("1", "3"):
        monkeypatch.setenv("CROFTON_LAB_THREADS", threads)
        out = tmp_path / threads
        run(["santalo", "--rho", "1+0.1*x", "-o", str(out), "--no-plots", "--format", "json"])
        bodies.append(report_body(out / "santalo.json"))
    assert bodies[0] == bodies[1]


def test_format_json_only(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[gamma]\nn_s = 16\nn_u = 8\n")
    run(["santalo", "-c", str(cfg), "--rho", "1", "-o", str(tmp_path / "o"), "--format", "json",
         "--no-plots"])
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["santalo.json"]


def test_metadata_block(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[gamma]\nn_s = 16\nn_u = 8\n")
    run(["santalo", "-c", str(cfg), "--rho", "1", "-o", str(tmp_path), "--no-plots"])
    doc = json.loads((tmp_path / "santalo.json").read_text())
    assert set(doc["metadata"]) == {"elapsed_seconds", "written_at", "version"}
    assert "elapsed" not in json.dumps(doc["report"])


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[metric]\nrho = 1+0.1*x\ngrid_n = 128\n"
        "[solver]\ntol = 1e-10\nmax_length = auto\n"
        "[gamma]\nseed = 3\nsamples = 500\n"
        "[crofton]\ntau = 0,0; 0.5,0.5\n"
    )
    c = load_config(cfg, {"gamma.seed": 9, "metric.rho": None})
    assert (c.rho, c.grid_n, c.tol, c.max_length, c.seed, c.samples) == (
        "1+0.1*x", 128, 1e-10, None, 9, 500)
    d = load_config()
    assert (d.tol, d.samples, d.n_s, d.n_u, d.seed) == (1e-9, 2000, 256, 128, 42)


@pytest.mark.parametrize("text", ["[gamma]\nsamples = 0\n", "[gamma]\nsamples = ten\n",
                                  "[output]\nformat = xml\n", "no section\n",
                                  "[crofton]\ntau = circle r=2\n"])
def test_invalid_config(tmp_path, text):
    cfg = tmp_path / "run.ini"
    cfg.write_text(text)
    with pytest.raises(ConfigError):
        load_config(cfg)


def test_missing_config_file(tmp_path):
    assert run(["santalo", "-c", str(tmp_path / "nope.ini")])[0] == 2


def test_parse_tau():
    circ = parse_tau("circle r=0.5 n=64 center=0.1,-0.2")
    assert circ.shape == (65, 2)
    assert np.allclose(np.hypot(circ[:, 0] - 0.1, circ[:, 1] + 0.2), 0.5)
    assert np.array_equal(parse_tau("0,0; 0.5,0.5"), [[0, 0], [0.5, 0.5]])
    with pytest.raises(ConfigError):
        parse_tau("square")


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "crofton_lab", "shoot", "--rho", "1", "--theta", "0.5",
         "-o", str(tmp_path), "--no-plots"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("t,x,y\n")


def test_help_lists_commands():
    proc = subprocess.run([sys.executable, "-m", "crofton_lab", "--help"], capture_output=True,
                          text=True, check=False)
    for name in ("santalo", "crofton", "deficit", "characterize", "shoot", "all"):
        assert name in proc.stdout
