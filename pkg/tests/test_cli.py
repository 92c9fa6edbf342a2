import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from hilbertcs.cli import main
from hilbertcs.hilbert import HilbertVector, save_csv
from hilbertcs.operator import save_samples

SMALL = ["--d", "3", "--p", "2", "--K", "15", "--sdof-schedule", "8", "16", "--trials", "2",
         "--reference-factor", "10"]


def test_run_writes_reports(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["run", *SMALL, "--output-dir", str(out)]) == 0
    errors = out / "scs-mc_d3_p2_Lc0.5_errors.csv"
    rows = list(csv.reader(errors.open()))
    assert rows[0] == ["method", "sdof", "trial", "rel_err_mean", "rel_err_std"]
    methods = [r[0] for r in rows[1:]]
    assert methods.count("scs") == 4 and methods.count("mc") == 4
    assert methods[-1] == "reference" and rows[-1][1] == "160"
    meta = json.loads((out / "scs-mc_d3_p2_Lc0.5_meta.json").read_text())
    assert meta["config"]["trials"] == 2 and meta["reference_seed"] == 0
    assert (out / "scs-mc_d3_p2_Lc0.5_summary.csv").exists()


def test_config_file_with_overrides(tmp_path):
    cfg = {"d": 3, "p": 2, "K": 15, "sdof_schedule": [8], "trials": 1, "reference_factor": 10,
           "methods": ["mc"], "output_dir": str(tmp_path / "a")}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "--config", str(path), "--Lc", "0.25",
                 "--output-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "mc_d3_p2_Lc0.25_errors.csv").exists()
    assert not (tmp_path / "a").exists()


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["run", "--trials", "0"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{\"nope\": 1}")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["run", *SMALL, "--solver", "tol_kkt"]) == 1
    assert "error" in capsys.readouterr().err


def test_flagged_exit_2(tmp_path):
    code = main(["run", *SMALL, "--methods", "scs", "--solver", "max_iter=2",
                 "--solver", "tol_kkt=1e-14", "--output-dir", str(tmp_path)])
    assert code == 2
    assert (tmp_path / "scs_d3_p2_Lc0.5_errors.csv").exists()


def test_solve_and_analyze(tmp_path, capsys):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((8, 12)) / np.sqrt(8)
    x = np.zeros((12, 2))
    x[3] = [1.0, -2.0]
    save_samples(a, tmp_path / "A.csv")
    save_csv(HilbertVector(a @ x), tmp_path / "u.csv")
    code = main(["solve", str(tmp_path / "A.csv"), str(tmp_path / "u.csv"), "--mu", "1e5",
                 "--continuation", "--tol-kkt", "1e-6", "--output", str(tmp_path / "r.json")])
    assert code == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["termination"] in ("kkt", "fixed-point")
    assert (tmp_path / rep["solution"]).exists()
    assert main(["analyze", str(tmp_path / "A.csv"), "--s", "2", "--trials", "200",
                 "--output", str(tmp_path / "an.json")]) == 0
    an = json.loads((tmp_path / "an.json").read_text())
    assert [r["s"] for r in an["rip"]] == [1, 2] and len(an["nsp"]) == 9
    assert main(["solve", str(tmp_path / "missing.csv"), str(tmp_path / "u.csv"),
                 "--mu", "1"]) == 1
    assert main(["solve", str(tmp_path / "A.csv"), str(tmp_path / "u.csv"), "--mu", "1",
                 "--step", "100"]) == 1


def test_pde_command(tmp_path):
    out = tmp_path / "u.csv"
    assert main(["pde", "--d", "2", "--K", "7", "--output", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "node,value" and len(rows) == 8
    assert main(["pde", "--d", "2", "--t", "0.1", "--output", str(out)]) == 1
    assert main(["pde", "--d", "2", "--t", "5", "0", "--output", str(out)]) == 1
    assert main(["pde", "--d", "8", "--amplitude-scale", "20", "--output", str(out)]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hilbertcs", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "hilbertcs" in res.stdout
