import subprocess
import sys

import numpy as np
import pytest

from ldpc_maxwell.cli import main
from ldpc_maxwell.density import LLRDensity


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    cols = lines[0].split(",")
    return cols, [l.split(",") for l in lines[1:]]


def test_thresholds_bec(capsys):
    code, out, _ = run(["thresholds", "--ensemble", "(x^2,x^5)", "--channel", "bec"], capsys)
    assert code == 0
    assert out.startswith("# ldpc-maxwell ")
    assert "seed=0" in out.splitlines()[0] and "units=bits" in out.splitlines()[0]
    _, rows = table(out)
    vals = {k: float(v) for k, v in rows}
    assert vals["rate"] == pytest.approx(0.5)
    assert vals["eps_it"] == pytest.approx(0.4294, abs=1e-4)
    assert vals["eps_ml"] == pytest.approx(0.4881, abs=1e-4)
    assert vals["eps_ml_balance"] == pytest.approx(vals["eps_ml"], abs=1e-6)


def test_regular_shorthand(capsys):
    code, out, _ = run(["thresholds", "--ensemble", "3,6"], capsys)
    assert code == 0 and "eps_ml" in out


@pytest.mark.parametrize("bad", ["(x^2,", "x^2,x^5,x", "(q,x^5)"])
def test_malformed_ensemble_is_usage_error(bad, capsys):
    code, _, err = run(["thresholds", "--ensemble", bad], capsys)
    assert code == 1
    assert "bad ensemble" in err


def test_missing_subcommand(capsys):
    assert run([], capsys)[0] == 1


def test_zero_trials_rejected(capsys):
    code, _, _ = run(["maxwell-sim", "--ensemble", "3,6", "--n", "60", "--eps", "0.47", "--trials", "0"], capsys)
    assert code == 1


def test_empty_grid_rejected(capsys):
    assert run(["exit-curve", "--ensemble", "3,6", "--points", "0"], capsys)[0] == 1
    assert run(["peel-sim", "--ensemble", "3,6", "--n", "60", "--eps", ","], capsys)[0] == 1


def test_exit_curve_columns(capsys):
    code, out, _ = run(["exit-curve", "--ensemble", "3,6", "--points", "20"], capsys)
    assert code == 0
    cols, rows = table(out)
    assert cols == ["x", "w", "branch", "exit", "gexit"]
    assert {r[2] for r in rows} == {"stable", "unstable"}
    assert all(r[3] == r[4] for r in rows)


def test_identical_runs_identical_bytes(tmp_path, capsys):
    argv = ["peel-sim", "--ensemble", "3,6", "--n", "120", "--eps", "0.4,0.45", "--trials", "3", "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    other = tmp_path / "c.csv"
    assert main(argv[:-1] + ["10", "--out", str(other)]) == 0
    assert other.read_text().splitlines()[0] != a.read_text().splitlines()[0]


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nensemble = 3,6\npoints=10\n")
    code, out, _ = run(["exit-curve", "--config", str(cfg)], capsys)
    assert code == 0
    assert len(table(out)[1]) >= 10
    # explicit flags win over the file
    code, out2, _ = run(["exit-curve", "--config", str(cfg), "--points", "5"], capsys)
    assert code == 0 and len(table(out2)[1]) < len(table(out)[1])


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ensemble=3,6\ncolour=blue\n")
    code, _, err = run(["exit-curve", "--config", str(cfg)], capsys)
    assert code == 1 and "colour" in err


def test_config_bad_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ensemble=3,6\njust words\n")
    code, _, err = run(["exit-curve", "--config", str(cfg)], capsys)
    assert code == 1 and ":2:" in err


@pytest.mark.parametrize("p", [0.1, 0.3])
def test_kernel_table(p, capsys):
    code, out, _ = run(["kernels", "--channel", f"bsc:{p}", "--points", "41"], capsys)
    assert code == 0
    cols, rows = table(out)
    assert cols == ["l", "k_L", "k_D", "k_absL", "k_absD"]
    k = np.array([float(r[1]) for r in rows])
    assert len(k) == 41 and np.all(np.diff(k) < 0)


def test_bad_channel(capsys):
    assert run(["kernels", "--channel", "bsc:1.5"], capsys)[0] == 1


def test_bec_gexit_curve_equals_exit(capsys):
    code, out, _ = run(["gexit-curve", "--ensemble", "3,6", "--channel", "bec", "--points", "6",
                        "--bins", "201"], capsys)
    assert code == 0
    _, rows = table(out)
    assert len(rows) >= 6
    for r in rows:
        assert float(r[3]) == pytest.approx(float(r[4]), abs=1e-9)


def test_maxwell_sim_traces(tmp_path, capsys):
    tdir = tmp_path / "traces"
    code, out, _ = run(["maxwell-sim", "--ensemble", "(x^2,x^5)", "--n", "200", "--eps", "0.47",
                        "--trials", "10", "--trace-dir", str(tdir)], capsys)
    assert code == 0
    files = sorted(tdir.glob("*.csv"))
    assert len(files) == 10
    cols, trace = table(files[0].read_text())
    assert cols == ["trial", "ell", "h", "guesses", "resolutions"]
    cols, rows = table(out)
    assert cols == ["statistic", "mean", "std", "predicted"]
    assert [r[0] for r in rows] == ["guesses_per_n", "resolutions_per_n", "h_final_per_n", "peak_h_per_n"]


def test_maxwell_sim_below_threshold(capsys):
    code, out, _ = run(["maxwell-sim", "--ensemble", "3,6", "--n", "2000", "--eps", "0.3", "--trials", "3"], capsys)
    assert code == 0
    rows = dict((r[0], r[1:]) for r in table(out)[1])
    assert float(rows["guesses_per_n"][0]) < 0.01
    assert float(rows["guesses_per_n"][2]) == 0.0


def test_de_run_dump(tmp_path, capsys):
    dump = tmp_path / "dens"
    code, out, _ = run(["de-run", "--ensemble", "3,6", "--params", "0.05", "--bins", "301",
                        "--dump", str(dump)], capsys)
    assert code == 0
    files = list(dump.glob("*.bin"))
    assert len(files) == 1
    d = LLRDensity.load(files[0])
    assert d.grid.bins == 301 and d.error_probability() < 1e-8


def test_de_run_not_converged(capsys):
    code, _, err = run(["de-run", "--ensemble", "3,6", "--params", "0.083", "--bins", "201",
                        "--max-iter", "3"], capsys)
    assert code == 2 and "did not converge" in err


def test_oracle_check_small(capsys):
    code, out, _ = run(["oracle-check", "--count", "2", "--n-max", "6"], capsys)
    assert code == 0
    _, rows = table(out)
    assert rows and all(r[-1] == "PASS" for r in rows)
    assert out.rstrip().endswith("failures=0")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ldpc_maxwell.cli", "kernels", "--channel", "bec:0.3",
                           "--points", "3"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1] == "l,k_L,k_D,k_absL,k_absD"
