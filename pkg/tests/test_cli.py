import json
import subprocess
import sys

import numpy as np
import pytest

from pairpref.cli import main
from pairpref.harness import gen_synthetic
from pairpref.linalg import read_matrix_csv, write_matrix_csv


@pytest.fixture
def matrix(tmp_path):
    path = tmp_path / "m.csv"
    write_matrix_csv(path, gen_synthetic(12, 2, 3))
    return str(path)


def _run_twice(tmp_path, make_args, outputs, capsys=None):
    """Run a command twice into separate directories and return both outputs."""
    results = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        d.mkdir()
        assert main(make_args(d)) == 0
        files = {name: (d / name).read_bytes() for name in outputs}
        if capsys is not None:
            files["stdout"] = capsys.readouterr().out
        results.append(files)
    return results


class TestCommands:
    def test_gen_matrix_and_model(self, tmp_path):
        assert main(["gen", "--k", "9", "--r", "2", "--seed", "4", "--out", str(tmp_path / "m.csv")]) == 0
        l = read_matrix_csv(tmp_path / "m.csv")
        np.testing.assert_array_equal(l, gen_synthetic(9, 2, 4))
        assert main(["gen", "--k", "9", "--r", "2", "--seed", "4", "--format", "model",
                     "--out", str(tmp_path / "m.json")]) == 0
        d = json.loads((tmp_path / "m.json").read_text())
        assert len(d["p"]) == 2 and len(d["u"][0]) == 9

    def test_plans(self, tmp_path, matrix):
        out, stats = tmp_path / "p.json", tmp_path / "s.json"
        assert main(["plans", "--matrix", matrix, "--r", "2", "--out", str(out), "--stats", str(stats)]) == 0
        res = json.loads(out.read_text())
        assert res["max_error"] <= 1e-9 and res["queries"] <= 12 * 3
        assert json.loads(stats.read_text())["total_calls"] == res["queries"]

    def test_rplans_both_modes(self, tmp_path, matrix):
        out = tmp_path / "r.json"
        assert main(["rplans", "--matrix", matrix, "--r", "2", "--budget", "20000", "--seed", "1",
                     "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert {"pair", "value_hat", "queries", "selected", "seed"} <= set(res)
        assert res["queries"] <= 20000 and res["seed"] == 1
        assert main(["rplans", "--matrix", matrix, "--r", "2", "--eps", "0.5", "--delta", "0.1",
                     "--seed", "1", "--max-samples", "2000", "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["capped"] is True and res["m1"] <= 2000

    @pytest.mark.parametrize("algo", ["naive", "lilucb", "se"])
    def test_baseline(self, tmp_path, matrix, algo):
        out = tmp_path / "b.json"
        assert main(["baseline", "--algo", algo, "--matrix", matrix, "--budget", "3000", "--seed", "2",
                     "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["queries"] <= 3000 and res["error"] >= 0

    def test_sweep(self, tmp_path, matrix):
        out = tmp_path / "s.csv"
        assert main(["sweep", "--matrix", matrix, "--r", "2", "--algos", "naive,rplans", "--budgets", "1000,2000",
                     "--reps", "2", "--seed", "0", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "algorithm,K,r,budget,rep,seed,error,queries,wall_ms"
        assert len(lines) == 9

    def test_validators_print_json(self, capsys):
        assert main(["validate-bernstein", "--p", "3", "--n", "100", "--delta", "0.1", "--trials", "20",
                     "--seed", "0"]) == 0
        assert json.loads(capsys.readouterr().out)["trials"] == 20
        assert main(["validate-se", "--delta", "0.1", "--trials", "2", "--seed", "0"]) == 0
        assert json.loads(capsys.readouterr().out)["trials"] == 2
        assert main(["validate-nystrom", "--k", "10", "--r", "2", "--m", "100,1000", "--trials", "3",
                     "--seed", "0"]) == 0
        assert len(json.loads(capsys.readouterr().out)["results"]) == 2

    def test_ingest(self, tmp_path):
        (tmp_path / "r.csv").write_text("1,0\n1,1\n0,0\n0,1\n")
        (tmp_path / "g.txt").write_text("f\nf\nm\nm\n")
        assert main(["ingest", "--ratings", str(tmp_path / "r.csv"), "--groups", str(tmp_path / "g.txt"),
                     "--out", str(tmp_path / "m.json")]) == 0
        d = json.loads((tmp_path / "m.json").read_text())
        assert d == {"p": [0.5, 0.5], "u": [[1.0, 0.5], [0.0, 0.5]]}


class TestExitCodes:
    def test_missing_file_is_data_error(self, tmp_path):
        assert main(["plans", "--matrix", str(tmp_path / "none.csv"), "--out", "x", "--stats", "y"]) == 3

    def test_non_spsd_is_data_error(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("0.1,0.9\n0.9,0.1\n")
        assert main(["baseline", "--algo", "naive", "--matrix", str(p), "--budget", "10", "--seed", "0",
                     "--out", str(tmp_path / "o.json")]) == 3

    def test_argparse_errors_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["gen", "--k", "3"])
        assert exc.value.code == 2

    def test_semantic_argument_errors(self, tmp_path, matrix):
        out = str(tmp_path / "o.json")
        assert main(["rplans", "--matrix", matrix, "--r", "2", "--seed", "0", "--out", out]) == 2
        assert main(["rplans", "--matrix", matrix, "--r", "2", "--budget", "5", "--seed", "0", "--out", out]) == 2
        assert main(["sweep", "--matrix", matrix, "--r", "2", "--algos", "bogus", "--budgets", "100",
                     "--reps", "1", "--seed", "0", "--out", out]) == 2


class TestDeterminism:
    def test_rplans_bytes(self, tmp_path, matrix):
        a, b = _run_twice(tmp_path, lambda d: ["rplans", "--matrix", matrix, "--r", "2", "--budget", "8000",
                                               "--seed", "5", "--out", str(d / "o.json")], ["o.json"])
        assert a == b

    def test_sweep_bytes(self, tmp_path, matrix):
        a, b = _run_twice(tmp_path, lambda d: ["sweep", "--matrix", matrix, "--r", "2", "--algos",
                                               "rplans,naive,lilucb,se", "--budgets", "1000,2000", "--reps", "2",
                                               "--seed", "1", "--out", str(d / "s.csv")], ["s.csv"])
        assert a == b

    def test_plans_bytes(self, tmp_path, matrix):
        a, b = _run_twice(tmp_path, lambda d: ["plans", "--matrix", matrix, "--out", str(d / "p.json"),
                                               "--stats", str(d / "s.json")], ["p.json", "s.json"])
        assert a == b


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pairpref", "gen", "--k", "5", "--r", "2", "--seed", "0",
                           "--out", str(tmp_path / "m.csv")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "m.csv").exists()
