import json

import pytest

from plantedgraphs import theory
from plantedgraphs.cli import main
from plantedgraphs.detect import run_test
from plantedgraphs.graph import load_edgelist


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("PLANTED_SEED", raising=False)


class TestGen:
    def test_planted_line(self, tmp_path, capsys):
        out = tmp_path / "g.el"
        code, _, _ = run(capsys, "gen", "--n", 100, "--lambda", 0, "--plant", "line:5", "--seed", 1, "--out", out)
        assert code == 0
        assert out.read_text().splitlines()[0] == "100 4"
        assert (tmp_path / "g.el.truth.json").exists()

    def test_lambda_too_large(self, tmp_path, capsys):
        code, _, _ = run(capsys, "gen", "--n", 10, "--lambda", 20, "--seed", 1, "--out", tmp_path / "x.el")
        assert code == 2

    def test_dary(self, tmp_path, capsys):
        out = tmp_path / "t.el"
        assert run(capsys, "gen", "--n", 20, "--plant", "dary:2,2", "--lambda", 0, "--seed", 3, "--out", out)[0] == 0
        assert len(load_edgelist(out).truth.planted_edges) == 6

    @pytest.mark.parametrize("argv", [["gen", "--n", "x"], ["gen", "--n", "5", "--lambda", "1"], ["frobnicate"], []])
    def test_usage(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2

    def test_bad_plant(self, tmp_path, capsys):
        code, _, _ = run(capsys, "gen", "--n", 10, "--lambda", 1, "--plant", "cube:3", "--out", tmp_path / "x.el")
        assert code == 2

    def test_env_seed_overrides(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("PLANTED_SEED", "9")
        run(capsys, "gen", "--n", 50, "--lambda", 1, "--seed", 1, "--out", tmp_path / "a.el")
        monkeypatch.delenv("PLANTED_SEED")
        run(capsys, "gen", "--n", 50, "--lambda", 1, "--seed", 9, "--out", tmp_path / "b.el")
        assert (tmp_path / "a.el").read_text() == (tmp_path / "b.el").read_text()


@pytest.fixture
def path_file(tmp_path, capsys):
    p = tmp_path / "p.el"
    run(capsys, "gen", "--n", 100, "--lambda", 0, "--plant", "line:5", "--seed", 1, "--out", p)
    return p


@pytest.fixture
def empty_file(tmp_path, capsys):
    p = tmp_path / "e.el"
    run(capsys, "gen", "--n", 10, "--lambda", 0, "--out", p)
    return p


class TestDetect:
    def test_kpath(self, path_file, capsys):
        code, out, _ = run(capsys, "detect", "--in", path_file, "--test", "kpath", "--K", 5, "--json")
        assert code == 0 and json.loads(out)["decision"] == "H1"

    def test_matches_library(self, path_file, capsys):
        _, out, _ = run(capsys, "detect", "--in", path_file, "--test", "components", "--K", 5)
        direct = run_test(load_edgelist(path_file).graph, "components", K=5)
        assert json.loads(out) == direct.to_dict()

    def test_star_empty(self, empty_file, capsys):
        code, out, _ = run(capsys, "detect", "--in", empty_file, "--test", "star", "--K", 1)
        assert code == 0 and json.loads(out)["decision"] == "H0"

    def test_expect(self, empty_file, capsys):
        assert run(capsys, "detect", "--in", empty_file, "--test", "star", "--K", 1, "--expect", "H0")[0] == 0
        assert run(capsys, "detect", "--in", empty_file, "--test", "star", "--K", 1, "--expect", "H1")[0] == 1

    def test_dary_needs_h(self, path_file, capsys):
        assert run(capsys, "detect", "--in", path_file, "--test", "dary", "--D", 2)[0] == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "detect", "--in", tmp_path / "nope.el", "--test", "star", "--K", 1)[0] == 2

    def test_strict_budget(self, tmp_path, capsys, monkeypatch):
        import plantedgraphs.detect as det

        p = tmp_path / "t.el"
        run(capsys, "gen", "--n", 3000, "--lambda", 2, "--plant", "dary:2,6", "--seed", 2, "--out", p)
        monkeypatch.setattr(det, "DEFAULT_TREE_BUDGET", 1)
        monkeypatch.setattr(det.dary_test, "__defaults__", (1,))
        assert run(capsys, "detect", "--in", p, "--test", "dary", "--D", 2, "--h", 6)[0] == 0
        assert run(capsys, "detect", "--in", p, "--test", "dary", "--D", 2, "--h", 6, "--strict")[0] == 3


class TestReconstructCmd:
    def test_line(self, path_file, capsys):
        code, out, _ = run(capsys, "reconstruct", "--in", path_file, "--structure", "line:5")
        d = json.loads(out)
        assert code == 0 and d["overlap"] == 5 and len(d["estimated"]) == 5

    def test_tree_unsupported(self, path_file, capsys):
        assert run(capsys, "reconstruct", "--in", path_file, "--structure", "dary:2,1")[0] == 2


class TestTheory:
    def test_lambda_d(self, capsys):
        code, out, _ = run(capsys, "theory", "lambda_d", "--D", 1)
        assert code == 0 and abs(json.loads(out)["lambda_d"] - 1) <= 1e-6

    def test_regime_error(self, capsys):
        assert run(capsys, "theory", "line_threshold", "--lambda", 2, "--n", 100)[0] == 3
        assert run(capsys, "theory", "dary_thresholds", "--D", 2, "--lambda", 4, "--n", 100)[0] == 3

    def test_markov_matches_library(self, capsys):
        _, out, _ = run(capsys, "theory", "markov_bound", "--n", 1000, "--K", 10, "--lambda", 2)
        assert json.loads(out) == json.loads(json.dumps(theory.markov_bound_E0L2(1000, 10, 2.0).to_dict()))

    def test_missing_flag(self, capsys):
        assert run(capsys, "theory", "p_star", "--D", 2)[0] == 2

    def test_eigensystem_degenerate(self, capsys):
        assert run(capsys, "theory", "eigensystem", "--lambda", 1)[0] == 2


class TestVerify:
    def test_tiny(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "tiny")
        rows = [json.loads(line) for line in out.splitlines()]
        assert code == 0 and rows and all(r["pass"] for r in rows)
        for r in rows:
            for key in ("max_abs_error", "sum_P1_residual", "E0_L_residual", "residual"):
                if key in r:
                    assert r[key] <= 1e-12


class TestSweepCmd:
    def test_writes_files(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.json"
        cfg.write_text(json.dumps({"n": 500, "lambdas": [0.5, 0.7], "sizes": [4, 6], "structure": "line",
                                   "detector": "kpath", "trials": 2, "master_seed": 1}))
        code, _, _ = run(capsys, "sweep", "--config", cfg, "--out", tmp_path / "t.csv", "--svg", tmp_path / "t.svg",
                         "--threads", 1)
        assert code == 0
        assert len((tmp_path / "t.csv").read_text().splitlines()) == 5
        assert (tmp_path / "t.svg").read_text().count("<rect") == 4

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.json"
        cfg.write_text("{not json")
        assert run(capsys, "sweep", "--config", cfg, "--out", tmp_path / "t.csv")[0] == 2
