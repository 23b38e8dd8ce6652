import csv
import io
import json
import math
from fractions import Fraction as F

import pytest

from coinflip import build_coinflip1, treeio
from coinflip.cli import FIG1_HEADER, FIG2_HEADER, main

SYM = "7/16,7/16,3/4,3/4,3/4,3/4"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def cf1_file(tmp_path):
    path = tmp_path / "cf1.json"
    treeio.save(build_coinflip1(F(1, 2), F(1, 2), F(1), F(1)), path)
    return str(path)


class TestCheck:
    def test_infeasible_exit_2(self, capsys):
        code, out, _ = run(capsys, "check", "--spec", "0.5,0.5,0.5,0.5,0.5,0.5", "--setting", "classical")
        assert code == 2 and "infeasible" in out

    def test_quantum_feasible(self, capsys):
        code, out, _ = run(capsys, "check", "--spec", "0.5,0.5,0.7072,0.7072,0.7072,0.7072",
                           "--setting", "quantum", "--json")
        assert code == 0 and json.loads(out)["feasible"] is True

    def test_invalid_spec_exit_1(self, capsys):
        code, _, err = run(capsys, "check", "--spec", "0.6,0.6,1,1,1,1")
        assert code == 1 and "p00 + p11" in err

    @pytest.mark.parametrize("spec", ["0.5,0.5,x,1,1,1", "1,2,3", "1/0,0,1,1,1,1"])
    def test_malformed_numbers(self, capsys, spec):
        assert run(capsys, "check", "--spec", spec)[0] == 1

    def test_rational_json(self, capsys):
        code, out, _ = run(capsys, "check", "--spec", SYM, "--json")
        doc = json.loads(out)
        assert code == 0 and doc["checks"][2]["lhs"] == doc["checks"][2]["rhs"] == "7/8"

    def test_env_mode(self, capsys, monkeypatch):
        monkeypatch.setenv("CF_MODE", "float")
        _, out, _ = run(capsys, "check", "--spec", SYM, "--json")
        assert json.loads(out)["checks"][2]["lhs"] == 0.875
        monkeypatch.setenv("CF_MODE", "bogus")
        assert run(capsys, "check", "--spec", SYM)[0] == 1


class TestSynthesizeAnalyze:
    def test_round_trip(self, capsys, tmp_path):
        out_path = tmp_path / "t.json"
        code, _, _ = run(capsys, "synthesize", "--spec", SYM, "--out", str(out_path))
        assert code == 0
        code, out, _ = run(capsys, "analyze", str(out_path), "--json")
        exact = json.loads(out)["result"]["exact"]
        assert (exact["p00"], exact["p11"]) == ("7/16", "7/16")
        assert {exact[k] for k in ("force_a0", "force_a1", "force_b0", "force_b1")} == {"3/4"}

    def test_weak_coin_flip_quantum(self, capsys, tmp_path):
        out_path = tmp_path / "w.json"
        code, _, _ = run(capsys, "synthesize", "--spec", "1/2,1/2,1,51/100,51/100,1",
                         "--setting", "quantum", "--out", str(out_path))
        assert code == 0 and '"kind": "wcf"' in out_path.read_text()

    def test_infeasible_writes_nothing(self, capsys, tmp_path):
        out_path = tmp_path / "none.json"
        code, _, _ = run(capsys, "synthesize", "--spec", "1/2,1/2,1/2,1/2,1/2,1/2", "--out", str(out_path))
        assert code == 2 and not out_path.exists()

    def test_analyze_cf1(self, capsys, cf1_file):
        code, out, _ = run(capsys, "analyze", cf1_file, "--json")
        r = json.loads(out)["result"]
        assert code == 0
        assert (r["force_a0"], r["force_a1"], r["force_b0"], r["force_b1"]) == (1, 1, 0.5, 0.5)

    def test_oracle(self, capsys, cf1_file):
        code, out, _ = run(capsys, "analyze", cf1_file, "--oracle")
        assert code == 0 and "oracle: exact match" in out

    def test_oracle_guard(self, capsys, cf1_file):
        code, _, err = run(capsys, "analyze", cf1_file, "--oracle", "--limit", "1")
        assert code == 1 and "strategies" in err

    def test_float_mode(self, capsys, cf1_file):
        _, out, _ = run(capsys, "analyze", cf1_file, "--mode", "float", "--json")
        assert json.loads(out)["result"]["mode"] == "float"

    def test_malformed_json_location(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"format": "cf-tree/1",\n  "root": [}\n')
        code, _, err = run(capsys, "analyze", str(bad))
        assert code == 1 and "line 2" in err

    def test_malformed_tree_path(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"format": "cf-tree/1", "root": {"kind": "send", "sender": "bob",
                                   "branches": [{"msg": "0", "prob": 1, "child": {"kind": "nope"}}]}}))
        code, _, err = run(capsys, "analyze", str(bad))
        assert code == 1 and "root.branches[0].child" in err

    def test_missing_file(self, capsys):
        assert run(capsys, "analyze", "/nonexistent/tree.json")[0] == 1

    def test_bad_probabilities(self, capsys, tmp_path):
        bad = tmp_path / "sum.json"
        bad.write_text(json.dumps({"format": "cf-tree/1", "root": {"kind": "send", "sender": "alice",
                                   "branches": [{"msg": "0", "prob": 0.5, "child": {"kind": "leaf", "output": "0"}},
                                                {"msg": "1", "prob": 0.6, "child": {"kind": "leaf", "output": "1"}}]}}))
        code, _, err = run(capsys, "analyze", str(bad), "--mode", "float")
        assert code == 1 and "branch sum 1.1 at node path []" in err


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


class TestSweep:
    def test_figure2(self, capsys):
        code, out, _ = run(capsys, "sweep", "--figure", "2", "--step", "0.01")
        rows = read_csv(out)
        assert code == 0 and rows[0] == FIG2_HEADER == ["a", "definitional", "quantum", "classical"]
        assert len(rows) == 102
        first = [float(v) for v in rows[1]]
        assert first[:2] == [0.0, 0.5] and first[3] == 1.0
        assert first[2] == pytest.approx(0.70711, abs=1e-5)
        half = [float(v) for v in rows[51]]
        assert half[0] == 0.5 and half[2] == half[3] == 0.5

    def test_figure1(self, capsys):
        code, out, _ = run(capsys, "sweep", "--figure", "1", "--step", "1/16")
        rows = read_csv(out)
        assert rows[0] == FIG1_HEADER
        row = next(r for r in rows[1:] if float(r[0]) == 9 / 16)
        assert float(row[1]) == 5 / 16 and float(row[2]) == 7 / 16
        for r in rows[1:]:
            p00 = float(r[0])
            if p00 > 9 / 16:
                # no coin flip with p00 above p0s*ps0 exists in either setting
                assert r[1] == r[2] == "" and float(r[3]) == min(3 / 4, 1 - p00)
                continue
            assert float(r[1]) == pytest.approx(min(9 / 16, 7 / 8 - p00))
            assert float(r[2]) == pytest.approx(min(9 / 16, 1 - p00))

    def test_out_file_lf(self, capsys, tmp_path):
        path = tmp_path / "f.csv"
        assert run(capsys, "sweep", "--figure", "2", "--step", "0.5", "--out", str(path))[0] == 0
        data = path.read_bytes()
        assert b"\r" not in data and data.startswith(b"a,definitional,quantum,classical\n")

    @pytest.mark.parametrize("step", ["0", "0.6", "abc"])
    def test_bad_step(self, capsys, step):
        assert run(capsys, "sweep", "--figure", "2", "--step", step)[0] == 1

    def test_stable(self, capsys):
        assert run(capsys, "sweep", "--figure", "1")[1] == run(capsys, "sweep", "--figure", "1")[1]


class TestSimulate:
    def test_honest(self, capsys, cf1_file):
        code, out, _ = run(capsys, "simulate", cf1_file, "--trials", "100000", "--seed", "42")
        doc = json.loads(out)
        dist, ref = doc["distribution"], doc["reference"]["zero"]
        assert code == 0 and dist["trials"] == 100000 and dist["seed"] == 42
        assert abs(dist["zero"] / 1e5 - 0.5) <= 3 * math.sqrt(0.25 / 1e5)
        assert ref["value"] == 0.5

    def test_script(self, capsys, cf1_file, tmp_path):
        script = tmp_path / "s.json"
        script.write_text(json.dumps({"party": "alice", "moves": [{"path": [], "msg": "0"}]}))
        code, out, _ = run(capsys, "simulate", cf1_file, "--trials", "2000", "--script", str(script))
        dist = json.loads(out)["distribution"]
        assert code == 0 and dist["zero"] == 2000

    def test_script_mismatch(self, capsys, cf1_file, tmp_path):
        script = tmp_path / "s.json"
        script.write_text(json.dumps({"party": "bob", "moves": []}))
        code, _, err = run(capsys, "simulate", cf1_file, "--script", str(script), "--trials", "10")
        assert code == 1 and "no decision" in err

    def test_zero_trials(self, capsys, cf1_file):
        assert run(capsys, "simulate", cf1_file, "--trials", "0")[0] == 1

    def test_deterministic(self, capsys, cf1_file):
        first = run(capsys, "simulate", cf1_file, "--trials", "500", "--seed", "9")[1]
        assert run(capsys, "simulate", cf1_file, "--trials", "500", "--seed", "9")[1] == first


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys)[0] == 1
