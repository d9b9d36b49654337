import json
import subprocess
import sys

import pytest

from percolab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_path_t15(capsys):
    params = json.dumps({"f": "reach(s,v)", "g": "R(t;v)"})
    code, out, _ = run(capsys, "check", "--theorem", "T1.5", "--graph", "fixture:path", "--params", params)
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "holds" and rep["slack"] == "1/9"


def test_check_t11_slack_and_float_screen(capsys):
    params = json.dumps({"A": "reach(s,v)", "B": "reach(s,v)", "X": "t", "Y": "t"})
    code, out, _ = run(capsys, "--backend", "float", "check", "--theorem", "T1.1", "--graph", "fixture:path",
                       "--params", params)
    rep = json.loads(out)
    assert code == 0 and rep["slack"] == "1/8" and float(rep["float_slack"]) == 0.125


def test_counterexample_exits_zero(capsys):
    code, out, _ = run(capsys, "check", "--theorem", "CEX-directed")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "violation" and rep["slack"] == "-1/16"


def test_bad_input_exits_one(capsys):
    params = json.dumps({"f": "~reach(s,v)", "g": "R(t;v)"})
    code, _, err = run(capsys, "check", "--theorem", "T1.5", "--graph", "fixture:path", "--params", params)
    assert code == 1 and err.startswith("error: HypothesisError")
    code, _, err = run(capsys, "check", "--theorem", "T1.4", "--graph", "fixture:nope", "--params", "{}")
    assert code == 1 and "GraphError" in err
    code, _, _ = run(capsys, "check", "--theorem", "T1.4", "--params", "{}")
    assert code == 1


def test_directed_input_rejected_for_undirected_claim(capsys):
    params = json.dumps({"f": "reach(s,a)", "g": "reach(t,a)"})
    code, _, _ = run(capsys, "check", "--theorem", "T1.4", "--graph", "fixture:counterexample",
                     "--params", params)
    assert code == 1


def test_fuzz_is_byte_identical(capsys, tmp_path):
    argv = ["fuzz", "--theorem", "T1.4", "--theorem", "T2.5:q=2", "--count", "15", "--seed", "4"]
    code1, out1, _ = run(capsys, *argv, "--json", str(tmp_path / "a.json"))
    code2, out2, _ = run(capsys, "--json", str(tmp_path / "b.json"), *argv)
    assert code1 == code2 == 0 and out1 == out2
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    _, out3, _ = run(capsys, *argv[:-1], "5")
    assert out3 != out1


def test_fuzz_zero_count(capsys):
    code, out, _ = run(capsys, "fuzz", "--theorem", "T1.4", "--count", "0")
    data = json.loads(out)
    assert code == 0 and data["summaries"][0]["instances"] == 0 and data["violations"] == []


def test_fuzz_false_variant_passes_by_violating(capsys):
    code, out, _ = run(capsys, "fuzz", "--theorem", "F-T1.4-directed", "--count", "30", "--seed", "1")
    data = json.loads(out)
    assert code == 0 and data["violations"]


def test_mcmc(capsys):
    code, out, _ = run(capsys, "mcmc", "--graph", "fixture:path", "--q", "2", "--steps", "4000",
                       "--association", "1")
    data = json.loads(out)
    assert code == 0 and data["diagnostics"]["stationarity_residual"] == "0"
    assert all(row["within_3sd"] for row in data["bands"])
    code, out, _ = run(capsys, "mcmc", "--mode", "config", "--graph", "fixture:path", "--exact", "--monotone", "1")
    data = json.loads(out)
    assert code == 0 and data["monotone_clusters"]["holds"] and not data["monotone_omega"]["holds"]


def test_fuzzy(capsys):
    code, out, _ = run(capsys, "fuzzy", "--graph", "fixture:path", "--f", "support_contains(s;v)")
    data = json.loads(out)
    assert code == 0 and data["coupling"]["equal"] and data["fact_c"]["holds"]
    code, _, _ = run(capsys, "fuzzy", "--graph", "fixture:path", "--q", "3")
    assert code == 1
    code, out, _ = run(capsys, "fuzzy", "--graph", "fixture:edge", "--q", "1", "--alpha", "1/2",
                       "--beta", "1/2")
    assert code == 0 and "skipped" in json.loads(out)["fact_c"]


def test_contact(capsys, tmp_path):
    spec = {"sites": ["a", "b", "c"], "delta": {"a": "1", "b": "1", "c": "1"},
            "lambda": [["a", "b", "1"], ["b", "a", "1"], ["b", "c", "1"], ["c", "b", "1"]]}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    assert run(capsys, "contact", "--spec", str(path), "--W", "b")[0] == 0
    code, out, _ = run(capsys, "contact", "--spec", str(path), "--W", "b", "--condition-on", "1")
    assert code == 0 and not json.loads(out)["association"]["holds"]
    assert run(capsys, "contact", "--spec", str(path), "--check", "discretization")[0] == 0
    assert run(capsys, "contact", "--spec", str(path), "--check", "zero-sets", "--K", "a,b", "--L", "b,c")[0] == 0
    code, out, _ = run(capsys, "contact", "--spec", json.dumps(spec), "--check", "survival", "--t", "0")
    assert code == 0 and json.loads(out)["marginals"]["a"] == "1.0"


def test_report_command(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "fuzz", "--theorem", "T1.4", "--count", "5", "--all-reports", "--json", str(a))
    run(capsys, "fuzz", "--theorem", "T1.4", "--count", "5", "--start", "3", "--all-reports", "--json", str(b))
    code, out, _ = run(capsys, "report", str(a), str(b), "--csv", str(tmp_path / "t.csv"))
    table = json.loads(out)["table"]
    assert code == 0 and table[0]["instances"] == 8
    assert (tmp_path / "t.csv").read_text().splitlines()[0].startswith("theorem,expect")
    cex = tmp_path / "cex.json"
    run(capsys, "check", "--theorem", "CEX-directed", "--json", str(cex))
    data = json.loads(cex.read_text())
    data["expect"] = "hold"
    cex.write_text(json.dumps(data))
    assert run(capsys, "report", str(cex))[0] == 2


def test_entry_point():
    proc = subprocess.run([sys.executable, "-m", "percolab.cli", "check", "--theorem", "CEX-directed"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["lhs"] == "1/8"


def test_help_and_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
