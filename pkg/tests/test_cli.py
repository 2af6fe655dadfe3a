import json
import subprocess
import sys

import pytest

from scatterlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_complete_check_round_trip(tmp_path, capsys):
    out = tmp_path / "d.json"
    svg = tmp_path / "d.svg"
    code, _, _ = run(capsys, "complete", "--order", "6", "--out", str(out), "--svg", str(svg))
    assert code == 0
    d = json.loads(out.read_text())
    nontrivial = [w for w in d["walls"] if w["log_theta"]["terms"]]
    assert len(nontrivial) == 3
    assert sorted(w["support"] for w in nontrivial) == ["line", "line", "ray"]
    assert svg.read_text().startswith("<svg")
    code, text, _ = run(capsys, "check", str(out))
    assert code == 0 and json.loads(text)["consistent"] is True


def test_outputs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(capsys, "verify", "--order", "3", "--method", "montecarlo", "--seed", "5", "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_inconsistent_diagram_exits_1(tmp_path, capsys):
    out = tmp_path / "d.json"
    run(capsys, "complete", "--order", "3", "--out", str(out))
    d = json.loads(out.read_text())
    d["walls"] = [w for w in d["walls"] if w["support"] == "line"]
    out.write_text(json.dumps(d))
    code, text, _ = run(capsys, "check", str(out))
    assert code == 1 and json.loads(text)["consistent"] is False


def test_product_of_empty_diagram_is_identity(capsys):
    code, text, _ = run(capsys, "product", "--order", "3")
    assert code == 0
    assert json.loads(text) == {"identity": True, "log": {"order": 3, "terms": []}}


@pytest.mark.parametrize(
    "content,code_name",
    [("not json", "invalid_json"), ('{"order": 2}', "schema_violation"), ('{"order": 2, "walls": [{"x": 1}]}', "schema_violation")],
)
def test_input_errors_are_machine_readable(tmp_path, capsys, content, code_name):
    p = tmp_path / "bad.json"
    p.write_text(content)
    code, _, err = run(capsys, "check", str(p))
    assert code == 2
    assert json.loads(err)["error"] == code_name


def test_missing_file_and_bad_flags(capsys):
    assert run(capsys, "check", "/nonexistent/d.json")[0] == 2
    assert run(capsys, "complete", "--order", "0")[0] == 2
    code, _, err = run(capsys, "asymptotics", "--hbar", "0.1", "0.2")
    assert code == 2 and json.loads(err)["error"] == "invariant_violation"


def test_complete_from_input_file(tmp_path, capsys):
    inputs = tmp_path / "in.json"
    run(capsys, "complete", "--order", "4", "--preset", "doubled", "--out", str(tmp_path / "full.json"))
    full = json.loads((tmp_path / "full.json").read_text())
    full["walls"] = [w for w in full["walls"] if w["support"] == "line"]
    inputs.write_text(json.dumps(full))
    code, text, _ = run(capsys, "complete", "--order", "4", "--input", str(inputs))
    assert code == 0
    assert len(json.loads(text)["walls"]) == 5


def test_trees_and_verify(capsys):
    code, text, _ = run(capsys, "trees", "--order", "2")
    assert code == 0 and [t["tree"] for t in json.loads(text)["trees"]][-1] == "[1.1.1 2.1.1]"
    code, text, _ = run(capsys, "verify", "--order", "3", "--strict")
    assert code == 0 and json.loads(text)["snapped_match"]


def test_asymptotics_outputs(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "asymptotics", "--order", "2", "--hbar", "0.2", "0.1", "0.05", "--out", str(out))
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "hbar,region,sup_error" and len(rows) == 10
    summary = json.loads((tmp_path / "sweep.summary.json").read_text())
    assert "slope" in summary["single_wall"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "scatterlab", "product", "--order", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["identity"] is True
