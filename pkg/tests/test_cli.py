import json
import subprocess
import sys

import pytest

from kahlerkit.cli import EXIT_NONFINITE, SCENARIO_SCHEMA, execute, main
from kahlerkit.kahler import CONVENTIONS
from kahlerkit.obstruction import builtin_embedding
from kahlerkit.series import BiSeries


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out else None), out.err


def test_einstein_report(capsys):
    code, doc, _ = run_cli(["einstein", "--model", "fubini_study", "--dim", "2", "--order", "6", "--no-timestamp"], capsys)
    assert code == 0
    assert doc["schema"] == "1"
    assert doc["conventions"] == CONVENTIONS
    assert doc["result"]["einstein"]["lambda"] == "6/1"
    assert "timestamp" not in doc


def test_timestamp_present_by_default(capsys):
    _, doc, _ = run_cli(["model", "flat"], capsys)
    assert "timestamp" in doc


def test_bochner_of_scaled_norm(tmp_path, capsys):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(BiSeries.norm_squared(1, 4).scale(2).to_dict()))
    code, doc, _ = run_cli(["bochner", "--series", str(path), "--no-timestamp"], capsys)
    assert code == 0
    assert BiSeries.from_dict(doc["result"]["normal_form"]) == BiSeries.norm_squared(1, 4)


def test_expect_einstein_verdict(capsys):
    code, doc, err = run_cli(["pullback", "--model", "fubini_study", "--dim", "2", "--embedding", "cubic", "--expect-einstein"], capsys)
    assert code == 3
    assert doc["result"]["einstein"]["is_einstein_to_order"] is False
    assert "not Kahler-Einstein" in err


def test_schema_violation(tmp_path, capsys):
    path = tmp_path / "sc.json"
    path.write_text(json.dumps({"op": "einstein", "model": "flat", "colour": "red"}))
    code, doc, err = run_cli(["run", str(path)], capsys)
    assert code == 4 and doc is None
    assert "colour" in err


def test_precondition_violation(capsys):
    code, _, err = run_cli(["factor-check", "--model", "product_fs", "-r", "1", "-s", "2"], capsys)
    assert code == 2
    assert "precondition" in err


def test_nonfinite_float_output():
    s = BiSeries.norm_squared(1, 4).to_float()
    doc = s.to_dict()
    doc["terms"][0]["re"] = "inf"
    _, code, _ = execute({"op": "expand", "series": doc})
    assert code == EXIT_NONFINITE


def test_float_mode_records_tolerance(capsys):
    _, doc, _ = run_cli(["einstein", "--model", "hyperbolic", "--mode", "float", "--tol", "1e-10", "--no-timestamp"], capsys)
    assert doc["settings"] == {"mode": "float", "tol": 1e-10}
    assert doc["result"]["einstein"]["tol"] == 1e-10


def test_probe_with_embedding_file(tmp_path, capsys):
    emb = tmp_path / "conic.json"
    emb.write_text(json.dumps(builtin_embedding("conic").to_dict()))
    csv = tmp_path / "rows.csv"
    code, doc, _ = run_cli(
        ["probe", "--model", "fubini_study", "--dim", "2", "--embedding-file", str(emb), "--radii", "1,2,4",
         "--samples", "2000", "--seed", "5", "--csv", str(csv), "--no-timestamp"],
        capsys,
    )
    assert code == 0
    assert doc["result"]["probe"]["seed"] == 5
    assert len(doc["result"]["probe"]["rows"]) == 3
    assert doc["result"]["eqforms_residual"] < 1e-10
    assert csv.read_text().count("\n") == 4


@pytest.mark.parametrize(
    "args",
    [
        ["expand", "--model", "fubini_study", "--dim", "1", "--function", "exp"],
        ["diastasis", "--model", "flat", "--dim", "2"],
        ["bergman", "--n", "2", "--k", "2", "--order", "5"],
        ["conditions", "--n", "1", "--kmax", "2"],
        ["torus"],
        ["factor-check", "--model", "fubini_study", "--dim", "2", "--order", "10"],
    ],
)
def test_subcommands_succeed(args, capsys):
    code, doc, _ = run_cli(args + ["--no-timestamp"], capsys)
    assert code == 0
    assert doc["op"] == args[0]


def test_run_is_byte_identical(tmp_path):
    sc = tmp_path / "probe.json"
    sc.write_text(json.dumps({"op": "probe", "model": "fubini_study", "dim": 2, "embedding": "conic", "radii": [1, 2], "samples": 1000, "seed": 11}))
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        subprocess.run([sys.executable, "-m", "kahlerkit", "run", str(sc), "--no-timestamp", "--out", str(out)], check=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_schema_rejects_unknown_op():
    _, code, _ = execute({"op": "integrate"})
    assert code == 4
    assert SCENARIO_SCHEMA["additionalProperties"] is False


def test_report_accepted_as_series_input(tmp_path, capsys):
    out = tmp_path / "hyp.json"
    assert main(["model", "hyperbolic", "--order", "6", "--out", str(out)]) == 0
    code, doc, _ = run_cli(["bochner", "--series", str(out), "--mode", "float", "--no-timestamp"], capsys)
    assert code == 0 and doc["result"]["is_bochner_form"]


def test_malformed_series_is_precondition(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 1}')
    code, _, err = run_cli(["diastasis", "--series", str(bad)], capsys)
    assert code == 2 and "malformed" in err
