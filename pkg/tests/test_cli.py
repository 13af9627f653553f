import csv
import io
import json

from martcob.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_validate_fixture(capsys):
    code, out = run(capsys, "validate", "--system", "m3xb2")
    assert code == 0
    assert json.loads(out)["status"] == "ok"


def test_solve_each_method(capsys):
    for method in ("direct", "series", "cesaro"):
        code, out = run(capsys, "solve", "--system", "b2", "--function", "b2_pair",
                        "--method", method, "--N", "8")
        assert code == 0, out
        assert json.loads(out)["method"] == method


def test_solve_rejects_constant(tmp_path, capsys):
    p = tmp_path / "one.json"
    p.write_text(json.dumps({"window": [0], "table": ["1"]}))
    code, out = run(capsys, "solve", "--system", "b2", "--function", str(p))
    assert code == 4


def test_parse_errors(tmp_path, capsys):
    assert run(capsys, "solve", "--bogus")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "solve", "--system", "b2", "--function", str(bad))[0] == 2
    assert run(capsys, "solve", "--system", "nowhere")[0] == 2


def test_invalid_factor_exit_3(tmp_path, capsys):
    p = tmp_path / "sys.json"
    p.write_text(json.dumps({"factors": [{"kind": "bernoulli", "probs": ["1/2", "1/3"]}]}))
    assert run(capsys, "validate", "--system", str(p))[0] == 3


def test_decompose_and_variance(capsys):
    code, out = run(capsys, "decompose", "--system", "b2xb2", "--function", "b2xb2_example")
    assert code == 0
    assert json.loads(out)["flags"]["reassembly_ok"] is True
    code, out = run(capsys, "variance", "--system", "b2", "--function", "b2_pair", "--N", "3")
    assert code == 0


def test_sums_csv(capsys):
    code, out = run(capsys, "sums", "--system", "b2xb2", "--function", "b2xb2_example",
                    "--N", "2", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:2] == ["N1", "N2"]


def test_simulate_out_file(tmp_path, capsys):
    out = tmp_path / "mc.json"
    code, _ = run(capsys, "simulate", "--system", "b2", "--function", "b2_pair",
                  "--N", "8", "--samples", "20000", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["pass"] is True


def test_check_fixtures(capsys):
    code, out = run(capsys, "check", "--samples-check", "2")
    assert code == 0, out
