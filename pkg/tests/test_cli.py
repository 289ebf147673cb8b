import json
import subprocess
import sys

import pytest

from qverify.catalog import registry
from qverify.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("argv, code", [
    (["eval", "A", "--alpha", "1", "--a", "0", "--q", "0.3", "--t", "1"], 0),
    (["eval", "poch", "--a", "0.3", "--q", "0.5", "--n", "0"], 0),
    (["eval", "1psi1", "--a", "0.9", "--b", "0.1", "--q", "0.4", "--z", "0.05"], 3),
    (["eval", "2phi1", "a=0.3", "b=0.5", "c=0.4", "q=0.4", "z=1.5"], 3),
    (["eval", "poch-inf", "--a", "0.3", "--q", "0.95", "--max-terms", "20"], 2),
    (["eval", "poch", "--a", "0.3", "--q", "0.5", "--n", "2", "--max-terms", "5"], 64),
    (["eval", "nope", "--a", "1"], 64),
    (["eval", "poch", "--a", "0.3+", "--q", "0.5", "--n", "2"], 64),
    (["eval", "poch", "--a", "0.3"], 64),
    (["verify", "--ids", "RR1,RR2", "--samples", "4", "--seed", "42"], 0),
    (["verify", "--ids", "RR1", "--samples", "2", "--perturb", "1e-10"], 1),
    (["verify", "--ids", "NOPE"], 64),
    (["oracle", "--r", "2", "--N", "8", "--a", "0.3", "--q", "0.4"], 0),
    (["oracle", "--r", "7", "--N", "8", "--a", "0.3", "--q", "0.4"], 64),
    (["oracle", "--r", "2", "--N", "65", "--a", "0.3", "--q", "0.4"], 64),
    (["list"], 0),
    ([], 64),
    (["verify", "--format", "xml"], 64),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_eval_rogers_ramanujan_value(capsys):
    code, out, _ = run(capsys, "eval", "A", "--alpha", "1", "--a", "0", "--q", "0.3", "--t", "1", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["converged"]
    # product side of the first Rogers-Ramanujan identity
    import mpmath
    with mpmath.workprec(300):
        q = mpmath.mpf("0.3")
        rr = 1 / (mpmath.qp(q, q ** 5) * mpmath.qp(q ** 4, q ** 5))
        assert abs(mpmath.mpf(doc["value"]["re"]) - rr) < mpmath.mpf(10) ** -30


def test_eval_region_message(capsys):
    _, _, err = run(capsys, "eval", "1psi1", "--a", "0.9", "--b", "0.1", "--q", "0.4", "--z", "0.05")
    assert "|b/a|" in err


def test_verify_report_schema(capsys):
    code, out, _ = run(capsys, "verify", "--ids", "RR1,RR2", "--samples", "4", "--seed", "42", "--jobs", "1")
    doc = json.loads(out)
    assert set(doc) == {"config", "started_at", "records", "summary"}
    assert doc["summary"]["pass"] == 8
    rec = doc["records"][0]
    for key in ("id", "params", "lhs", "rhs", "abs_residual", "rel_residual", "verdict", "terms", "wall_ms"):
        assert key in rec
    assert isinstance(rec["lhs"]["re"], str) and rec["wall_ms"] is None


def test_verify_timings_flag(capsys):
    _, out, _ = run(capsys, "verify", "--ids", "RR1", "--samples", "1", "--timings")
    assert json.loads(out)["records"][0]["wall_ms"] is not None


def test_verify_csv_and_text(capsys):
    _, out, _ = run(capsys, "verify", "--ids", "RR1", "--samples", "2", "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0].startswith("id,index,params") and len(lines) == 3
    _, out, _ = run(capsys, "verify", "--ids", "RR1", "--samples", "2", "--format", "text")
    assert "pass 2" in out


def test_oracle_rows(capsys):
    code, out, _ = run(capsys, "oracle", "--r", "2", "--N", "8", "--a", "0", "--q", "0.4", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 9
    for row in rows[1::2]:
        assert float(row["computed"]["re"]) == 0 and float(row["computed"]["im"]) == 0


def test_list_formats(capsys):
    code, out, _ = run(capsys, "list")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == len(registry())
    assert any(line.startswith("F7\t") and "symmetry" in line for line in lines)
    _, out, _ = run(capsys, "list", "--format", "json")
    data = json.loads(out)
    assert isinstance(data, list) and [d["id"] for d in data] == [s.id for s in registry()]


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# comment\nseed = 11\nsamples = 2\nprecision = 240\n")
    _, out, _ = run(capsys, "verify", "--ids", "RR1", "--config", str(cfg))
    doc = json.loads(out)
    assert doc["config"]["seed"] == 11 and doc["config"]["samples_per_id"] == 2
    assert doc["config"]["context"]["precision_bits"] == 240
    _, out, _ = run(capsys, "verify", "--ids", "RR1", "--config", str(cfg), "--seed", "12")
    assert json.loads(out)["config"]["seed"] == 12


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.conf"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "list", "--config", str(cfg))[0] == 64
    assert run(capsys, "list", "--config", str(tmp_path / "missing.conf"))[0] == 64


def test_out_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", "--ids", "RR1", "--samples", "1", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["summary"]["total"] == 1


def test_all_ids_reachable(capsys):
    _, out, _ = run(capsys, "verify", "--ids", "all", "--samples", "1", "--no-confirm", "--seed", "2")
    doc = json.loads(out)
    assert [r["id"] for r in doc["records"]] == [s.id for s in registry()]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qverify", "list", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)
