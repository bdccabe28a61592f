import csv
import io
import json

import numpy as np
import pytest

from ncssa import cli
from ncssa.cli import main
from ncssa.verify import InequalityReport


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def gen(tmp_path, capsys, *argv, name="inst.json"):
    path = tmp_path / name
    code, _, err = run(capsys, "gen", *argv, "--out", str(path))
    assert code == 0, err
    return path


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ncssa-audit v1")
    return lines[0], list(csv.reader(io.StringIO("\n".join(lines[1:]))))


@pytest.mark.parametrize("preset,args", [
    ("mub", ["--d", "3"]), ("ptrace", []), ("cs", ["--kind", "petz"]), ("random", []),
    ("dpi", []), ("improved-dpi", []), ("petz", []),
])
def test_gen_is_deterministic(tmp_path, capsys, preset, args):
    a = gen(tmp_path, capsys, "--preset", preset, "--seed", "5", *args, name="a.json")
    b = gen(tmp_path, capsys, "--preset", preset, "--seed", "5", *args, name="b.json")
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["schema"] == "ncssa-instance" and doc["version"] == 1 and doc["preset"] == preset


def test_gen_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NCSSA_SEED", "11")
    code, out, _ = run(capsys, "gen", "--preset", "random")
    assert code == 0 and json.loads(out)["seed"] == 11


@pytest.mark.parametrize("d,expected", [("2", 0.5), ("3", 1 / 3), ("5", 0.2)])
def test_constant_flo_and_cb_on_mub(tmp_path, capsys, d, expected):
    path = gen(tmp_path, capsys, "--preset", "mub", "--d", d)
    for which in ("flo", "cb"):
        code, out, _ = run(capsys, "constant", str(path), "--constant", which)
        res = json.loads(out)
        assert code == 0
        assert res["value"] == pytest.approx(expected, abs=1e-10)
        assert res["log_inv_value"] == pytest.approx(np.log(float(d)), abs=1e-10)


def test_constant_log2(tmp_path, capsys):
    path = gen(tmp_path, capsys, "--preset", "mub", "--d", "2")
    _, out, _ = run(capsys, "constant", str(path), "--constant", "flo", "--log2")
    res = json.loads(out)
    assert res["log_base"] == "2" and res["log_inv_value"] == pytest.approx(1.0)


def test_constant_ptrace_overlap_and_bsw(tmp_path, capsys):
    path = gen(tmp_path, capsys, "--preset", "ptrace")
    code, out, _ = run(capsys, "constant", str(path), "--constant", "cb")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0, abs=1e-12)
    assert json.loads(out)["log_inv_value"] == 0.0
    code, out, _ = run(capsys, "constant", str(path), "--constant", "overlap", "--restarts", "4")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0, abs=1e-9)
    code, out, _ = run(capsys, "constant", str(path), "--constant", "bsw", "--restarts", "3")
    res = json.loads(out)
    assert res["lower"] <= res["upper"] + 1e-8


def test_constant_cs_overlap_is_one(tmp_path, capsys):
    path = gen(tmp_path, capsys, "--preset", "cs", "--kind", "mub", "--d", "3")
    code, out, _ = run(capsys, "constant", str(path), "--constant", "overlap", "--restarts", "4")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0, abs=1e-8)


def test_constant_kappa_dpi(tmp_path, capsys):
    path = gen(tmp_path, capsys, "--preset", "dpi")
    code, out, _ = run(capsys, "constant", str(path), "--constant", "kappa")
    res = json.loads(out)
    assert code == 0 and abs(res["value"]) < 1e-10 and res["quad_error"] < 1e-10


def test_constant_not_converged_exit_code(tmp_path, capsys):
    path = gen(tmp_path, capsys, "--preset", "improved-dpi")
    code, out, _ = run(capsys, "constant", str(path), "--constant", "kappa",
                       "--quad-tol", "0", "--quad-panels", "4")
    assert code == 2 and json.loads(out)["converged"] is False


def test_flo_needs_povms(tmp_path, capsys):
    path = gen(tmp_path, capsys, "--preset", "ptrace")
    code, _, err = run(capsys, "constant", str(path), "--constant", "flo")
    assert code == 1 and "$.povms" in err


@pytest.mark.parametrize("text,field", [
    ("{not json", "line 1 column 2"),
    ('{"schema": "other", "version": 1}', "$.schema"),
    ('{"schema": "ncssa-instance", "version": 7}', "$.version"),
    ('{"schema": "ncssa-instance", "version": 1}', "instance has no channels"),
    ('{"schema": "ncssa-instance", "version": 1, "povms": {"P": {"effects": [[[[1, 0]]]]}}}', "$.povms.Q"),
])
def test_schema_errors(tmp_path, capsys, text, field):
    path = tmp_path / "bad.json"
    path.write_text(text)
    code, _, err = run(capsys, "constant", str(path), "--constant", "cb")
    assert code == 1 and field in err


def test_non_cptp_channel_rejected(tmp_path, capsys):
    path = gen(tmp_path, capsys, "--preset", "ptrace")
    doc = json.loads(path.read_text())
    doc["channels"]["phi_A"]["coord"] = (2 * np.array(doc["channels"]["phi_A"]["coord"])).tolist()
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "constant", str(path), "--constant", "cb")
    assert code == 1 and "phi_A" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "constant", str(tmp_path / "nope.json"), "--constant", "cb")
    assert code == 1 and "nope.json" in err


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["constant"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["gen"])
    assert e.value.code == 1


def test_gen_bad_mub_dimension(capsys):
    code, _, err = run(capsys, "gen", "--preset", "mub", "--d", "4")
    assert code == 1 and "prime" in err


def test_audit_a(capsys):
    code, out, _ = run(capsys, "audit", "--theorem", "A", "--seeds", "5")
    header, rows = read_csv(out)
    assert code == 0 and "theorem=A" in header and "log_base=e" in header
    assert rows[0] == ["seed", "dims", "lhs", "rhs", "constant", "gap", "pass", "wall_ms"]
    assert [r[0] for r in rows[1:-1]] == ["0", "1", "2", "3", "4"]
    summary = rows[-1]
    assert summary[0] == "summary" and summary[6] == "true"
    assert float(summary[5]) == pytest.approx(min(float(r[5]) for r in rows[1:-1]))


def test_audit_log2_scales_entropies(capsys):
    _, out_e, _ = run(capsys, "audit", "--theorem", "A", "--seeds", "2", "--seed", "3")
    _, out_2, _ = run(capsys, "audit", "--theorem", "A", "--seeds", "2", "--seed", "3", "--log2")
    (_, re), (h2, r2) = read_csv(out_e), read_csv(out_2)
    assert "log_base=2" in h2
    assert float(r2[1][2]) == pytest.approx(float(re[1][2]) / np.log(2))


def test_audit_zero_seeds(capsys):
    code, out, _ = run(capsys, "audit", "--theorem", "B", "--seeds", "0")
    _, rows = read_csv(out)
    assert code == 0 and len(rows) == 2 and rows[1][0] == "summary"


def test_audit_b_and_c(capsys, tmp_path):
    code, out, _ = run(capsys, "audit", "--theorem", "B", "--seeds", "2")
    assert code == 0
    path = tmp_path / "c.csv"
    code, out, _ = run(capsys, "audit", "--theorem", "C", "--seeds", "2", "--preset", "dpi",
                       "--out", str(path))
    assert code == 0 and out == "" and path.read_text().count("\n") == 5


def test_audit_parallel_matches_serial(capsys):
    _, serial, _ = run(capsys, "audit", "--theorem", "A", "--seeds", "4")
    _, par, _ = run(capsys, "audit", "--theorem", "A", "--seeds", "4", "--jobs", "2")
    strip = lambda t: [r[:7] for r in read_csv(t)[1]]
    assert strip(serial)[:-1] == strip(par)[:-1]


def test_audit_dimension_cap(capsys):
    code, _, err = run(capsys, "audit", "--theorem", "A", "--seeds", "1", "--dims", "3,3,3,9")
    assert code == 1 and "64" in err


def test_audit_failure_exit_code(capsys, monkeypatch):
    def failing(*a, **k):
        return InequalityReport.build("A", 0.0, 1.0, 1.0, seed=k.get("seed"))
    monkeypatch.setattr(cli, "check_theorem_A", failing)
    code, out, _ = run(capsys, "audit", "--theorem", "A", "--seeds", "2")
    assert code == 3 and read_csv(out)[1][-1][6] == "false"
