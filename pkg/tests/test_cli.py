import json
import os
from pathlib import Path

import pytest

from deltabose import cli
from deltabose.cli import JobSpec, main, parse_record_csv

GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# golden files: regenerate only on a deliberate schema change
GOLDEN_CASES = [
    ("eval_n1_tw.csv", "eval --n 1 --t 1 --x 0 --y 0 --kappa 0 --method tw --format csv"),
    ("eval_zero_point_n2.json", "eval --n 2 --t 1 --zero-point --kappa 1"),
    ("compare_n2_attractive.csv", "compare --x 0,0.4 --y 0.1,0.2 --t 0.5 --kappa 1 --methods thm1,thm2,partition,pde --format csv"),
    ("sweep_t.dat", "sweep --x 0,0.4 --y 0.1,0.2 --t 0.5 --kappa 1 --methods thm2,thm1 --param t --values 0.5,1,2 --format csv"),
]


@pytest.mark.parametrize("name,argv", GOLDEN_CASES)
def test_golden(name, argv, tmp_path):
    out = tmp_path / name
    assert main(argv.split() + ["-o", str(out)]) == 0
    assert out.read_bytes() == (GOLDEN / name).read_bytes()


def test_eval_single_particle_value(capsys):
    code, out, _ = run("eval --n 1 --t 1 --x 0 --y 0 --kappa 0 --method tw".split(), capsys)
    assert code == 0
    assert json.loads(out)["results"][0]["value_re"] == pytest.approx(0.2820947918, rel=1e-10)


def test_zero_point_matches_thm2(capsys):
    _, a, _ = run("eval --n 2 --t 1 --zero-point --kappa 1".split(), capsys)
    _, b, _ = run("eval --x 0,0 --y 0,0 --t 1 --kappa 1 --method thm2".split(), capsys)
    va, vb = json.loads(a)["results"][0]["value_re"], json.loads(b)["results"][0]["value_re"]
    assert va > 0 and va == pytest.approx(vb, rel=1e-9)


def test_unordered_x_is_exit_2(capsys):
    code, out, err = run("eval --x 0.5,0 --y 0,0 --t 1 --kappa 1".split(), capsys)
    assert code == 2 and out == ""
    assert "ordered sector" in err


def test_method_sign_mismatch_lists_allowed(capsys):
    code, _, err = run("compare --x 0,0 --y 0,0 --t 1 --kappa -1 --methods tw,thm2".split(), capsys)
    assert code == 2
    assert "allowed" in err and "'eigen'" in err


def test_resource_limit_is_exit_3(capsys):
    code, _, _ = run("eval --x 0,0,0,0,0 --y 0,0,0,0,0 --t 1 --kappa 1 --method thm2".split(), capsys)
    assert code == 3


def test_numerical_failure_is_exit_1(capsys):
    # a PDE grid that cannot reach its error target
    code, _, err = run("eval --x 0,0 --y 0,0 --t 1 --kappa 1 --method pde --pde-du 0.3 --tol 1e-12".split(), capsys)
    assert code == 1 and err.startswith("deltabose: error")


def test_compare_repulsive_table(capsys):
    code, out, _ = run("compare --x 0,0.4 --y 0.1,0.2 --t 0.5 --kappa -1 --methods tw,eigen,mc,pde --paths 20000".split(), capsys)
    rec = json.loads(out)
    assert code == 0 and rec["passed"]
    assert len(rec["pairs"]) == 6
    assert rec["max_rel_diff"] == max(p["rel_diff"] for p in rec["pairs"])


def test_compare_single_particle_all_methods(capsys):
    code, out, _ = run("compare --x 0.1 --y -0.2 --t 0.7 --kappa 0.8 --methods thm1,thm2,partition,mc,free".split(), capsys)
    rec = json.loads(out)
    assert code == 0 and rec["passed"]
    vals = [r["value_re"] for r in rec["results"]]
    assert max(vals) - min(vals) < 1e-12


def test_csv_round_trip(capsys):
    argv = "compare --x=-0.25,0.1,0.3 --y=-0.1,0.2,0.7 --t 0.3 --kappa 0.7 --methods thm1,thm2 --tol 1e-10 --seed 5 --format csv"
    _, out, _ = run(argv.split(), capsys)
    rows = parse_record_csv(out)
    assert [r["method"] for r in rows] == ["thm1", "thm2"]
    for r in rows:
        assert r["x"] == (-0.25, 0.1, 0.3) and r["y"] == (-0.1, 0.2, 0.7)
        assert (r["t"], r["kappa"], r["tol"], r["seed"], r["n"]) == (0.3, 0.7, 1e-10, 5, 3)


def test_json_round_trip_through_job(tmp_path, capsys):
    _, out, _ = run("eval --x 0,0.4 --y 0.1,0.2 --t 0.5 --kappa 0.5 --method thm1 --mu zero".split(), capsys)
    rec = json.loads(out)
    again = JobSpec.from_dict(rec["spec"]).spec_fields()
    assert again == rec["spec"]
    job = tmp_path / "job.json"
    job.write_text(out)
    _, out2, _ = run(["--job", str(job)], capsys)
    assert out2 == out


def test_job_file_with_plain_spec(tmp_path, capsys):
    job = tmp_path / "job.json"
    job.write_text(json.dumps({"command": "eval", "x": [0.0], "y": [0.0], "t": 1.0, "kappa": 0.0, "methods": ["tw"]}))
    code, out, _ = run(["--job", str(job)], capsys)
    assert code == 0 and json.loads(out)["results"][0]["value_re"] == pytest.approx(0.28209479177387814)
    job.write_text(json.dumps({"command": "eval", "bogus": 1}))
    assert main(["--job", str(job)]) == 2
    assert main(["--job", str(tmp_path / "missing.json")]) == 2


def test_byte_determinism_with_mc(capsys):
    argv = "eval --x 0,0.4 --y 0.1,0.2 --t 0.5 --kappa 1 --method mc --paths 5000 --seed 3".split()
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    _, c, _ = run(argv[:-1] + ["4"], capsys)
    assert c != a


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "out.json"
    target.write_text("old")
    assert main(["eval", "--x", "0", "--y", "0", "--t", "1", "--kappa", "0", "-o", str(target)]) == 0
    assert json.loads(target.read_text())["results"][0]["method"] == "tw"
    assert os.listdir(tmp_path) == ["out.json"]


def test_failed_job_keeps_old_output(tmp_path):
    target = tmp_path / "out.json"
    target.write_text("old")
    assert main(["eval", "--x", "1,0", "--y", "0,0", "--t", "1", "--kappa", "1", "-o", str(target)]) == 2
    assert target.read_text() == "old"


def test_sweep_is_gnuplot_ready(capsys):
    _, out, _ = run("sweep --x 0,0 --y 0,0 --t 1 --kappa 1 --param kappa --values 0.5:1.5:3 --format csv".split(), capsys)
    data = [line.split() for line in out.splitlines() if line and not line.startswith("#")]
    assert [float(r[0]) for r in data] == [0.5, 1.0, 1.5]
    assert all(len(r) == 4 for r in data)


def test_verify_identities_exit_code(capsys):
    code, out, _ = run("verify --suite identities --seed 1".split(), capsys)
    rec = json.loads(out)
    assert code == 0 and rec["passed"] and rec["suite"] == "identities"


def test_verify_failure_exits_1(monkeypatch, capsys):
    monkeypatch.setattr(cli.verify, "run_suite", lambda name, seed: {"suite": name, "passed": False, "checks": []})
    code, _, _ = run("verify --suite poles".split(), capsys)
    assert code == 1


def test_decay_command(capsys):
    code, out, _ = run("decay --n 3 --kappa 1 --format csv".split(), capsys)
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "n,kappa,slope,corrected_slope,target"
    assert float(row.split(",")[2]) == pytest.approx(-2.0, rel=0.05)


def test_timing_is_opt_in(capsys):
    _, out, _ = run("eval --x 0 --y 0 --t 1 --kappa 0".split(), capsys)
    assert "timing" not in out
    _, out, _ = run("eval --x 0 --y 0 --t 1 --kappa 0 --timing".split(), capsys)
    assert "timing" in json.loads(out)["results"][0]


def test_float_format_round_trips():
    for v in (0.1, 1 / 3, 2.0**-1074, 1e308):
        assert float(cli.fmt_float(v)) == v
