import csv
import io
import json
import subprocess
import sys

import pytest

from mstage.cli import EXIT_INVALID, EXIT_NO_DATA, EXIT_NO_EXACT, EXIT_OK, EXIT_TUNING, main
from mstage.io import load_plan
from mstage.oc import oc_exact
from mstage.plans import run_plan

DESIGN = ["design", "--model", "bernoulli", "--shape", "one-sided", "--theta0", "0.4", "--theta1", "0.6"]


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def tuned(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "plan.json"
    assert main(DESIGN + ["--delta", "0.05,0.05", "--tune", "--out", str(out)]) == EXIT_OK
    return out


def test_design_tune_writes_plan_and_certificate(tuned):
    plan = load_plan(tuned)
    cert = json.loads(open(f"{tuned}.cert.json").read())
    digest = json.loads(tuned.read_text())["provenance"]["certificate_digest"]
    assert plan.zeta is not None and digest
    assert oc_exact(plan, 0.4).reject_prob(0) <= 0.05
    assert oc_exact(plan, 0.6).reject_prob(1) <= 0.05
    assert cert


def test_design_single_stage(tmp_path):
    out = tmp_path / "p.json"
    assert main(DESIGN + ["--delta", "0.05,0.05", "--zeta", "1", "--stages", "1", "--out", str(out)]) == EXIT_OK
    assert len(load_plan(out).sizes) == 1


@pytest.mark.parametrize(
    "extra",
    [
        ["--delta", "1.5,0.05", "--zeta", "1"],
        ["--delta", "0.05", "--zeta", "1"],
        ["--delta", "0.05,0.05", "--zeta", "1", "--ratio", "2"],
    ],
)
def test_design_validation_errors(tmp_path, capsys, extra):
    assert main(DESIGN + extra + ["--out", str(tmp_path / "p.json")]) == EXIT_INVALID
    assert _err(capsys)["exit_code"] == EXIT_INVALID


def test_design_usage_error_is_json(capsys):
    assert main(["design", "--model", "bernoulli"]) == EXIT_INVALID
    assert _err(capsys)["error"] == "usage"


def test_tuning_failure_exit_code(tmp_path, capsys):
    args = ["design", "--model", "finite-population", "--population", "10", "--shape", "one-sided",
            "--theta0", "0.4", "--theta1", "0.5", "--delta", "1e-6,1e-6", "--tune", "--out", str(tmp_path / "p.json")]
    assert main(args) == EXIT_TUNING
    assert _err(capsys)["error"] == "tuning"


def test_evaluate_one_point_matches_engine(tuned, capsys):
    assert main(["evaluate", str(tuned), "--theta", "0.5"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["theta", "accept_0", "accept_1", "asn", "err"]
    rep = oc_exact(load_plan(tuned), 0.5)
    assert [float(v) for v in rows[1]] == [0.5, *rep.accept_prob, rep.asn, rep.trunc_error]


def test_evaluate_grid_json_and_simulation(tuned, capsys):
    assert main(["evaluate", str(tuned), "--grid", "0.3:0.7:5", "--format", "json"]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert [r["theta"] for r in rows] == pytest.approx([0.3, 0.4, 0.5, 0.6, 0.7])
    assert main(["evaluate", str(tuned), "--theta", "0.5", "--method", "simulate", "--reps", "2000"]) == EXIT_OK
    first = capsys.readouterr().out
    main(["evaluate", str(tuned), "--theta", "0.5", "--method", "simulate", "--reps", "2000"])
    assert capsys.readouterr().out == first


def test_evaluate_exact_unavailable(tmp_path, capsys):
    out = tmp_path / "p.json"
    args = ["design", "--model", "normal-mean", "--sigma", "1", "--shape", "one-sided", "--theta0", "0",
            "--theta1", "0.5", "--delta", "0.05,0.05", "--zeta", "1", "--out", str(out)]
    assert main(args) == EXIT_OK
    assert main(["evaluate", str(out), "--theta", "0.2"]) == EXIT_NO_EXACT
    assert _err(capsys)["error"] == "exact-unavailable"


def test_evaluate_bad_plan_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["evaluate", str(bad), "--theta", "0.5"]) == EXIT_INVALID
    assert _err(capsys)["error"] == "plan-format"


def _data(tmp_path, values, name="x.txt"):
    path = tmp_path / name
    path.write_text("\n".join(str(v) for v in values) + "\n")
    return path


def test_run_stops_at_first_stage(tuned, tmp_path, capsys):
    plan = load_plan(tuned)
    n1 = int(plan.sizes[0])
    path = _data(tmp_path, [0] * n1)
    assert main(["run", str(tuned), str(path)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out == {"accepted": 0, "stage": 1, "samples_used": n1, "estimate": 0.0}


def test_run_replay_matches_library(tuned, tmp_path, capsys):
    plan = load_plan(tuned)
    xs = [(i * 7) % 5 < 2 for i in range(int(plan.sizes[-1]))]
    path = _data(tmp_path, [int(v) for v in xs])
    assert main(["run", str(tuned), str(path)]) == EXIT_OK
    first = capsys.readouterr().out
    ref = run_plan(plan, [float(v) for v in xs])
    doc = json.loads(first)
    assert (doc["accepted"], doc["stage"], doc["samples_used"]) == (ref.accepted, ref.stage, ref.samples_used)
    main(["run", str(tuned), str(path)])
    assert capsys.readouterr().out == first


def test_run_truncated_data(tuned, tmp_path, capsys):
    plan = load_plan(tuned)
    xs = [(i * 7) % 5 < 2 for i in range(int(plan.sizes[-1]))]
    ref = run_plan(plan, [float(v) for v in xs])
    assert ref.stage > 1, "fixture data must not stop at the first stage"
    path = _data(tmp_path, [int(v) for v in xs[: int(plan.sizes[0])]])
    assert main(["run", str(tuned), str(path)]) == EXIT_NO_DATA
    assert _err(capsys)["error"] == "insufficient-data"


def test_console_script_entry_point(tuned):
    res = subprocess.run([sys.executable, "-m", "mstage.cli", "evaluate", str(tuned), "--theta", "0.5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("theta,")
