import json
from pathlib import Path

import pytest

from germdeform import main
from logic.io_json import dumps

INPUTS = Path(__file__).resolve().parent.parent / "inputs"
FAST = ["--nodes", "64"]


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def write(tmp_path, obj, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def test_analyze(capsys):
    code, out = run(capsys, "analyze", str(INPUTS / "e1.json"), *FAST)
    assert code == 0
    report = json.loads(out)
    assert report["d"] == 3 and report["r"] == 4
    assert report["basis"] == ["1", "x", "y", "x*y"]
    assert report["divisor_orders"] == [0, 2, 2]
    assert report["dual_certificate"] < 1e-10
    assert report["seed"] == 0


def test_family(capsys):
    code, out = run(capsys, "family", str(INPUTS / "e1.json"), *FAST)
    assert code == 0
    assert 0 < json.loads(out)["param_box"] <= 0.05


def test_dis_at_origin(capsys):
    code, out = run(capsys, "dis", str(INPUTS / "e1.json"), *FAST)
    assert code == 0
    report = json.loads(out)
    assert all(abs(re) < 1e-12 and abs(im) < 1e-12 for re, im in report["dis_value"])
    assert report["basis"] == ["1", "x", "y", "x*y"]
    assert not report["smooth"] and report["multiplicity_sum"] == 4


def test_dis_emits_stable_fiber_report(capsys):
    code, out = run(capsys, "dis", str(INPUTS / "e1_fiber.json"), *FAST)
    assert code == 0
    assert dumps(json.loads(out)) + "\n" == out
    assert {"t", "smooth", "simple_branch", "branch_points", "multiplicity_sum", "dis_value"} <= set(json.loads(out))


def test_fiber_output_is_stable(capsys):
    code, first = run(capsys, "fiber", str(INPUTS / "e1_fiber.json"), *FAST)
    assert code == 0
    _, second = run(capsys, "fiber", str(INPUTS / "e1_fiber.json"), *FAST)
    assert first == second
    assert dumps(json.loads(first)) + "\n" == first
    assert json.loads(first)["multiplicity_sum"] == 4


def test_missing_file(capsys, tmp_path):
    code, out = run(capsys, "analyze", str(tmp_path / "absent.json"))
    assert code == 2
    assert json.loads(out)["error"] == "InputError"


def test_not_weierstrass(capsys, tmp_path):
    path = write(tmp_path, {"terms": [[1, 2, 1.0, 0.0], [3, 0, -1.0, 0.0]]})
    code, out = run(capsys, "analyze", path)
    assert code == 2
    assert json.loads(out)["error"] == "NotWeierstrass"


def test_bad_node_count(capsys):
    code, out = run(capsys, "analyze", str(INPUTS / "e1.json"), "--nodes", "100")
    assert code == 2
    assert json.loads(out)["error"] == "InputError"


def test_point_outside_box(capsys, tmp_path):
    path = write(tmp_path, {"germ": {"terms": [[0, 3, 1.0, 0.0], [2, 0, -1.0, 0.0]]},
                            "t": [[1.0, 0.0], [0, 0], [0, 0], [0, 0]]})
    code, out = run(capsys, "dis", path, *FAST)
    assert code == 2
    assert json.loads(out)["error"] == "OutOfDomain"


def test_classify(capsys, tmp_path):
    job = json.loads((INPUTS / "e1_classify.json").read_text(encoding="utf-8"))
    job["steps"] = 8
    code, out = run(capsys, "classify", write(tmp_path, job), *FAST)
    assert code == 0
    report = json.loads(out)
    re0, _ = report["phi_final"][0]
    assert re0 == pytest.approx(0.002, abs=1e-8)
    assert report["steps"] == 8 and report["nodes"] == 64
    assert report["verify"]["residual"] < 1e-6


def test_classify_needs_germ(capsys, tmp_path):
    code, out = run(capsys, "classify", write(tmp_path, {"F_terms": [[0, 3, 0, 1.0, 0.0]]}))
    assert code == 2
    assert json.loads(out)["error"] == "InputError"


def test_check_subset(capsys):
    code, out = run(capsys, "check", "--only", "e1_anchor", "--only", "trace_identities", *FAST)
    assert code == 0
    report = json.loads(out)
    assert report["passed"]
    assert [c["name"] for c in report["checks"]] == ["e1_anchor", "trace_identities"]


@pytest.mark.parametrize("change", [
    {"F_terms": [["x", 3, 0, 1.0, 0.0]]},
    {"F_terms": [[0, 3, 0, "one", 0.0]]},
    {"order": "high"},
    {"steps": 2.5},
    {"s_max": "long"},
])
def test_malformed_classify_job(capsys, tmp_path, change):
    job = json.loads((INPUTS / "e1_classify.json").read_text(encoding="utf-8"))
    job.update(change)
    code, out = run(capsys, "classify", write(tmp_path, job), *FAST)
    assert code == 2
    assert json.loads(out)["error"] == "InputError"


def test_malformed_point(capsys, tmp_path):
    path = write(tmp_path, {"germ": {"terms": [[0, 3, 1.0, 0.0], [2, 0, -1.0, 0.0]]}, "t": [["a", 0], 0, 0, 0]})
    code, out = run(capsys, "fiber", path, *FAST)
    assert code == 2
    assert json.loads(out)["error"] == "InputError"
