from __future__ import annotations

import json

import numpy as np
import pytest

from slice_moduli import cli
from slice_moduli.stable import LADDER


def _run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def test_stable_counts(tmp_path):
    code, rep = _run(tmp_path, "stable", "counts", "--d", "5")
    assert code == 0 and rep["status"] == "ok"
    assert rep["result"]["straight_trees"] == 15
    assert rep["result"]["over_line"]["2,2"] == 1


def test_malformed_curve_exits_2(tmp_path, capsys):
    bad = tmp_path / "curve.json"
    bad.write_text("{not json")
    code, rep = _run(tmp_path, "incidence", "flexes", "--curve", str(bad))
    assert code == 2 and rep is None
    bad.write_text(json.dumps({"r": 2, "d": 3}))
    assert cli.main(["incidence", "flexes", "--curve", str(bad)]) == 2
    assert cli.main(["incidence", "flexes", "--curve", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["deform", "versal", "--parts", "2,1"]) == 2
    assert cli.main(["stable", "counts", "--tol", "-1"]) == 2
    assert "malformed input" in capsys.readouterr().err


def test_certified_failure_exits_1_with_report(tmp_path):
    t = np.asarray(LADDER)
    rows = np.stack([t * (1 + 5 * np.sin(40 * np.log(t))), 0 * t, 1 + 0 * t], axis=1)
    fam = tmp_path / "fam.json"
    fam.write_text(json.dumps({"ladder": list(LADDER), "samples": [[[z, 0.0] for z in r] for r in rows]}))
    code, rep = _run(tmp_path, "stable", "limit", "--family", str(fam))
    assert code == 1
    assert rep["status"] == "failed" and "ValuationAmbiguity" in rep["error"]


def test_partial_monodromy_exits_1(tmp_path):
    code, rep = _run(tmp_path, "monodromy-s45", "--budget", "0")
    assert code == 1
    assert rep["result"]["loops_attempted"] == 0


def test_deform_reports(tmp_path):
    code, rep = _run(tmp_path, "deform", "versal", "--parts", "2,2", "--anchors", "0,1")
    assert code == 0
    assert rep["result"]["rho"]["matrix"] == [[0.0, 1.0], [1.0, 1.0]]
    code, rep = _run(tmp_path, "deform", "zcurve", "--m1", "2", "--m2", "1", "--hyperplane", "1,0.3")
    assert code == 0 and rep["result"]["intersection"]["length"] == 2


def test_stable_limit_with_dot(tmp_path):
    dot = tmp_path / "tree.dot"
    code, rep = _run(tmp_path, "stable", "dandelion", "--d", "6", "--k", "4", "--dot", str(dot))
    assert code == 0
    assert dot.read_text().startswith("graph dual")
    assert rep["result"]["discrepancy"] is True


def test_reports_are_deterministic(tmp_path):
    argv = ["incidence", "flexes", "--random-d", "4", "--seed", "3"]
    _, a = _run(tmp_path, *argv, name="a.json")
    _, b = _run(tmp_path, *argv, name="b.json")
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
    assert a["result"]["count"] == 24


def test_curve_roundtrip_through_forms_random(tmp_path):
    _, rep = _run(tmp_path, "forms", "random", "--d", "3", "--seed", "1", name="curve.json")
    code, rep = _run(tmp_path, "incidence", "flexes", "--curve", str(tmp_path / "curve.json"))
    assert code == 0 and rep["result"]["count"] == 9


def test_moduli_commands(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps([[0, 0], [1, 0], "inf", [2, 0]]))
    b.write_text(json.dumps([[0, 0], [1, 0], "inf", [-1, 0]]))
    code, rep = _run(tmp_path, "moduli", "same", "--points", str(a), "--other", str(b))
    assert code == 0 and rep["result"]["same"] is True  # lambda = 2 and lambda = -1 share j
    code, rep = _run(tmp_path, "moduli", "fingerprint", "--points", str(a))
    assert code == 0 and "hash" in rep["result"]
