import json
import math
from pathlib import Path

import numpy as np
import pytest

import qsdlab

DATA = Path(__file__).resolve().parents[2] / "data"


def test_two_cycle_closed_forms():
    a = qsdlab.Analysis(qsdlab.two_cycle(0.8, 0.5), ["a", "b"])
    assert a.period == 2
    assert a.classes == [0, 1]
    assert abs(a.theta0 - math.sqrt(0.4)) < 1e-12
    nu_qs = a.nu_qs()
    assert abs(nu_qs[1] - math.sqrt(1.6) / (1 + math.sqrt(1.6))) < 1e-10
    assert np.allclose(a.nu_qe(), [0.5, 0.5], atol=1e-12)
    labels, p = a.q_process()
    assert labels == ["a", "b"]
    assert np.allclose(p, [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)
    ok, theta, _ = a.is_qsd(nu_qs)
    assert ok and abs(theta - a.theta0) < 1e-12


def test_invalid_kernel_raises_with_kind():
    with pytest.raises(qsdlab.QsdError) as info:
        qsdlab.Analysis(np.array([[0.0, 1.2], [0.5, 0.0]]))
    assert info.value.kind == "RowSumExceedsOne"


def test_report_roundtrip_and_determinism():
    text = (DATA / "cyclic6.json").read_text()
    code, doc = qsdlab.report("report", text, paths=2000)
    assert code == 0
    assert doc["schema"] == qsdlab.SCHEMA
    assert doc["period"] == 3
    assert doc["pass"] is True
    first = qsdlab.run("report", text, paths=2000)[1]
    second = qsdlab.run("report", text, paths=2000)[1]
    assert first == second
    assert json.loads(first) == doc


def test_error_object_for_duplicate_edge():
    code, doc = qsdlab.report("validate", (DATA / "duplicate_edge.json").read_text())
    assert code == 1
    assert doc["error"]["kind"] == "ParseError"
    assert doc["pass"] is False
