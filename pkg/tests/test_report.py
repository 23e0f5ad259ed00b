import io
import json
import math

import pytest

from hilbundle.report import (
    SCHEMA,
    SCHEMA_VERSION,
    ReportIOError,
    emit_report,
    from_document,
    parse_structured,
    render_structured,
    render_text,
    to_document,
)
from hilbundle.suites import SuiteReport


def report(suite="eq-2.2-demo", passed=True, residual=1e-14, detail=""):
    return SuiteReport(suite, "2.2", 25, residual, 1e-12, "<=", passed, 0.01, detail)


def test_empty_document():
    doc = to_document([])
    assert doc["schema"] == SCHEMA and doc["schema_version"] == SCHEMA_VERSION
    assert doc["summary"] == {"suites": 0, "passed": 0, "failed": 0, "anchors": []}
    assert doc["records"] == []
    assert from_document(doc) == []


def test_failing_suite_in_both_formats():
    reports = [report(), report("eq-2.3-demo", passed=False, residual=1.0, detail="too big")]
    doc = json.loads(render_structured(reports))
    verdicts = {rec["suite"]: rec["verdict"] for rec in doc["records"]}
    assert verdicts == {"eq-2.2-demo": "pass", "eq-2.3-demo": "fail"}
    assert doc["summary"]["failed"] == 1
    text = render_text(reports)
    line = next(l for l in text.splitlines() if l.startswith("eq-2.3-demo"))
    assert "FAIL" in line
    assert "too big" in text
    assert text.rstrip().endswith("2 suites, 1 passed, 1 failed")


def test_structured_roundtrip():
    reports = [report(), report("eq-2.3-demo", passed=False, residual=float("inf"), detail="boom")]
    back = parse_structured(render_structured(reports, meta={"seed": 3}))
    assert back == reports
    assert math.isinf(back[1].residual)


def test_non_finite_values_are_strings():
    text = render_structured([report(residual=float("nan"), passed=False)])
    rec = json.loads(text)["records"][0]
    assert rec["residual"] == "nan"
    assert math.isnan(parse_structured(text)[0].residual)


def test_document_validation():
    with pytest.raises(ValueError):
        from_document({"schema": "other"})
    with pytest.raises(ValueError):
        from_document({"schema": SCHEMA, "schema_version": 99})


def test_meta_is_recorded():
    doc = json.loads(render_structured([report()], meta={"spec": "x", "seed": 4}))
    assert doc["meta"] == {"spec": "x", "seed": 4}
    assert render_text([report()], meta={"spec": "x"}).startswith("spec=x")


def test_emit_to_stream_and_path(tmp_path):
    buf = io.StringIO()
    text = emit_report([report()], "text", stream=buf)
    assert buf.getvalue() == text
    p = tmp_path / "r.json"
    emit_report([report()], "structured", path=p)
    assert parse_structured(p.read_text()) == [report()]


def test_emit_unknown_format():
    with pytest.raises(ValueError):
        emit_report([], "xml")


def test_emit_unwritable(tmp_path):
    with pytest.raises(ReportIOError):
        emit_report([report()], "text", path=tmp_path / "missing" / "r.txt")
