"""Text and structured (JSON) renderings of suite reports."""

from __future__ import annotations

import json
import math
from typing import Iterable, TextIO

from .errors import HilbundleError
from .suites import SuiteReport

__all__ = ["SCHEMA", "SCHEMA_VERSION", "ReportIOError", "to_document", "from_document",
           "render_text", "render_structured", "parse_structured", "emit_report"]

SCHEMA = "hilbundle.verify-report"
SCHEMA_VERSION = 1
FIELDS = ("suite", "anchor", "cases", "residual", "tolerance", "relation", "verdict", "wall_time", "detail")


class ReportIOError(HilbundleError, OSError):
    """Writing a report failed."""


def _number(v: float):
    # JSON has no inf/nan; keep them as strings so the round trip is exact
    if math.isfinite(v):
        return v
    return repr(float(v))


def _from_number(v) -> float:
    return float(v)


def to_document(reports: Iterable[SuiteReport], meta: dict | None = None) -> dict:
    records = []
    for r in reports:
        records.append({
            "suite": r.suite,
            "anchor": r.anchor,
            "cases": r.cases,
            "residual": _number(r.residual),
            "tolerance": _number(r.tolerance),
            "relation": r.relation,
            "verdict": r.verdict,
            "wall_time": r.wall_time,
            "detail": r.detail,
        })
    return {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "meta": dict(meta or {}),
        "summary": {
            "suites": len(records),
            "passed": sum(rec["verdict"] == "pass" for rec in records),
            "failed": sum(rec["verdict"] == "fail" for rec in records),
            "anchors": sorted({rec["anchor"] for rec in records}),
        },
        "records": records,
    }


def from_document(doc: dict) -> list[SuiteReport]:
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"not a {SCHEMA} document")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    out = []
    for rec in doc.get("records", []):
        out.append(SuiteReport(
            suite=rec["suite"], anchor=rec["anchor"], cases=int(rec["cases"]),
            residual=_from_number(rec["residual"]), tolerance=_from_number(rec["tolerance"]),
            relation=rec["relation"], passed=rec["verdict"] == "pass",
            wall_time=float(rec["wall_time"]), detail=rec.get("detail", ""),
        ))
    return out


def render_structured(reports: Iterable[SuiteReport], meta: dict | None = None) -> str:
    return json.dumps(to_document(reports, meta), indent=2) + "\n"


def parse_structured(text: str) -> list[SuiteReport]:
    return from_document(json.loads(text))


def render_text(reports: Iterable[SuiteReport], meta: dict | None = None) -> str:
    reports = list(reports)
    lines = []
    if meta:
        lines.append("  ".join(f"{k}={v}" for k, v in meta.items()))
    header = f"{'suite':44s} {'anchor':9s} {'cases':>5s} {'residual':>10s}    {'tolerance':>9s}  {'verdict':7s} {'time':>6s}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in reports:
        lines.append(f"{r.suite:44s} {r.anchor:9s} {r.cases:5d} {r.residual:10.3e} {r.relation:>2s} "
                     f"{r.tolerance:9.2e}  {r.verdict.upper():7s} {r.wall_time:6.2f}")
        if r.detail and not r.passed:
            lines.append(f"    {r.detail}")
    failed = sum(not r.passed for r in reports)
    lines.append(f"{len(reports)} suites, {len(reports) - failed} passed, {failed} failed")
    return "\n".join(lines) + "\n"


def emit_report(reports: Iterable[SuiteReport], fmt: str = "text", stream: TextIO | None = None,
                path=None, meta: dict | None = None) -> str:
    """Render and write to ``path`` (if given) or ``stream`` (if given); returns the text."""
    if fmt == "text":
        text = render_text(reports, meta)
    elif fmt == "structured":
        text = render_structured(reports, meta)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    try:
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        elif stream is not None:
            stream.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report: {exc}") from exc
    return text
