"""JSON and CSV report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
from pathlib import Path

import numpy as np

from ..spectral import measures_csv
from .suite import SuiteResult

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

CHECK_FIELDS = ("check_name", "anchor", "group", "lhs", "rhs", "residual", "bound", "tolerance", "pass", "runtime_ms", "detail")

_complex = {"oneOf": [{"type": "null"}, {"type": "object", "required": ["re", "im"], "properties": {"re": {"type": "number"}, "im": {"type": "number"}}}]}
_optnum = {"type": ["number", "null"]}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["meta", "checks"],
    "properties": {
        "meta": {
            "type": "object",
            "required": ["config", "versions", "digest", "summary"],
            "properties": {
                "config": {"type": "object"},
                "versions": {"type": "object"},
                "digest": {"type": "string"},
                "summary": {"type": "object"},
            },
        },
        "dilation": {"type": "array", "items": {"type": "object", "required": ["group", "kind", "passed"]}},
        "checks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": list(CHECK_FIELDS),
                "properties": {
                    "check_name": {"type": "string"},
                    "anchor": {"type": "string"},
                    "group": {"type": "string"},
                    "lhs": _complex,
                    "rhs": _complex,
                    "residual": _optnum,
                    "bound": _optnum,
                    "tolerance": {"type": "number"},
                    "pass": {"type": "boolean"},
                    "runtime_ms": {"type": "number"},
                    "detail": {"type": "string"},
                },
            },
        },
    },
}


class ReportError(RuntimeError):
    pass


def versions() -> dict:
    from .. import __version__

    return {"opshift": __version__, "numpy": np.__version__, "python": platform.python_version()}


def digest(checks: list[dict]) -> str:
    """SHA-256 of the check list with timing fields removed."""
    stripped = [{k: v for k, v in c.items() if k != "runtime_ms"} for c in checks]
    return hashlib.sha256(json.dumps(stripped, sort_keys=True).encode()).hexdigest()


def build_report(result: SuiteResult) -> dict:
    if not result.checks:
        raise ReportError("no checks were run")
    checks = [c.to_dict() for c in result.checks]
    failed = sorted({c["anchor"] for c in checks if not c["pass"]})
    return {
        "meta": {
            "config": result.config.to_dict(),
            "versions": versions(),
            "digest": digest(checks),
            "summary": {"checks": len(checks), "failed": sum(not c["pass"] for c in checks), "failed_anchors": failed},
        },
        "checks": checks,
        "dilation": result.dilations,
    }


def checks_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CHECK_FIELDS)
    for c in report["checks"]:
        row = []
        for k in CHECK_FIELDS:
            v = c[k]
            if isinstance(v, dict):
                v = complex(v["re"], v["im"])
            row.append("" if v is None else v)
        w.writerow(row)
    return buf.getvalue()


def emit_report(result: SuiteResult, out_dir: str | Path | None, fmt: str = "json") -> tuple[dict, list[Path]]:
    """Write the report files; returns the report and the written paths.

    ``json`` writes ``report.json``; ``csv`` writes ``checks.csv`` and, when
    measures were built, ``measures.csv``.
    """
    if fmt not in ("json", "csv"):
        raise ReportError(f"unknown format {fmt!r}")
    report = build_report(result)
    written: list[Path] = []
    if out_dir is None:
        return report, written
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            p = out / "report.json"
            p.write_text(json.dumps(report, indent=2) + "\n")
            written.append(p)
        else:
            p = out / "checks.csv"
            p.write_text(checks_csv(report))
            written.append(p)
            if result.measures:
                p = out / "measures.csv"
                p.write_text(measures_csv(result.measures))
                written.append(p)
    except OSError as exc:
        raise ReportError(f"cannot write report: {exc}") from exc
    return report, written


def exit_code(report: dict) -> int:
    return EXIT_OK if report["meta"]["summary"]["failed"] == 0 else EXIT_FAILED
