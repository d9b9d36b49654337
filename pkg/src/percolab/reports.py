"""Deterministic report files: writing, loading, merging and tabulating."""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .theorems import REPORT_SCHEMA


class SchemaError(ValueError):
    """A report file that does not carry the expected schema version."""


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def _reports_in(obj) -> list:
    if isinstance(obj, list):
        return [r for item in obj for r in _reports_in(item)]
    if isinstance(obj, dict):
        if "reports" in obj or "violations" in obj:
            return list(obj.get("reports", [])) + list(obj.get("violations", []))
        if "theorem" in obj:
            return [obj]
    raise SchemaError("file holds neither a report nor a list of reports")


def load_reports(paths: Iterable) -> list:
    out = []
    for p in paths:
        for rep in _reports_in(json.loads(Path(p).read_text())):
            if rep.get("schema") != REPORT_SCHEMA:
                raise SchemaError(f"{p}: schema {rep.get('schema')!r}, expected {REPORT_SCHEMA}")
            out.append(rep)
    return out


def _slack(value: str):
    try:
        return Fraction(value)
    except ValueError:
        return Fraction(float(value))


def merge(reports: Iterable) -> dict:
    """Deduplicate on (theorem, instance hash) and tabulate per theorem."""
    unique = {}
    for r in reports:
        unique.setdefault((r["theorem"], r["instance_hash"]), r)
    rows = {}
    for (thm, _), r in sorted(unique.items()):
        row = rows.setdefault(thm, {"theorem": thm, "expect": r.get("expect", "hold"), "instances": 0,
                                    "violations": 0, "unexpected": 0, "equalities": 0, "min_slack": None})
        violated = r["verdict"] == "violation"
        row["instances"] += 1
        row["violations"] += violated
        # a false variant may hold on many instances; only violations of true claims are surprises
        row["unexpected"] += violated and row["expect"] == "hold"
        row["equalities"] += bool(r.get("equality"))
        s = _slack(r["slack"])
        if row["min_slack"] is None or s < row["min_slack"]:
            row["min_slack"] = s
    table = []
    for thm in sorted(rows):
        row = dict(rows[thm])
        row["min_slack"] = None if row["min_slack"] is None else str(row["min_slack"])
        row["pass"] = row["unexpected"] == 0 if row["expect"] == "hold" else row["violations"] > 0
        table.append(row)
    return {"schema": REPORT_SCHEMA, "instances": len(unique), "table": table}


CSV_FIELDS = ("theorem", "expect", "instances", "violations", "unexpected", "equalities", "min_slack", "pass")


def to_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in summary["table"]:
        w.writerow({k: row[k] for k in CSV_FIELDS})
    return buf.getvalue()
