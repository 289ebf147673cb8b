"""Serializers for reports, identity manifests and coefficient tables.

JSON is the stable surface; CSV flattens records one per row; text is for
people and may change.
"""

from __future__ import annotations

import csv
import io
import json

__all__ = ["render_report", "render_rows", "render_json"]

FORMATS = ("json", "csv", "text")


def render_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


_RECORD_COLUMNS = ["id", "index", "params", "lhs_re", "lhs_im", "rhs_re", "rhs_im",
                   "abs_residual", "rel_residual", "verdict", "terms_lhs", "terms_rhs",
                   "wall_ms", "diagnostics"]


def _record_row(rec: dict) -> list:
    lhs, rhs = rec.get("lhs") or {}, rec.get("rhs") or {}
    terms = rec.get("terms") or {}
    return [
        rec["id"], rec["index"], json.dumps(rec["params"], sort_keys=True),
        lhs.get("re", ""), lhs.get("im", ""), rhs.get("re", ""), rhs.get("im", ""),
        rec.get("abs_residual") or "", rec.get("rel_residual") or "", rec["verdict"],
        terms.get("lhs", ""), terms.get("rhs", ""),
        "" if rec.get("wall_ms") is None else rec["wall_ms"], rec.get("diagnostics", ""),
    ]


def _report_text(doc: dict) -> str:
    s = doc["summary"]
    lines = [
        f"started {doc['started_at']}  seed {doc['config']['seed']}  "
        f"{doc['config']['context']['precision_bits']} bits / {doc['config']['context']['tolerance_digits']} digits",
        f"pass {s['pass']}  fail {s['fail']}  inconclusive {s['inconclusive']}  "
        f"max rel residual {s['max_rel_residual']}",
        "",
    ]
    for identity_id, entry in s["per_id"].items():
        lines.append(f"{identity_id:8s} {entry['pass']}/{entry['total']} pass  max rel {entry['max_rel_residual']}")
    bad = [r for r in doc["records"] if r["verdict"] != "pass"]
    if bad:
        lines.append("")
        for rec in bad:
            lines.append(f"{rec['verdict'].upper():12s} {rec['id']}#{rec['index']} {rec['params']}: {rec['diagnostics']}")
    exp = s.get("experiments", {}).get("e2_phase")
    if exp:
        lines.append("")
        counts = ", ".join(f"{v}: {e['pass']}/{e['total']}" for v, e in exp["variants"].items())
        lines.append(f"e2 phase variants: {counts}; selected {exp['selected']}; bit-identical {exp['bit_identical']}")
    return "\n".join(lines) + "\n"


def render_report(doc: dict, fmt: str) -> str:
    """``doc`` is ``Report.to_dict()``."""
    if fmt == "json":
        return render_json(doc)
    if fmt == "csv":
        return _csv(_RECORD_COLUMNS, [_record_row(r) for r in doc["records"]])
    if fmt == "text":
        return _report_text(doc)
    raise ValueError(f"unknown format {fmt!r}")


def render_rows(rows: list[dict], fmt: str, columns: list[str] | None = None) -> str:
    """A flat table of dicts: a JSON array, a CSV table or tab-separated text."""
    if fmt == "json":
        return render_json(rows)
    columns = columns or (list(rows[0]) if rows else [])

    def cell(v):
        return json.dumps(v, ensure_ascii=False) if isinstance(v, (dict, list)) else v

    if fmt == "csv":
        return _csv(columns, [[cell(r.get(c, "")) for c in columns] for r in rows])
    if fmt == "text":
        return "".join("\t".join(str(cell(r.get(c, ""))) for c in columns) + "\n" for r in rows)
    raise ValueError(f"unknown format {fmt!r}")
