"""CSV / JSON serialization of run reports.

Reals are written with ``repr`` (shortest round-trip decimal) so that
parse-then-write reproduces the original bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .core import EvalCounters
from .solver import IterationRecord, RunReport

CSV_COLUMNS = ("iter", "t", "dt", "f", "grad_norm", "max_lte", "charge_sq", "grow_iters", "shrink_iters")
_INT_COLUMNS = {"iter", "grow_iters", "shrink_iters"}


def _real(v) -> str:
    return repr(float(v))


def trace_to_csv(trace: list[IterationRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for rec in trace:
        cells = [str(int(getattr(rec, c))) if c in _INT_COLUMNS else _real(getattr(rec, c))
                 for c in CSV_COLUMNS]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def csv_to_trace(text: str) -> list[IterationRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        out.append(IterationRecord(**{
            c: int(row[c]) if c in _INT_COLUMNS else float(row[c]) for c in CSV_COLUMNS
        }))
    return out


def _jsonable(v):
    # NaN/inf have no JSON literal; null keeps the document standard
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, np.ndarray):
        return [_jsonable(float(e)) for e in v]
    if isinstance(v, np.floating):
        return _jsonable(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(e) for k, e in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(e) for e in v]
    return v


def _from_json_real(v) -> float:
    if v is None:
        return float("nan")
    return float(v)


def report_to_dict(report: RunReport) -> dict:
    trace = []
    for rec in report.trace:
        d = {c: getattr(rec, c) for c in CSV_COLUMNS}
        if rec.f_full is not None:
            d["f_full"] = rec.f_full
        trace.append(d)
    return _jsonable({
        "status": report.status,
        "x_final": report.x_final,
        "f_final": report.f_final,
        "grad_norm_final": report.grad_norm_final,
        "iters": report.iters,
        "counters": report.counters.as_dict(),
        "trace": trace,
        "config_echo": report.config_echo,
        "diverged": report.diverged,
        "nonfinite_control": report.nonfinite_control,
    })


def report_to_json(report: RunReport) -> str:
    return json.dumps(report_to_dict(report), indent=1) + "\n"


def json_to_report(text: str) -> RunReport:
    d = json.loads(text)
    trace = []
    for r in d["trace"]:
        kw = {c: int(r[c]) if c in _INT_COLUMNS else _from_json_real(r[c]) for c in CSV_COLUMNS}
        if "f_full" in r:
            kw["f_full"] = _from_json_real(r["f_full"])
        trace.append(IterationRecord(**kw))
    return RunReport(
        status=d["status"],
        x_final=np.array([_from_json_real(v) for v in d["x_final"]]),
        f_final=_from_json_real(d["f_final"]),
        grad_norm_final=_from_json_real(d["grad_norm_final"]),
        iters=int(d["iters"]),
        counters=EvalCounters(**d["counters"]),
        trace=trace,
        config_echo=d["config_echo"],
        diverged=bool(d["diverged"]),
        nonfinite_control=int(d["nonfinite_control"]),
    )
