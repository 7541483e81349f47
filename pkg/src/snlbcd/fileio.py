"""Instance and solution files.

Both formats are JSON documents written by a canonical emitter: keys keep
insertion order, floats carry 17 significant digits (%.17g, lossless for
doubles, negative zero normalized), non-finite values become null, and
compound rows go one per line so files diff cleanly.  Parsing any file this
module wrote and re-emitting it reproduces the text byte for byte.

On disk, sensors are numbered 1..m and anchors m+1..m+n; in memory both are
0-based and anchors index their own array.  This boundary is the only place
the conversion happens.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FileFormatError
from .evaluate import SolutionReport
from .model import ProblemInstance
from .solver import SolveTrace

__all__ = [
    "INSTANCE_FORMAT",
    "SOLUTION_FORMAT",
    "FORMAT_VERSION",
    "TRACE_ROW_CAP",
    "dumps_canonical",
    "write_instance",
    "read_instance",
    "write_solution",
    "read_solution",
    "SolutionFileData",
]

INSTANCE_FORMAT = "snl-instance"
SOLUTION_FORMAT = "snl-solution"
FORMAT_VERSION = 1
TRACE_ROW_CAP = 100_000


def _fmt_scalar(x: Any) -> str:
    if isinstance(x, bool | np.bool_):
        return "true" if x else "false"
    if isinstance(x, int | np.integer):
        return str(int(x))
    if isinstance(x, float | np.floating):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        if x == 0.0:
            x = 0.0  # normalize -0.0
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if x is None:
        return "null"
    raise FileFormatError(f"cannot serialize value of type {type(x).__name__}")


def _is_scalar(x: Any) -> bool:
    return x is None or isinstance(
        x, bool | int | float | str | np.bool_ | np.integer | np.floating
    )


def _emit(obj: Any, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if _is_scalar(obj):
        return _fmt_scalar(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f"{inner}{json.dumps(str(k))}: {_emit(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, list | tuple):
        items = list(obj)
        if not items:
            return "[]"
        if all(_is_scalar(x) for x in items):
            return "[" + ", ".join(_fmt_scalar(x) for x in items) + "]"
        parts = [f"{inner}{_emit(x, indent + 1)}" for x in items]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    raise FileFormatError(f"cannot serialize value of type {type(obj).__name__}")


def dumps_canonical(doc: dict) -> str:
    """Serialize a document to its canonical text form (trailing newline)."""
    return _emit(doc, 0) + "\n"


def _load_doc(path: str | Path, expected_format: str) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"cannot read {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FileFormatError(f"{p}: top level must be an object")
    if doc.get("format") != expected_format:
        raise FileFormatError(
            f"{p}: format is {doc.get('format')!r}, expected {expected_format!r}"
        )
    if doc.get("version") != FORMAT_VERSION:
        raise FileFormatError(
            f"{p}: unsupported version {doc.get('version')!r}"
        )
    return doc


def _require(doc: dict, key: str, path: str | Path) -> Any:
    if key not in doc:
        raise FileFormatError(f"{path}: missing required key {key!r}")
    return doc[key]


def write_instance(
    instance: ProblemInstance,
    path: str | Path,
    generation: dict | None = None,
) -> None:
    """Write an instance file (1-based ids on disk)."""
    m = instance.num_sensors
    doc = {
        "format": INSTANCE_FORMAT,
        "version": FORMAT_VERSION,
        "dim": instance.dim,
        "num_sensors": m,
        "num_anchors": instance.num_anchors,
        "anchors": instance.anchors.tolist(),
        "ss_edges": [
            [int(i) + 1, int(j) + 1, float(d)]
            for (i, j), d in zip(instance.ss_pairs, instance.ss_dists)
        ],
        "sa_edges": [
            [int(s) + 1, m + 1 + int(k), float(d)]
            for (s, k), d in zip(instance.sa_pairs, instance.sa_dists)
        ],
        "truth": instance.truth.tolist() if instance.truth is not None else None,
        "generation": generation,
    }
    Path(path).write_text(dumps_canonical(doc), encoding="utf-8")


def read_instance(path: str | Path) -> ProblemInstance:
    """Parse an instance file back into a 0-based in-memory instance."""
    doc = _load_doc(path, INSTANCE_FORMAT)
    dim = _require(doc, "dim", path)
    m = _require(doc, "num_sensors", path)
    n = _require(doc, "num_anchors", path)
    if not (isinstance(dim, int) and isinstance(m, int) and isinstance(n, int)):
        raise FileFormatError(f"{path}: dim/num_sensors/num_anchors must be ints")
    try:
        anchors = np.asarray(
            _require(doc, "anchors", path), dtype=np.float64
        ).reshape(n, dim)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: anchors must be a {n} x {dim} table") from exc

    def convert_ss(row: Any) -> tuple[int, int, float]:
        if not (isinstance(row, list) and len(row) == 3):
            raise FileFormatError(f"{path}: each ss edge must be [i, j, dist]")
        i, j, d = row
        if not (isinstance(i, int) and isinstance(j, int) and 1 <= i <= m and 1 <= j <= m):
            raise FileFormatError(f"{path}: ss edge ids must lie in 1..{m}")
        return i - 1, j - 1, float(d)

    def convert_sa(row: Any) -> tuple[int, int, float]:
        if not (isinstance(row, list) and len(row) == 3):
            raise FileFormatError(f"{path}: each sa edge must be [i, k, dist]")
        s, k, d = row
        if not (isinstance(s, int) and 1 <= s <= m):
            raise FileFormatError(f"{path}: sa sensor ids must lie in 1..{m}")
        if not (isinstance(k, int) and m + 1 <= k <= m + n):
            raise FileFormatError(
                f"{path}: sa anchor ids must lie in {m + 1}..{m + n}"
            )
        return s - 1, k - (m + 1), float(d)

    raw_ss = _require(doc, "ss_edges", path)
    raw_sa = _require(doc, "sa_edges", path)
    if not isinstance(raw_ss, list) or not isinstance(raw_sa, list):
        raise FileFormatError(f"{path}: ss_edges and sa_edges must be lists")
    ss_edges = [convert_ss(r) for r in raw_ss]
    sa_edges = [convert_sa(r) for r in raw_sa]
    truth = doc.get("truth")
    return ProblemInstance.from_edges(
        dim=dim,
        num_sensors=m,
        anchors=anchors,
        ss_edges=ss_edges,
        sa_edges=sa_edges,
        truth=truth,
    )


@dataclass
class SolutionFileData:
    """Parsed contents of a solution file."""

    estimates: np.ndarray
    report: SolutionReport
    trace_columns: list[str]
    trace_rows: np.ndarray
    instance_path: str | None
    truncated: bool


def write_solution(
    report: SolutionReport,
    trace: SolveTrace,
    path: str | Path,
    instance_path: str | None = None,
) -> None:
    """Write a solution file; the trace keeps at most TRACE_ROW_CAP rows."""
    rows = trace.rows()
    truncated = len(rows) > TRACE_ROW_CAP
    doc = {
        "format": SOLUTION_FORMAT,
        "version": FORMAT_VERSION,
        "instance_path": instance_path,
        "estimates": np.asarray(report.estimates, dtype=np.float64).tolist(),
        "report": {
            "misfit_final": report.misfit_final,
            "objective_final": report.objective_final,
            "gamma_final": report.gamma_final,
            "rmsd": report.rmsd,
            "sweeps": report.sweeps,
            "wall_time_s": report.wall_time_s,
            "termination": report.termination,
        },
        "trace": {
            "columns": list(SolveTrace.COLUMNS),
            "rows": rows[:TRACE_ROW_CAP],
            "truncated": truncated,
        },
    }
    Path(path).write_text(dumps_canonical(doc), encoding="utf-8")


def read_solution(path: str | Path) -> SolutionFileData:
    """Parse a solution file."""
    doc = _load_doc(path, SOLUTION_FORMAT)
    estimates = np.asarray(_require(doc, "estimates", path), dtype=np.float64)
    if estimates.ndim != 2:
        raise FileFormatError(f"{path}: estimates must be an m x d table")
    rep = _require(doc, "report", path)
    if not isinstance(rep, dict):
        raise FileFormatError(f"{path}: report must be an object")
    try:
        report = SolutionReport(
            estimates=estimates,
            misfit_final=float(rep["misfit_final"]),
            objective_final=float(rep["objective_final"]),
            gamma_final=float(rep["gamma_final"]),
            rmsd=None if rep["rmsd"] is None else float(rep["rmsd"]),
            sweeps=int(rep["sweeps"]),
            wall_time_s=float(rep["wall_time_s"]),
            termination=str(rep["termination"]),
        )
    except KeyError as exc:
        raise FileFormatError(f"{path}: report is missing key {exc}") from exc
    trace = _require(doc, "trace", path)
    if not isinstance(trace, dict) or "columns" not in trace or "rows" not in trace:
        raise FileFormatError(f"{path}: trace must carry columns and rows")
    rows = np.asarray(trace["rows"], dtype=np.float64).reshape(
        -1, len(trace["columns"])
    )
    return SolutionFileData(
        estimates=estimates,
        report=report,
        trace_columns=[str(c) for c in trace["columns"]],
        trace_rows=rows,
        instance_path=doc.get("instance_path"),
        truncated=bool(trace.get("truncated", False)),
    )
