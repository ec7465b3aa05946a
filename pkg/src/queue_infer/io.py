"""CSV ingestion and serialization for count paths, traces and reports."""
from __future__ import annotations

import csv
import io
import json
import sys
from typing import IO

import numpy as np

from .errors import IngestError
from .simulator import ContinuousTrace, CountPaths


def parse_counts(fh: IO[str], name: str = "<input>") -> CountPaths:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["t", "A", "D"]:
        raise IngestError(f"{name}:1: expected header 't,A,D'")
    a, d = [], []
    prev_t = None
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise IngestError(f"{name}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            t, av, dv = (int(cell.strip()) for cell in row)
        except ValueError:
            raise IngestError(f"{name}:{lineno}: non-integer value in {row!r}") from None
        if av < 0 or dv < 0:
            raise IngestError(f"{name}:{lineno}: negative count")
        if prev_t is not None and t != prev_t + 1:
            raise IngestError(f"{name}:{lineno}: non-contiguous time index ({prev_t} -> {t})")
        prev_t = t
        a.append(av)
        d.append(dv)
    if not a:
        raise IngestError(f"{name}: no data rows")
    return CountPaths(np.array(a), np.array(d), {"source": name})


def ingest_counts(path) -> CountPaths:
    """Read and validate a ``t,A,D`` CSV; ``-`` reads standard input."""
    if path in (None, "-"):
        return parse_counts(sys.stdin, "<stdin>")
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestError(f"{path}: {exc.strerror}") from None
    with fh:
        return parse_counts(fh, str(path))


def counts_to_csv(paths: CountPaths) -> str:
    buf = io.StringIO()
    buf.write("t,A,D\n")
    for t, (a, d) in enumerate(zip(paths.arrivals.tolist(), paths.departures.tolist()), start=1):
        buf.write(f"{t},{a},{d}\n")
    return buf.getvalue()


def trace_to_csv(trace: ContinuousTrace) -> str:
    buf = io.StringIO()
    buf.write("kind,time\n")
    for t in trace.arrival_times.tolist():
        buf.write(f"arrival,{t!r}\n")
    for t in trace.departure_times.tolist():
        buf.write(f"departure,{t!r}\n")
    return buf.getvalue()


def parse_trace(fh: IO[str], horizon: float | None = None, name: str = "<input>") -> ContinuousTrace:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["kind", "time"]:
        raise IngestError(f"{name}:1: expected header 'kind,time'")
    arrivals, departures = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            kind, value = row[0].strip(), float(row[1])
        except (ValueError, IndexError):
            raise IngestError(f"{name}:{lineno}: malformed row {row!r}") from None
        if value < 0:
            raise IngestError(f"{name}:{lineno}: negative time")
        if kind == "arrival":
            arrivals.append(value)
        elif kind == "departure":
            departures.append(value)
        else:
            raise IngestError(f"{name}:{lineno}: unknown kind {kind!r}")
    arr = np.sort(np.array(arrivals, dtype=np.float64))
    dep = np.sort(np.array(departures, dtype=np.float64))
    if horizon is None:
        horizon = float(max(arr.max(initial=0.0), dep.max(initial=0.0)))
    return ContinuousTrace(arr, dep, float(horizon))


def ingest_trace(path, horizon: float | None = None) -> ContinuousTrace:
    if path in (None, "-"):
        return parse_trace(sys.stdin, horizon, "<stdin>")
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestError(f"{path}: {exc.strerror}") from None
    with fh:
        return parse_trace(fh, horizon, str(path))


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)
