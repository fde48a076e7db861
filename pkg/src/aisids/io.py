"""CSV ingestion and canonical JSON artifacts."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

from .dca import SignalFrame
from .errors import InputError


def read_records(path) -> list[dict[str, str]]:
    """Read a header-bearing CSV into dicts, rejecting ragged or blank-valued rows.

    Rows are numbered from 1 (the first data row after the header).
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: empty file, header expected")
        header = [h.strip() for h in header]
        if len(set(header)) != len(header) or any(not h for h in header):
            raise InputError(f"{path}: header has blank or duplicate column names")
        records = []
        for n, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: row {n} (line {reader.line_num}) has {len(row)} fields, "
                                 f"expected {len(header)}")
            if any(v.strip() == "" for v in row):
                raise InputError(f"{path}: row {n} (line {reader.line_num}) has an empty field")
            records.append(dict(zip(header, (v.strip() for v in row))))
    return records


def record_ids(records) -> list[str]:
    """Use the ``id`` column when present, else the 0-based row index."""
    return [r["id"] if "id" in r else str(i) for i, r in enumerate(records)]


def read_frames(path, columns=("timestamp", "pamp", "danger", "safe", "antigens")) -> list[SignalFrame]:
    """Read a signal stream; ``columns`` maps onto timestamp, pamp, danger, safe, antigen list."""
    ts_col, p_col, d_col, s_col, a_col = columns
    frames = []
    prev = None
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise InputError(f"{path}: missing columns {missing}")
        for row in reader:
            line = reader.line_num
            try:
                ts = float(row[ts_col])
                frame = SignalFrame(ts, float(row[p_col]), float(row[d_col]), float(row[s_col]),
                                    tuple(a for a in (row[a_col] or "").split(";") if a))
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}: line {line}: {exc}") from None
            if prev is not None and not ts > prev:
                raise InputError(f"{path}: line {line}: timestamp {row[ts_col]} does not increase")
            prev = ts
            frames.append(frame)
    return frames


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def write_json(path, doc):
    write_text(path, dumps(doc))


def write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
