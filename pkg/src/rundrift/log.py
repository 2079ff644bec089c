"""Event log model, XES/CSV readers and writers, and trace replay.

Traces are replayed in completion order to form the stream consumed by the
detectors. Timestamps are integer epoch milliseconds throughout.
"""
from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Sequence
from xml.sax.saxutils import quoteattr


class LogFormatError(ValueError):
    """Raised when an event log cannot be parsed."""


@dataclass(frozen=True)
class Event:
    label: str
    timestamp: int | None = None

    def __post_init__(self):
        if not self.label:
            raise ValueError("event label must be non-empty")


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise ValueError(f"trace {self.case_id!r} has no events")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.events)

    @property
    def completion_time(self) -> int | None:
        stamps = [e.timestamp for e in self.events if e.timestamp is not None]
        return max(stamps) if stamps else None

    @classmethod
    def from_labels(cls, labels: Iterable[str], case_id: str = "", timestamps=None) -> "Trace":
        labels = list(labels)
        if timestamps is None:
            timestamps = [None] * len(labels)
        return cls(case_id, tuple(Event(a, t) for a, t in zip(labels, timestamps)))


@dataclass
class EventLog:
    traces: list[Trace] = field(default_factory=list)

    @property
    def label_alphabet(self) -> set[str]:
        return {e.label for t in self.traces for e in t.events}

    def __len__(self):
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)


def parse_timestamp(value: str) -> int:
    """Parse an ISO-8601 string or integer epoch milliseconds to epoch ms.

    Naive datetimes are read as UTC.
    """
    value = value.strip()
    if value.lstrip("-").isdigit():
        return int(value)
    text = value[:-1] + "+00:00" if value.endswith(("Z", "z")) else value
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"unparseable timestamp {value!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp() * 1000))


def format_timestamp(ms: int) -> str:
    dt = datetime.fromtimestamp(ms / 1000, tz=timezone.utc)
    return dt.isoformat(timespec="milliseconds")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attributes(elem) -> dict[str, tuple[str, str]]:
    out = {}
    for child in elem:
        key = child.get("key")
        if key is not None:
            out[key] = (_local(child.tag), child.get("value", ""))
    return out


def parse_xes(source: IO[bytes] | bytes | str) -> EventLog:
    """Read the XES subset: ``trace`` elements holding ``event`` elements.

    Events keep document order within a trace. Only ``concept:name`` and
    ``time:timestamp`` are read; other attributes are ignored.
    """
    if isinstance(source, (bytes, str)):
        source = io.BytesIO(source.encode() if isinstance(source, str) else source)
    try:
        root = ET.parse(source).getroot()
    except ET.ParseError as exc:
        line, col = exc.position
        raise LogFormatError(f"malformed XML at line {line}, column {col}: {exc}") from None

    log = EventLog()
    for t_idx, trace_el in enumerate(el for el in root if _local(el.tag) == "trace"):
        attrs = _attributes(trace_el)
        case_id = attrs.get("concept:name", ("", str(t_idx)))[1]
        events = []
        for e_idx, ev_el in enumerate(el for el in trace_el if _local(el.tag) == "event"):
            ev_attrs = _attributes(ev_el)
            name = ev_attrs.get("concept:name")
            if name is None or not name[1]:
                raise LogFormatError(f"trace {t_idx}: event {e_idx} has no concept:name")
            ts = None
            if "time:timestamp" in ev_attrs:
                try:
                    ts = parse_timestamp(ev_attrs["time:timestamp"][1])
                except ValueError as exc:
                    raise LogFormatError(f"trace {t_idx}: event {e_idx}: {exc}") from None
            events.append(Event(name[1], ts))
        if events:
            log.traces.append(Trace(case_id, tuple(events)))
    return log


CSV_COLUMNS = ("case", "activity", "timestamp")


def parse_csv(source: IO[bytes] | bytes | str) -> EventLog:
    """Read a ``case,activity[,timestamp]`` CSV log.

    Rows sharing a case form one trace, sorted by timestamp (stable on ties).
    Traces appear in order of each case's first row.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    reader = csv.DictReader(io.StringIO(text.lstrip("﻿")))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in ("case", "activity") if c not in header]
    if missing:
        raise LogFormatError(f"missing required column(s): {', '.join(missing)}")
    reader.fieldnames = header
    has_ts = "timestamp" in header

    cases: dict[str, list[tuple[int | None, int, str]]] = {}
    for row_no, row in enumerate(reader, start=2):
        label = (row.get("activity") or "").strip()
        if not label:
            raise LogFormatError(f"row {row_no}: empty activity")
        ts = None
        if has_ts and (row.get("timestamp") or "").strip():
            try:
                ts = parse_timestamp(row["timestamp"])
            except ValueError as exc:
                raise LogFormatError(f"row {row_no}: {exc}") from None
        cases.setdefault(row["case"], []).append((ts, row_no, label))

    log = EventLog()
    for case_id, rows in cases.items():
        if all(ts is not None for ts, _, _ in rows):
            rows.sort(key=lambda r: r[0])
        log.traces.append(Trace(case_id, tuple(Event(lbl, ts) for ts, _, lbl in rows)))
    return log


def stream_traces(log: EventLog | Sequence[Trace]) -> list[Trace]:
    """Order traces by completion time; untimed traces keep log order.

    Python's sort is stable, so ties keep their original relative order.
    Traces without any timestamp sort as if completed at their predecessor's
    time, which leaves fully untimed logs in their original order.
    """
    traces = list(log)
    keys = []
    last = None
    for t in traces:
        ct = t.completion_time
        if ct is not None:
            last = ct
        keys.append(last if ct is None else ct)
    if all(k is None for k in keys):
        return traces
    floor = min(k for k in keys if k is not None)
    order = sorted(range(len(traces)), key=lambda i: floor if keys[i] is None else keys[i])
    return [traces[i] for i in order]


def write_csv(log: EventLog, out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t in log.traces:
        for e in t.events:
            writer.writerow([t.case_id, e.label, "" if e.timestamp is None else e.timestamp])


def write_xes(log: EventLog, out: IO[str]) -> None:
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write('<log xes.version="1.0" xmlns="http://www.xes-standard.org/">\n')
    for t in log.traces:
        out.write("  <trace>\n")
        out.write(f'    <string key="concept:name" value={quoteattr(t.case_id)}/>\n')
        for e in t.events:
            out.write("    <event>\n")
            out.write(f'      <string key="concept:name" value={quoteattr(e.label)}/>\n')
            if e.timestamp is not None:
                out.write(f'      <date key="time:timestamp" value="{format_timestamp(e.timestamp)}"/>\n')
            out.write("    </event>\n")
        out.write("  </trace>\n")
    out.write("</log>\n")
