import io

import pytest

from rundrift.log import (Event, EventLog, LogFormatError, Trace, format_timestamp,
                          parse_csv, parse_timestamp, parse_xes, stream_traces,
                          write_csv, write_xes)

XES = b"""<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0" xmlns="http://www.xes-standard.org/">
  <trace>
    <string key="concept:name" value="c1"/>
    <event><string key="concept:name" value="a"/><date key="time:timestamp" value="2020-01-01T00:00:03Z"/></event>
    <event><string key="concept:name" value="b"/><date key="time:timestamp" value="2020-01-01T00:00:01Z"/></event>
  </trace>
  <trace>
    <string key="concept:name" value="c2"/>
    <event><string key="concept:name" value="x"/><date key="time:timestamp" value="2020-01-01T00:00:02Z"/></event>
  </trace>
</log>
"""


def test_timestamp_forms():
    assert parse_timestamp("1000") == 1000
    assert parse_timestamp("1970-01-01T00:00:01Z") == 1000
    assert parse_timestamp("1970-01-01T01:00:01+01:00") == 1000
    # naive strings are UTC
    assert parse_timestamp("1970-01-01T00:00:01") == 1000
    with pytest.raises(ValueError):
        parse_timestamp("yesterday")


def test_timestamp_round_trip():
    ms = 1_600_000_000_123
    assert parse_timestamp(format_timestamp(ms)) == ms


def test_xes_keeps_document_order_and_case_ids():
    log = parse_xes(XES)
    assert [t.case_id for t in log] == ["c1", "c2"]
    # events are not re-sorted by timestamp inside a trace
    assert log.traces[0].labels == ("a", "b")
    assert log.label_alphabet == {"a", "b", "x"}


def test_xes_stream_order_uses_max_timestamp():
    ordered = stream_traces(parse_xes(XES))
    # c1 completes at 00:03 (its max), after c2 at 00:02
    assert [t.case_id for t in ordered] == ["c2", "c1"]


def test_xes_malformed_reports_position():
    with pytest.raises(LogFormatError, match="line"):
        parse_xes(b"<log><trace><event></trace></log>")


def test_xes_event_without_name():
    bad = b'<log><trace><event><string key="org:resource" value="r"/></event></trace></log>'
    with pytest.raises(LogFormatError, match="trace 0: event 0"):
        parse_xes(bad)


def test_csv_groups_and_sorts_within_case():
    text = "case,activity,timestamp\n1,b,20\n2,x,5\n1,a,10\n"
    log = parse_csv(text)
    assert [t.case_id for t in log] == ["1", "2"]
    assert log.traces[0].labels == ("a", "b")


def test_csv_without_timestamps_keeps_row_order():
    log = parse_csv("case,activity\n1,b\n1,a\n2,c\n")
    assert log.traces[0].labels == ("b", "a")
    assert [t.case_id for t in stream_traces(log)] == ["1", "2"]


@pytest.mark.parametrize("text, msg", [
    ("case,label\n1,a\n", "activity"),
    ("case,activity\n1,\n", "row 2"),
    ("case,activity,timestamp\n1,a,soon\n", "row 2"),
])
def test_csv_errors(text, msg):
    with pytest.raises(LogFormatError, match=msg):
        parse_csv(text)


def test_stream_is_stable_on_ties():
    traces = [Trace.from_labels("a", f"c{i}", [7]) for i in range(5)]
    assert stream_traces(traces) == traces


def test_untimed_trace_follows_predecessor():
    t1 = Trace.from_labels("a", "t1", [30])
    t2 = Trace.from_labels("b", "t2")
    t3 = Trace.from_labels("c", "t3", [10])
    assert [t.case_id for t in stream_traces([t1, t2, t3])] == ["t3", "t1", "t2"]


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        Trace("c", ())
    with pytest.raises(ValueError):
        Event("")


@pytest.mark.parametrize("writer, reader", [(write_csv, parse_csv), (write_xes, parse_xes)])
def test_writers_round_trip(writer, reader):
    log = EventLog([Trace.from_labels("ab", "1", [1000, 2000]),
                    Trace.from_labels(["c&<d>"], "2", [3000])])
    buf = io.StringIO()
    writer(log, buf)
    back = reader(buf.getvalue())
    assert back == log
