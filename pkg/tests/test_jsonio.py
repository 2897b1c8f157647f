"""Trace and snapshot stream encoding, decoding, and diffing."""
from __future__ import annotations

import json

import pytest

from diel.database import Column, Relation
from diel.errors import StreamError
from diel.jsonio import (
    SnapshotLine,
    TraceEntry,
    diff_snapshots,
    format_snapshot_line,
    format_trace,
    read_snapshots,
    read_trace,
    snapshot_rows,
)
from diel.runtime import LogEntry


class TestTrace:
    def test_reads_entries_with_line_numbers(self):
        text = ('{"input":"click","values":{"id":1},"timestamp":10.5}\n'
                '\n'
                '{"input":"click","values":{},"timestamp":11}\n')
        entries, warnings = read_trace(text)
        assert warnings == []
        assert entries == [
            TraceEntry(1, "click", {"id": 1}, 10.5),
            TraceEntry(3, "click", {}, 11.0),
        ]

    def test_decreasing_timestamp_warns_but_parses(self):
        text = ('{"input":"a","values":{},"timestamp":5}\n'
                '{"input":"a","values":{},"timestamp":4}\n')
        entries, warnings = read_trace(text)
        assert len(entries) == 2
        assert warnings == ["trace line 2: timestamp 4 is earlier than the previous line"]

    @pytest.mark.parametrize("line,fragment", [
        ("not json", "line 1"),
        ("[1,2]", "expected a JSON object"),
        ('{"values":{},"timestamp":1}', "missing input"),
        ('{"input":"a","timestamp":1}', "missing values"),
        ('{"input":"a","values":{}}', "missing timestamp"),
        ('{"input":1,"values":{},"timestamp":1}', "input must be a string"),
        ('{"input":"a","values":[],"timestamp":1}', "values must be an object"),
        ('{"input":"a","values":{},"timestamp":"1"}', "timestamp must be a number"),
        ('{"input":"a","values":{},"timestamp":true}', "timestamp must be a number"),
    ])
    def test_malformed_lines_raise_with_position(self, line, fragment):
        with pytest.raises(StreamError) as exc:
            read_trace(line + "\n")
        assert fragment in str(exc.value)

    def test_error_reports_the_physical_line_number(self):
        text = ('{"input":"a","values":{},"timestamp":1}\n'
                '\n'
                'garbage\n')
        with pytest.raises(StreamError) as exc:
            read_trace(text)
        assert "trace line 3" in str(exc.value)

    def test_format_round_trips_through_read(self):
        log = [
            LogEntry(1, "click", {"id": 1, "label": None}, 10.0),
            LogEntry(2, "move", {"x": 0.5}, 11.25),
        ]
        text = format_trace(log)
        entries, warnings = read_trace(text)
        assert warnings == []
        assert [(e.input_name, e.values, e.wallclock_ms) for e in entries] == [
            ("click", {"id": 1, "label": None}, 10.0),
            ("move", {"x": 0.5}, 11.25),
        ]

    def test_format_is_compact_jsonl(self):
        text = format_trace([LogEntry(1, "a", {"x": 1}, 2.0)])
        assert text == '{"input":"a","values":{"x":1},"timestamp":2.0}\n'


REL = Relation(
    (Column("id", "integer"), Column("score", "real"), Column("tag", "text")),
    [(2, 1.5, "b"), (1, 0.1, "a"), (2, 1.5, None)],
)


class TestSnapshots:
    def test_rows_are_keyed_by_column_and_canonically_sorted(self):
        assert snapshot_rows(REL) == [
            {"id": 1, "score": 0.1, "tag": "a"},
            {"id": 2, "score": 1.5, "tag": None},
            {"id": 2, "score": 1.5, "tag": "b"},
        ]

    def test_line_encoding_is_byte_pinned(self):
        line = format_snapshot_line(3, "out", Relation(REL.schema, [REL.rows[1]]))
        assert line == ('{"timestep":3,"output":"out",'
                        '"rows":[{"id":1,"score":0.1,"tag":"a"}]}')

    def test_reals_keep_a_fraction_integers_do_not(self):
        rel = Relation((Column("a", "integer"), Column("b", "real")), [(3, 3.0)])
        assert '"a":3,"b":3.0' in format_snapshot_line(1, "o", rel)

    def test_read_round_trips(self):
        text = format_snapshot_line(1, "o", REL) + "\n"
        lines = read_snapshots(text)
        assert lines == [SnapshotLine(1, "o", snapshot_rows(REL))]

    @pytest.mark.parametrize("line,fragment", [
        ("nope", "snapshot line 1"),
        ('{"output":"o","rows":[]}', "missing timestep"),
        ('{"timestep":true,"output":"o","rows":[]}', "timestep must be an integer"),
        ('{"timestep":1.5,"output":"o","rows":[]}', "timestep must be an integer"),
        ('{"timestep":1,"output":2,"rows":[]}', "output must be a string"),
        ('{"timestep":1,"output":"o","rows":[1]}', "rows must be objects"),
    ])
    def test_malformed_snapshot_lines_raise(self, line, fragment):
        with pytest.raises(StreamError) as exc:
            read_snapshots(line + "\n")
        assert fragment in str(exc.value)


def lines(*triples):
    return [SnapshotLine(ts, out, rows) for ts, out, rows in triples]


class TestDiff:
    def test_equal_streams_diff_to_none(self):
        a = lines((1, "o", [{"x": 1}, {"x": 2}]))
        b = lines((1, "o", [{"x": 2}, {"x": 1}]))  # row order is irrelevant
        assert diff_snapshots(a, b) is None

    def test_header_mismatch_names_both_sides(self):
        a = lines((1, "o", []))
        b = lines((2, "o", []))
        report = diff_snapshots(a, b)
        assert report == "line 1: timestep 1 output o vs timestep 2 output o"

    def test_row_bag_mismatch_lists_gains_and_losses(self):
        a = lines((4, "sel", [{"id": 1}]))
        b = lines((4, "sel", [{"id": 1}, {"id": 2}]))
        report = diff_snapshots(a, b)
        assert report == 'timestep 4, output sel: +1 row {"id": 2}'

    def test_duplicate_rows_count_in_the_bag(self):
        a = lines((1, "o", [{"x": 1}, {"x": 1}]))
        b = lines((1, "o", [{"x": 1}]))
        assert "-1 row" in diff_snapshots(a, b)

    def test_length_mismatch_points_at_the_first_extra_line(self):
        a = lines((1, "o", []))
        b = lines((1, "o", []), (2, "p", []))
        report = diff_snapshots(a, b)
        assert "1 vs 2 lines" in report
        assert "timestep 2" in report and "output p" in report

    def test_first_difference_wins(self):
        a = lines((1, "o", [{"x": 1}]), (2, "o", [{"x": 1}]))
        b = lines((1, "o", [{"x": 9}]), (9, "q", [{"x": 2}]))
        assert "timestep 1" in diff_snapshots(a, b)

    def test_row_values_distinguish_kinds(self):
        # 1 and 1.0 encode differently, so they do not collide in the bag
        a = lines((1, "o", [{"x": 1}]))
        b = lines((1, "o", [{"x": 1.0}]))
        assert json.dumps(1) != json.dumps(1.0)
        assert diff_snapshots(a, b) is not None
