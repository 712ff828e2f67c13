import io
import json

import pytest

from events.event_data import EconomicEvent, EventRecord, QuadClass, Relationship
from events.event_filter import EventFilter, filter_events
from events.event_reader import read_event_file, read_event_files, read_events, serialize_events, write_events, \
    write_validation_report
from tests.conftest import raw_event
from util.errors import EventParseError, EventValidationError


def jsonl(records) -> str:
    return "".join(json.dumps(r) + "\n" for r in records)


def test_reads_json_lines():
    text = jsonl([raw_event(goldstein=3.0), raw_event(goldstein=-2.0, root=11, code=112)])
    result = read_events(text)
    assert result.n_records == 2
    assert [e.goldstein for e in result.events] == [3.0, -2.0]
    assert result.events[1].cameo_quad_class == QuadClass.VerbalConflict
    assert result.rejections == []


def test_reads_array_and_wrapper_object():
    records = [raw_event(), raw_event(country1="bbb", goldstein=1.0)]
    from_array = read_events(json.dumps(records))
    from_wrapper = read_events(json.dumps({"historical_political_events": records}, indent=2))
    assert [e.pair for e in from_array.events] == [e.pair for e in from_wrapper.events]
    assert from_wrapper.events[1].country1 == "BBB"


def test_wrapper_lines_are_unwrapped():
    text = jsonl([{"historical_political_events": [raw_event(year=2001), raw_event(year=2002)]},
                  {"historical_political_events": [raw_event(year=2003)]}])
    assert [e.year for e in read_events(text).events] == [2001, 2002, 2003]


def test_sentinel_becomes_annotation():
    sentinel = {"year": 1999, "country1": "AAA", "country2": "USA",
                "event_name": "No Major Bilateral Events Found",
                "relationship": "Limited Contact / Cool Relationship"}
    result = read_events(jsonl([sentinel, raw_event()]))
    assert len(result.events) == 1
    assert len(result.annotations) == 1
    assert result.annotations[0].relationship == Relationship.LimitedContact


def test_loose_enum_spellings():
    record = raw_event(economic="economic sanctions", CAMEO_quad_class="verbal cooperation")
    event = read_events(jsonl([record])).events[0]
    assert event.economic_event == EconomicEvent.EconomicSanctions


def test_string_codes_are_accepted():
    event = read_events(jsonl([raw_event(root="04", code="043")])).events[0]
    assert (event.cameo_root_code, event.cameo_event_code) == (4, 43)


def test_strict_mode_stops_at_first_invalid_record():
    text = jsonl([raw_event(), raw_event(goldstein=11.0)])
    with pytest.raises(EventValidationError) as info:
        read_events(text, strict=True)
    assert info.value.index == 1
    assert "goldstein" in info.value.field.lower()


@pytest.mark.parametrize("bad, field", [
    (raw_event(goldstein=-10.5), "goldstein"),
    (raw_event(country1="USA"), "country2"),
    (raw_event(root=21, code=210), "root"),
    (raw_event(root=4, code=52), "event_code"),
    (raw_event(root=12, code=120, CAMEO_quad_class="Verbal Cooperation"), "root"),
    (raw_event(year=2000.5), "year"),
])
def test_lenient_mode_collects_rejections(bad, field):
    result = read_events(jsonl([raw_event(), bad, raw_event(year=2001)]), strict=False)
    assert len(result.events) == 2
    assert len(result.rejections) == 1
    rejection = result.rejections[0]
    assert rejection.index == 1
    assert field in rejection.field.lower()


def test_malformed_line_reports_line_number():
    text = jsonl([raw_event()]) + "{not json\n"
    with pytest.raises(EventParseError) as info:
        read_events(text, source_name="corpus.jsonl")
    assert info.value.line == 2
    assert "corpus.jsonl" in str(info.value)


def test_empty_input_has_no_events():
    result = read_events("")
    assert result.events == [] and result.n_records == 0


def test_duplicates_pass_through_and_are_reported(tmp_path):
    record = raw_event(name="Summit")
    result = read_events(jsonl([record, record, raw_event(name="Other")]))
    assert len(result.events) == 3
    assert result.duplicates == [(0, 1)]
    path = write_validation_report(str(tmp_path / "report.csv"), result)
    assert "duplicate of record 0" in open(path).read()


def test_serialize_then_parse_is_identity(tmp_path):
    events = read_events(jsonl([raw_event(), raw_event(goldstein=-4.5, root=17, code=172,
                                                       relationship="Crisis / Intense Confrontation")])).events
    path = write_events(str(tmp_path / "events.jsonl"), events)
    assert read_event_file(path).events == events
    assert serialize_events(events) == open(path, encoding="utf-8").read()


def test_record_indices_run_across_shards(tmp_path):
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    first.write_text(jsonl([raw_event(), raw_event(year=2001)]))
    second.write_text(jsonl([raw_event(goldstein=12.0)]))
    result = read_event_files([str(first), str(second)], strict=False)
    assert result.n_records == 3
    assert result.rejections[0].index == 2


def test_duplicates_are_found_across_shards(tmp_path):
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    first.write_text(jsonl([raw_event(name="Summit"), raw_event(name="Other")]))
    second.write_text(jsonl([raw_event(year=2001), raw_event(name="Summit")]))
    result = read_event_files([str(first), str(second)])
    assert result.duplicates == [(0, 3)]
    assert len(result.events) == 4


def test_invalid_utf8_is_a_parse_error(tmp_path):
    valid = jsonl([raw_event()]).encode("utf-8")
    data = valid + b'{"country1": "\xff\xfe"}\n'
    with pytest.raises(EventParseError) as info:
        read_events(data, source_name="corpus.jsonl")
    assert info.value.offset == len(valid) + len(b'{"country1": "')
    assert info.value.line == 2
    assert "corpus.jsonl" in str(info.value)

    path = tmp_path / "bad.jsonl"
    path.write_bytes(data)
    with pytest.raises(EventParseError):
        read_event_files([str(path)])


def test_bytes_with_bom():
    data = ("﻿" + jsonl([raw_event()])).encode("utf-8")
    assert len(read_events(io.BytesIO(data)).events) == 1


def test_pair_is_unordered():
    a = EventRecord.model_validate(raw_event(country1="ZZZ", country2="AAA"))
    assert a.pair == ("AAA", "ZZZ")


def test_instrument_filter():
    events = [EventRecord.model_validate(r) for r in [
        raw_event(goldstein=-2.0, root=11, code=112),
        raw_event(goldstein=-2.0, root=11, code=112, economic="Tariffs"),
        raw_event(goldstein=-9.0, root=19, code=190),
        raw_event(goldstein=3.0, root=4, code=40),
        raw_event(goldstein=0.0, root=9, code=90),
    ]]
    selected = filter_events(events, EventFilter.instrument())
    assert [(e.cameo_root_code, e.goldstein) for e in selected] == [(11, -2.0), (9, 0.0)]


def test_empty_filter_keeps_everything():
    events = [EventRecord.model_validate(raw_event(goldstein=g)) for g in (1.0, 2.0)]
    assert filter_events(events, EventFilter()) == events


def test_filter_bounds_out_of_order():
    with pytest.raises(ValueError):
        EventFilter(root_code_range=(18, 9))
