import io
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple, Union

from pydantic import ValidationError

from events.event_data import NO_EVENTS_SENTINEL, EventRecord, PairYearAnnotation, Rejection
from util.errors import EventParseError, EventValidationError
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

WRAPPER_KEY = "historical_political_events"

Source = Union[bytes, str, io.IOBase]


@dataclass
class EventParseResult:
    events: List[EventRecord] = field(default_factory=list)
    annotations: List[PairYearAnnotation] = field(default_factory=list)
    rejections: List[Rejection] = field(default_factory=list)
    # (first index, duplicate index) for records sharing pair, year and name
    duplicates: List[Tuple[int, int]] = field(default_factory=list)
    n_records: int = 0


def _decode(data: bytes, source_name: Optional[str]) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        raise EventParseError(f"invalid UTF-8 at byte {e.start}", line=line, source=source_name,
                              offset=e.start) from None


def _read_text(source: Source, source_name: Optional[str] = None) -> str:
    if isinstance(source, (bytes, bytearray)):
        return _decode(bytes(source), source_name)
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return _decode(data, source_name)
    return data


def _unwrap(obj: Any) -> List[Any]:
    if isinstance(obj, dict) and WRAPPER_KEY in obj:
        inner = obj[WRAPPER_KEY]
        return list(inner) if isinstance(inner, list) else [inner]
    if isinstance(obj, list):
        out = []
        for item in obj:
            out.extend(_unwrap(item))
        return out
    return [obj]


def _iter_raw_records(text: str, source_name: Optional[str]) -> Iterator[Tuple[Optional[int], Any]]:
    stripped = text.lstrip()
    if not stripped:
        return
    if stripped[0] == "[":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise EventParseError(e.msg, line=e.lineno, source=source_name)
        for raw in _unwrap(obj):
            yield None, raw
        return

    # a single wrapper object may span several lines
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = None
    if isinstance(obj, dict):
        for raw in _unwrap(obj):
            yield None, raw
        return

    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise EventParseError(e.msg, line=line_no, source=source_name)
        for raw in _unwrap(obj):
            yield line_no, raw


def _is_sentinel(raw: Dict[str, Any]) -> bool:
    name = raw.get("event_name")
    return isinstance(name, str) and name.strip().lower() == NO_EVENTS_SENTINEL.lower()


def _first_error(e: ValidationError) -> Tuple[str, str]:
    err = e.errors()[0]
    loc = err.get("loc") or ("record",)
    reason = err.get("msg", "invalid")
    ctx = err.get("ctx") or {}
    if "error" in ctx:
        reason = str(ctx["error"])
    return str(loc[0]), reason


def _validate(index: int, raw: Any):
    if not isinstance(raw, dict):
        raise EventValidationError(index, "record", "record is not a JSON object")
    try:
        if _is_sentinel(raw):
            return PairYearAnnotation.model_validate(
                {k: raw.get(k) for k in ("year", "country1", "country2", "relationship", "evaluation_summary")
                 if raw.get(k) is not None})
        return EventRecord.model_validate(raw)
    except ValidationError as e:
        field_name, reason = _first_error(e)
        raise EventValidationError(index, field_name, reason)


def read_events(source: Source, strict: bool = True, source_name: Optional[str] = None) -> EventParseResult:
    """
    parse a JSON Lines or JSON array event corpus with a full validation report

    Args:
        source: bytes, text or a readable file object
        strict: abort on the first invalid record, otherwise collect rejections
        source_name: file name used in error messages

    Returns:
        EventParseResult with events in input order
    """
    result = EventParseResult()
    _read_into(result, source, strict, source_name, {})
    _log_report(result)
    return result


def _read_into(result: EventParseResult, source: Source, strict: bool, source_name: Optional[str],
               seen: Dict[Tuple, int]):
    # indices continue from result.n_records, duplicates are looked up in the shared ledger
    offset = result.n_records
    for local, (line_no, raw) in enumerate(_iter_raw_records(_read_text(source, source_name), source_name)):
        index = offset + local
        result.n_records += 1
        try:
            parsed = _validate(index, raw)
        except EventValidationError as e:
            if strict:
                if line_no is not None:
                    _logger.error("%s line %d: %s", source_name or "<events>", line_no, e)
                raise
            result.rejections.append(Rejection(index=e.index, field=e.field, reason=e.reason))
            continue
        if isinstance(parsed, PairYearAnnotation):
            result.annotations.append(parsed)
            continue
        key = (parsed.pair, parsed.year, parsed.event_name.strip().lower())
        if key in seen:
            result.duplicates.append((seen[key], index))
        else:
            seen[key] = index
        result.events.append(parsed)


def _log_report(result: EventParseResult):
    if result.rejections:
        _logger.warning("%d of %d event records rejected", len(result.rejections), result.n_records)
    if result.duplicates:
        _logger.info("%d duplicate events (same pair, year and name) passed through", len(result.duplicates))


def read_event_file(path: str, strict: bool = True) -> EventParseResult:
    with open(path, "rb") as f:
        return read_events(f, strict=strict, source_name=path)


def read_event_files(paths: Iterable[str], strict: bool = True) -> EventParseResult:
    """
    shards are concatenated, record indices and the duplicate ledger run on across shards
    """
    merged = EventParseResult()
    seen: Dict[Tuple, int] = {}
    for path in paths:
        with open(path, "rb") as f:
            _read_into(merged, f, strict, path, seen)
    _log_report(merged)
    return merged


def serialize_events(events: Iterable[EventRecord]) -> str:
    return "".join(e.model_dump_json(by_alias=True) + "\n" for e in events)


def write_events(path: str, events: Iterable[EventRecord]) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_events(events))
    return path


def write_validation_report(path: str, result: EventParseResult) -> str:
    rows = [{"record_index": r.index, "field": r.field, "reason": r.reason} for r in result.rejections]
    rows += [{"record_index": dup, "field": "event_name", "reason": f"duplicate of record {first}, passed through"}
             for first, dup in result.duplicates]
    rows.sort(key=lambda r: (r["record_index"], r["field"]))
    return write_table(path, rows, ["record_index", "field", "reason"])

