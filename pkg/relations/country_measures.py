import logging
from collections import defaultdict
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from events.event_data import EventRecord
from events.event_filter import EventFilter, filter_events
from relations.pair_scores import DynamicPairScore, YearlyPairScore, yearly_pair_scores
from relations.weights import SHARE_SUM_TOLERANCE, WeightsLike, as_weight_book
from util.errors import ConfigError, DataError
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

# shares may sum to 1 + SHARE_SUM_TOLERANCE, so a measure may exceed its bound by as much
BOUND_TOLERANCE = 2.0 * SHARE_SUM_TOLERANCE


class MeasureKind(str, Enum):
    DynamicRelation = "DynamicRelation"
    YearlyEventScore = "YearlyEventScore"
    Instrument = "Instrument"
    SanctionsExposure = "SanctionsExposure"
    External = "External"


class MeasureSeries(BaseModel):
    model_config = ConfigDict(frozen=True)

    country: str
    year: int
    value: float
    kind: MeasureKind

    @model_validator(mode="after")
    def _check_range(self) -> 'MeasureSeries':
        if self.kind == MeasureKind.DynamicRelation and abs(self.value) > 1.0 + BOUND_TOLERANCE:
            raise ValueError(f"dynamic relation {self.value} outside [-1, 1]")
        if self.kind == MeasureKind.SanctionsExposure and not -BOUND_TOLERANCE <= self.value <= 1.0 + BOUND_TOLERANCE:
            raise ValueError(f"sanctions exposure {self.value} outside [0, 1]")
        return self


def _measure(country: str, year: int, value: float, kind: MeasureKind) -> MeasureSeries:
    try:
        return MeasureSeries(country=country, year=year, value=value, kind=kind)
    except ValidationError as e:
        raise DataError(f"{kind.value} measure for {country} {year}: {e.errors()[0]['msg']}") from None


class SanctionFlag(BaseModel):
    model_config = ConfigDict(frozen=True)

    major: str
    country: str
    year: int
    indicator: int = Field(ge=0, le=1)


def _aggregate(items: Iterable[Tuple[Tuple[str, str], int, float]], weights: WeightsLike,
               partners: FrozenSet[str], kind: MeasureKind) -> List[MeasureSeries]:
    book = as_weight_book(weights)
    totals: Dict[Tuple[str, int], float] = defaultdict(float)
    for (a, b), year, value in sorted(items):
        for country, partner in ((a, b), (b, a)):
            if partner not in partners or partner == country:
                continue
            totals[(country, year)] += value * book.require(partner, year)
    return [_measure(c, y, totals[(c, y)], kind) for c, y in sorted(totals)]


def _partner_set(majors: Iterable[str], partners: Optional[Iterable[str]]) -> FrozenSet[str]:
    majors = frozenset(majors)
    if partners is None:
        return majors
    partners = frozenset(partners)
    unknown = partners - majors
    if unknown:
        raise ConfigError(f"partner group contains non-major nations: {sorted(unknown)}")
    return partners


def aggregate_country(pair_scores: Iterable[DynamicPairScore], weights: WeightsLike, majors: Iterable[str],
                      partners: Optional[Iterable[str]] = None) -> List[MeasureSeries]:
    """
    GDP-weighted sum of a country's dynamic scores with the major nations

    Args:
        pair_scores: dynamic pair states
        weights: GDP shares per year, every major with a live score needs one
        majors: major nation codes
        partners: optional subset of majors, e.g. the US alone for a partner split

    Returns:
        DynamicRelation series ordered by country then year
    """
    items = [(s.pair, s.year, s.s) for s in pair_scores]
    return _aggregate(items, weights, _partner_set(majors, partners), MeasureKind.DynamicRelation)


def aggregate_yearly(yearly: Iterable[YearlyPairScore], weights: WeightsLike, majors: Iterable[str],
                     partners: Optional[Iterable[str]] = None) -> List[MeasureSeries]:
    """
    unsmoothed variant, equal to aggregate_country with delta = 1 when pairs have events every year
    """
    items = [(s.pair, s.year, s.s_tilde) for s in yearly]
    return _aggregate(items, weights, _partner_set(majors, partners), MeasureKind.YearlyEventScore)


def build_instrument(events: Iterable[EventRecord], weights: WeightsLike, majors: Iterable[str],
                     event_filter: Optional[EventFilter] = None) -> List[MeasureSeries]:
    """
    GDP-weighted yearly mean score of non-economic mild conflict events
    country-years without such events get no row
    """
    event_filter = event_filter or EventFilter.instrument()
    events = list(events)
    selected = filter_events(events, event_filter)
    _logger.info("%d of %d events enter the instrument", len(selected), len(events))
    items = [(s.pair, s.year, s.s_tilde) for s in yearly_pair_scores(selected)]
    return _aggregate(items, weights, frozenset(majors), MeasureKind.Instrument)


def build_sanctions_measure(flags: Iterable[SanctionFlag], weights: WeightsLike,
                            majors: Optional[Iterable[str]] = None) -> List[MeasureSeries]:
    """
    GDP-weighted count of major nations sanctioning a country in a year
    """
    book = as_weight_book(weights)
    major_set = frozenset(majors) if majors is not None else None
    totals: Dict[Tuple[str, int], float] = defaultdict(float)
    for flag in sorted(flags, key=lambda f: (f.country, f.year, f.major)):
        if major_set is not None and flag.major not in major_set:
            raise ConfigError(f"unknown major nation code '{flag.major}' in sanction flags")
        share = book.share(flag.major, flag.year)
        if share is None:
            raise ConfigError(f"unknown major nation code '{flag.major}' for {flag.year}: no weight")
        totals[(flag.country, flag.year)] += flag.indicator * share
    return [_measure(c, y, totals[(c, y)], MeasureKind.SanctionsExposure) for c, y in sorted(totals)]


def measures_to_frame(series: Iterable[MeasureSeries], column: str) -> pd.DataFrame:
    rows = [{"country": m.country, "year": m.year, column: m.value} for m in series]
    return pd.DataFrame(rows, columns=["country", "year", column])


def write_measures(path: str, series: Iterable[MeasureSeries]) -> str:
    rows = [{"country": m.country, "year": m.year, "kind": m.kind.value, "value": m.value}
            for m in sorted(series, key=lambda m: (m.country, m.year))]
    return write_table(path, rows, ["country", "year", "kind", "value"])


def read_measures(path: str, kind: Optional[MeasureKind] = None) -> List[MeasureSeries]:
    """
    read a (country, year, [kind,] value) csv, a missing kind column means External
    """
    try:
        frame = pd.read_csv(path, dtype={"country": str})
    except FileNotFoundError:
        raise ConfigError(f"measure file not found: {path}")
    for column in ("country", "year", "value"):
        if column not in frame.columns:
            raise DataError(f"{path}: missing column '{column}'")
    frame = frame.dropna(subset=["country", "year", "value"])
    series = []
    for row in frame.itertuples(index=False):
        row_kind = kind or MeasureKind(getattr(row, "kind", MeasureKind.External.value))
        series.append(_measure(str(row.country), int(row.year), float(row.value), row_kind))
    return series


def read_sanction_flags(path: str) -> List[SanctionFlag]:
    try:
        frame = pd.read_csv(path, dtype={"major": str, "country": str})
    except FileNotFoundError:
        raise ConfigError(f"sanctions file not found: {path}")
    for column in ("major", "country", "year", "sanctioned"):
        if column not in frame.columns:
            raise DataError(f"{path}: missing column '{column}'")
    frame = frame.dropna(subset=["major", "country", "year", "sanctioned"])
    bad = ~frame["sanctioned"].isin([0, 1])
    if bad.any():
        raise DataError(f"{path}: sanction indicators must be 0 or 1")
    return [SanctionFlag(major=str(r.major), country=str(r.country), year=int(r.year), indicator=int(r.sanctioned))
            for r in frame.itertuples(index=False)]
