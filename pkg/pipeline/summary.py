import logging
from typing import Dict, Iterable, List, Sequence

import numpy as np
import pandas as pd

from events.event_data import EconomicEvent, EventRecord, QuadClass
from events.event_filter import EventFilter, filter_events
from relations.country_measures import MeasureSeries
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

TOTAL = "total"
EXTREME_COUNT = 5
PERCENTILES = (5, 25, 75, 95)


def decade_of(year: int) -> int:
    return year - year % 10


def _events_frame(events: Iterable[EventRecord]) -> pd.DataFrame:
    rows = [{"decade": decade_of(e.year), "quad": e.cameo_quad_class.name, "economic": e.economic_event.name,
             "root": e.cameo_root_code, "goldstein": e.goldstein} for e in events]
    return pd.DataFrame(rows, columns=["decade", "quad", "economic", "root", "goldstein"])


def event_columns() -> List[str]:
    return (["decade", "events"] + [f"quad_{q.name}" for q in QuadClass]
            + ["goldstein_mean", "goldstein_sd", "goldstein_min", "goldstein_max", "goldstein_median"]
            + [f"economic_{e.name}" for e in EconomicEvent])


def _event_row(label, part: pd.DataFrame) -> Dict:
    goldstein = part["goldstein"]
    row = {"decade": label, "events": len(part),
           "goldstein_mean": goldstein.mean(), "goldstein_sd": goldstein.std(ddof=1),
           "goldstein_min": goldstein.min(), "goldstein_max": goldstein.max(),
           "goldstein_median": goldstein.median()}
    quads = part["quad"].value_counts()
    economic = part["economic"].value_counts()
    row.update({f"quad_{q.name}": int(quads.get(q.name, 0)) for q in QuadClass})
    row.update({f"economic_{e.name}": int(economic.get(e.name, 0)) for e in EconomicEvent})
    return row


def event_statistics(events: Iterable[EventRecord]) -> List[Dict]:
    """
    one row per decade and a total row: counts by quad class and economic class, Goldstein moments
    """
    frame = _events_frame(events)
    if frame.empty:
        _logger.warning("event corpus is empty, statistics hold the total row only")
    rows = [_event_row(int(decade), part) for decade, part in frame.groupby("decade", sort=True)]
    rows.append(_event_row(TOTAL, frame))
    return rows


def instrument_statistics(events: Sequence[EventRecord], event_filter: EventFilter) -> List[Dict]:
    """
    events entering the instrument by CAMEO root, with a total row
    """
    frame = _events_frame(filter_events(list(events), event_filter))
    total = len(frame)
    rows = []
    for root, part in frame.groupby("root", sort=True):
        rows.append({"root": int(root), "events": len(part), "share": len(part) / total,
                     "goldstein_mean": part["goldstein"].mean()})
    rows.append({"root": TOTAL, "events": total, "share": 1.0 if total else np.nan,
                 "goldstein_mean": frame["goldstein"].mean() if total else np.nan})
    return rows


def _measure_frame(series: Iterable[MeasureSeries]) -> pd.DataFrame:
    rows = [{"country": m.country, "year": m.year, "decade": decade_of(m.year), "value": m.value} for m in series]
    return pd.DataFrame(rows, columns=["country", "year", "decade", "value"])


def measure_statistics(series: Iterable[MeasureSeries]) -> List[Dict]:
    """
    distribution of country-year measure values per decade
    """
    frame = _measure_frame(series)
    rows = []
    for decade, part in frame.groupby("decade", sort=True):
        values = part["value"].to_numpy()
        row = {"decade": int(decade), "mean": values.mean(), "median": float(np.median(values)),
               "sd": values.std(ddof=1) if len(values) > 1 else np.nan, "min": values.min(), "max": values.max(),
               "n_countries": part["country"].nunique()}
        row.update({f"p{q}": float(np.percentile(values, q)) for q in PERCENTILES})
        rows.append(row)
    return rows


def measure_extremes(series: Iterable[MeasureSeries], count: int = EXTREME_COUNT) -> List[Dict]:
    """
    bottom and top countries by their decade-average measure, ties broken by country code
    """
    frame = _measure_frame(series)
    rows = []
    averages = frame.groupby(["decade", "country"], sort=True)["value"].mean().reset_index()
    for decade, part in averages.groupby("decade", sort=True):
        ordered = part.sort_values(["value", "country"], kind="mergesort")
        for rank, row in enumerate(ordered.head(count).itertuples(index=False), start=1):
            rows.append({"decade": int(decade), "side": "bottom", "rank": rank, "country": row.country,
                         "average": row.value})
        top = part.sort_values(["value", "country"], ascending=[False, True], kind="mergesort")
        for rank, row in enumerate(top.head(count).itertuples(index=False), start=1):
            rows.append({"decade": int(decade), "side": "top", "rank": rank, "country": row.country,
                         "average": row.value})
    return rows


def write_event_statistics(path: str, rows: List[Dict]) -> str:
    return write_table(path, rows, event_columns())


def write_instrument_statistics(path: str, rows: List[Dict]) -> str:
    return write_table(path, rows, ["root", "events", "share", "goldstein_mean"])


def write_measure_statistics(path: str, rows: List[Dict]) -> str:
    return write_table(path, rows, ["decade", "mean", "median", "sd", "min", "max",
                                    *[f"p{q}" for q in PERCENTILES], "n_countries"])


def write_measure_extremes(path: str, rows: List[Dict]) -> str:
    return write_table(path, rows, ["decade", "side", "rank", "country", "average"])
