import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from panel.panel_frame import PanelFrame
from relations.country_measures import MeasureSeries
from util.errors import ConfigError, DataError
from util.iterutils import ordered_map
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

DECADE_LENGTH = 10
DEFAULT_WINDOW = 25
UNIT_CONVENTION = "log points x 100"
MISSING_FLAG = "missing_measure"

MeasurePanel = Dict[str, Dict[int, float]]
Contemporaneous = Literal["printed", "end_of_decade"]


@dataclass
class AccountingInputs:
    """
    transitory_irf and permanent_25 are in log points x 100, measure maps country -> year -> p
    """
    transitory_irf: np.ndarray
    permanent_25: float
    measure: MeasurePanel
    window: int = DEFAULT_WINDOW
    first_year: Optional[int] = None

    def __post_init__(self):
        self.transitory_irf = np.asarray(self.transitory_irf, dtype=float)
        if self.window < 1:
            raise ConfigError(f"accounting window must be at least 1, got {self.window}")
        if self.first_year is None:
            years = [y for series in self.measure.values() for y in series]
            self.first_year = min(years) if years else 0

    def irf_at(self, k: int) -> float:
        """
        transitory response at lag k, zero beyond the estimated horizon
        """
        if 0 <= k < len(self.transitory_irf):
            return float(self.transitory_irf[k])
        return 0.0


class DecadeEffect(BaseModel):
    model_config = ConfigDict(frozen=True)

    country: str
    decade: int
    contemporaneous: float
    long_run: float
    start_flagged: bool = False


class CounterfactualPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    country: str
    year: int
    dy_geo: float
    pct: float
    flags: str = ""


def measure_panel(series: Iterable[MeasureSeries]) -> MeasurePanel:
    panel: MeasurePanel = {}
    for m in series:
        panel.setdefault(m.country, {})[m.year] = m.value
    return panel


def measure_panel_from_frame(frame: PanelFrame, column: str) -> MeasurePanel:
    values = frame.values(column)
    panel: MeasurePanel = {}
    for country, year, value in zip(frame.country_array, frame.year_array, values):
        if not np.isnan(value):
            panel.setdefault(str(country), {})[int(year)] = float(value)
    return panel


def decade_effects(inputs: AccountingInputs, decade_start: int,
                   contemporaneous: Contemporaneous = "printed") -> Tuple[List[DecadeEffect], List[str]]:
    """
    contemporaneous and long-run growth effects of each country's measure changes over one decade

    contemporaneous is sum_{t=0}^{9} a_t dp_{start+t} ("printed") or the end-of-decade convolution
    sum_{s=0}^{9} a_{9-s} dp_{start+s}; long_run is permanent_25 (p_{start+9} - p_start)
    a country needs p at every year of the decade, dp at the first year counts as 0 (flagged)
    when the preceding year is missing

    Returns:
        effects for complete countries and the sorted list of excluded countries
    """
    if contemporaneous not in ("printed", "end_of_decade"):
        raise ConfigError(f"unknown contemporaneous convention '{contemporaneous}'")
    decade = range(decade_start, decade_start + DECADE_LENGTH)
    effects, excluded = [], []
    for country in sorted(inputs.measure):
        p = inputs.measure[country]
        if not all(y in p for y in decade):
            excluded.append(country)
            continue
        flagged = decade_start - 1 not in p
        changes = [0.0 if (y == decade_start and flagged) else p[y] - p[y - 1] for y in decade]
        if contemporaneous == "printed":
            contemp = sum(inputs.irf_at(t) * changes[t] for t in range(DECADE_LENGTH))
        else:
            contemp = sum(inputs.irf_at(DECADE_LENGTH - 1 - s) * changes[s] for s in range(DECADE_LENGTH))
        long_run = inputs.permanent_25 * (p[decade[-1]] - p[decade_start])
        effects.append(DecadeEffect(country=country, decade=decade_start, contemporaneous=contemp,
                                    long_run=long_run, start_flagged=flagged))
    if not effects:
        raise DataError(f"no country has complete measure data for the decade starting {decade_start}")
    if excluded:
        _logger.info("decade %d: %d countries excluded for gaps", decade_start, len(excluded))
    return effects, excluded


def median_series(measure: MeasurePanel) -> Dict[int, float]:
    """
    cross-country median per year, even counts average the two middle values
    """
    by_year: Dict[int, List[float]] = {}
    for series in measure.values():
        for year, value in series.items():
            by_year.setdefault(year, []).append(value)
    return {year: float(np.median(by_year[year])) for year in sorted(by_year)}


def percent_difference(dy_geo: float) -> float:
    return 100.0 * (math.exp(dy_geo / 100.0) - 1.0)


def counterfactual_path(inputs: AccountingInputs, country: str,
                        median: Optional[Dict[int, float]] = None) -> List[CounterfactualPoint]:
    """
    contribution of the country's gap to the median measure to its output in every observed year

    dy_t = sum_{s = max(first_year, t - window)}^{t} a_{t-s} (p_s - median_s); years where the country or
    the median has no measure contribute zero and flag the point

    Args:
        inputs: AccountingInputs
        country: country code
        median: precomputed median_series, shared across countries

    Returns:
        one point per observed year of the country from first_year on
    """
    if country not in inputs.measure:
        raise DataError(f"country '{country}' has no measure data")
    if median is None:
        median = median_series(inputs.measure)
    p = inputs.measure[country]
    points = []
    for t in sorted(y for y in p if y >= inputs.first_year):
        total, missing = 0.0, 0
        for s in range(max(inputs.first_year, t - inputs.window), t + 1):
            if s not in p or s not in median:
                missing += 1
                continue
            total += inputs.irf_at(t - s) * (p[s] - median[s])
        points.append(CounterfactualPoint(country=country, year=t, dy_geo=total, pct=percent_difference(total),
                                          flags=f"{MISSING_FLAG}={missing}" if missing else ""))
    return points


def counterfactual_paths(inputs: AccountingInputs, countries: Optional[Sequence[str]] = None,
                         num_workers: int = 1) -> List[CounterfactualPoint]:
    median = median_series(inputs.measure)
    countries = sorted(inputs.measure) if countries is None else list(countries)
    paths = ordered_map(lambda c: counterfactual_path(inputs, c, median), countries, num_workers)
    flagged = sum(1 for path in paths for point in path if point.flags)
    if flagged:
        _logger.warning("%d country-years have missing measure years inside the window", flagged)
    return [point for path in paths for point in path]


def steady_state_effect(phi_inf: float, shift: float) -> float:
    """
    output gain of a permanent measure shift under the long-run multiplier
    """
    return phi_inf * shift


def long_run_effect(alpha_permanent: float, change: float) -> float:
    return alpha_permanent * change


def write_decade_effects(path: str, effects: Sequence[DecadeEffect]) -> str:
    return write_table(path, [e.model_dump() for e in effects],
                       ["country", "decade", "contemporaneous", "long_run", "start_flagged"],
                       header=[f"units={UNIT_CONVENTION}"])


def write_counterfactuals(path: str, points: Sequence[CounterfactualPoint]) -> str:
    return write_table(path, [p.model_dump() for p in points], ["country", "year", "dy_geo", "pct", "flags"],
                       header=[f"units={UNIT_CONVENTION}", "pct=100*(exp(dy_geo/100)-1)"])


def write_median_series(path: str, median: Dict[int, float]) -> str:
    return write_table(path, [{"year": y, "median": v} for y, v in median.items()], ["year", "median"])
