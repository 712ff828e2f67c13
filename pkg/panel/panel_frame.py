import logging
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from util.errors import ConfigError, DataError
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

KEY_COLUMNS = ("country", "year")
DEFAULT_REGION = "ALL"
INTERACTION = "*"


class PanelFrame:
    """
    immutable country-year table

    variables are float columns with NaN for missing cells; label columns (country, region
    and any extra string keys such as a regime or GDP quintile) feed the fixed-effect groups
    every method returns a new frame
    """

    def __init__(self, data: pd.DataFrame, labels: Sequence[str] = ()):
        for column in KEY_COLUMNS:
            if column not in data.columns:
                raise DataError(f"panel is missing key column '{column}'")
        df = data.copy()
        if "region" not in df.columns:
            df["region"] = DEFAULT_REGION

        years = pd.to_numeric(df["year"], errors="coerce")
        if years.isna().any() or not np.all(np.equal(np.mod(years.to_numpy(dtype=float), 1.0), 0.0)):
            raise DataError("panel years must be integral")
        df["year"] = years.astype(np.int64)
        df["country"] = df["country"].astype(str)

        self._labels: Tuple[str, ...] = tuple(dict.fromkeys(["country", "region", *labels]))
        for label in self._labels:
            if label not in df.columns:
                raise DataError(f"panel is missing label column '{label}'")
            if df[label].isna().any():
                raise DataError(f"group key '{label}' must be defined on every row")
            df[label] = df[label].astype(str)

        duplicated = df.duplicated(subset=list(KEY_COLUMNS))
        if duplicated.any():
            first = df.loc[duplicated, list(KEY_COLUMNS)].iloc[0]
            raise DataError(f"duplicate panel row for ({first['country']}, {first['year']})")

        variables = [c for c in df.columns if c not in KEY_COLUMNS and c not in self._labels]
        for column in variables:
            try:
                df[column] = pd.to_numeric(df[column]).astype(float)
            except (TypeError, ValueError):
                raise DataError(f"variable column '{column}' is not numeric")

        self._variables: Tuple[str, ...] = tuple(variables)
        df = df[list(KEY_COLUMNS) + [l for l in self._labels if l != "country"] + list(variables)]
        self._df = df.sort_values(list(KEY_COLUMNS), kind="mergesort").reset_index(drop=True)
        self._index = pd.MultiIndex.from_arrays([self._df["country"], self._df["year"]])

    # construction

    @classmethod
    def read_csv(cls, path: str, labels: Optional[Sequence[str]] = None) -> 'PanelFrame':
        """
        country, year, region, then variable columns; empty cells are missing
        non-numeric extra columns become labels unless labels are given
        """
        try:
            df = pd.read_csv(path, dtype={"country": str, "region": str}, keep_default_na=True)
        except FileNotFoundError:
            raise ConfigError(f"panel file not found: {path}")
        if labels is None:
            labels = [c for c in df.columns
                      if c not in KEY_COLUMNS and c != "region" and df[c].dtype == object]
        return cls(df, labels=labels)

    def to_csv(self, path: str) -> str:
        return write_table(path, self._df.to_dict("records"), list(self._df.columns))

    def _derive(self, df: pd.DataFrame) -> 'PanelFrame':
        return PanelFrame(df, labels=[l for l in self._labels if l in df.columns])

    # accessors

    @property
    def data(self) -> pd.DataFrame:
        return self._df.copy()

    @property
    def variables(self) -> Tuple[str, ...]:
        return self._variables

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    @property
    def n_rows(self) -> int:
        return len(self._df)

    @property
    def countries(self) -> List[str]:
        return sorted(self._df["country"].unique())

    @property
    def years(self) -> List[int]:
        return sorted(int(y) for y in self._df["year"].unique())

    @property
    def country_array(self) -> np.ndarray:
        return self._df["country"].to_numpy()

    @property
    def year_array(self) -> np.ndarray:
        return self._df["year"].to_numpy()

    def has_column(self, name: str) -> bool:
        return name in self._variables

    def require(self, names: Iterable[str]):
        for name in names:
            if name not in self._variables:
                raise DataError(f"unknown column '{name}'")

    def values(self, column: str) -> np.ndarray:
        self.require([column])
        return self._df[column].to_numpy(dtype=float, copy=True)

    def shifted(self, column: str, offset: int) -> np.ndarray:
        """
        value at (country, year + offset) aligned with the rows, NaN when that year is absent
        """
        self.require([column])
        if offset == 0:
            return self.values(column)
        series = pd.Series(self._df[column].to_numpy(dtype=float), index=self._index)
        target = pd.MultiIndex.from_arrays([self._df["country"], self._df["year"] + offset])
        return series.reindex(target).to_numpy(dtype=float)

    def labels_for(self, key: str) -> np.ndarray:
        """
        group labels of a fixed-effect key: a label column, "year", "region_year",
        "<label>_year" or an interaction "a*b"
        """
        if INTERACTION in key:
            parts = [p.strip() for p in key.split(INTERACTION)]
            if any(not p for p in parts):
                raise ConfigError(f"malformed group key '{key}'")
            combined = self.labels_for(parts[0]).astype(str)
            for part in parts[1:]:
                combined = np.char.add(np.char.add(combined, "|"), self.labels_for(part).astype(str))
            return combined
        if key in self._labels:
            return self._df[key].to_numpy(dtype=str)
        if key == "year":
            return self._df["year"].to_numpy().astype(str)
        if key.endswith("_year") and key[:-len("_year")] in self._labels:
            return self.labels_for(f"{key[:-len('_year')]}{INTERACTION}year")
        raise DataError(f"unknown group key '{key}'")

    def group_codes(self, keys: Sequence[str], rows: Optional[np.ndarray] = None) -> List[np.ndarray]:
        codes = []
        for key in keys:
            labels = self.labels_for(key)
            if rows is not None:
                labels = labels[rows]
            code, _ = pd.factorize(labels, sort=True)
            codes.append(code.astype(np.int64))
        return codes

    # transformations

    def with_columns(self, columns: Dict[str, np.ndarray]) -> 'PanelFrame':
        df = self._df.copy()
        for name, values in columns.items():
            if name in KEY_COLUMNS or name in self._labels:
                raise DataError(f"cannot overwrite key column '{name}'")
            values = np.asarray(values, dtype=float)
            if values.shape != (len(df),):
                raise DataError(f"column '{name}' has {values.shape} values for {len(df)} rows")
            df[name] = values
        return self._derive(df)

    def select_rows(self, mask: np.ndarray) -> 'PanelFrame':
        return self._derive(self._df.loc[np.asarray(mask, dtype=bool)])

    def select_countries(self, countries: Iterable[str]) -> 'PanelFrame':
        keep = set(countries)
        return self.select_rows(self._df["country"].isin(keep).to_numpy())

    def merge_columns(self, table: pd.DataFrame) -> 'PanelFrame':
        """
        left join (country, year, value columns...) onto the panel rows; rows outside the panel are ignored
        """
        for column in KEY_COLUMNS:
            if column not in table.columns:
                raise DataError(f"merged table is missing key column '{column}'")
        incoming = [c for c in table.columns if c not in KEY_COLUMNS]
        clash = [c for c in incoming if c in self._df.columns]
        if clash:
            raise DataError(f"columns already in panel: {clash}")
        right = table.copy()
        right["country"] = right["country"].astype(str)
        right["year"] = right["year"].astype(np.int64)
        if right.duplicated(subset=list(KEY_COLUMNS)).any():
            raise DataError("merged table has duplicate (country, year) rows")
        df = self._df.merge(right, on=list(KEY_COLUMNS), how="left", validate="one_to_one")
        return self._derive(df)

    def frame_for_countries(self, countries: Sequence[str], relabel: Sequence[str]) -> 'PanelFrame':
        """
        stack the rows of the given countries in order, renaming each copy
        used to build resampled panels where a country may appear more than once
        """
        by_country = {c: g for c, g in self._df.groupby("country", sort=False)}
        parts = []
        for country, new_name in zip(countries, relabel):
            part = by_country[country].copy()
            part["country"] = new_name
            parts.append(part)
        df = pd.concat(parts, ignore_index=True) if parts else self._df.iloc[0:0].copy()
        return self._derive(df)


class LagSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    variable: str
    lags: FrozenSet[int] = Field(default_factory=frozenset)
    leads: FrozenSet[int] = Field(default_factory=frozenset)

    @model_validator(mode="after")
    def _check_offsets(self) -> 'LagSpec':
        if any(l < 1 for l in self.lags):
            raise ValueError("lags must be positive")
        if any(h < 0 for h in self.leads):
            raise ValueError("leads must be nonnegative")
        return self

    @classmethod
    def first_lags(cls, variable: str, n: int) -> 'LagSpec':
        return cls(variable=variable, lags=frozenset(range(1, n + 1)))

    @property
    def lag_names(self) -> List[str]:
        return [lag_name(self.variable, l) for l in sorted(self.lags)]

    @property
    def lead_names(self) -> List[str]:
        return [lead_name(self.variable, h) for h in sorted(self.leads)]


def lag_name(variable: str, lag: int) -> str:
    return f"{variable}_lag{lag}"


def lead_name(variable: str, lead: int) -> str:
    return f"{variable}_lead{lead}"


def build_shifts(frame: PanelFrame, spec: LagSpec) -> PanelFrame:
    """
    add var_lagL / var_leadH columns, missing wherever the shifted year is absent for that country
    """
    frame.require([spec.variable])
    columns = {}
    for lag in sorted(spec.lags):
        columns[lag_name(spec.variable, lag)] = frame.shifted(spec.variable, -lag)
    for lead in sorted(spec.leads):
        columns[lead_name(spec.variable, lead)] = frame.shifted(spec.variable, lead)
    return frame.with_columns(columns)


def add_lags(frame: PanelFrame, variables: Iterable[str], n_lags: int) -> Tuple[PanelFrame, List[str]]:
    """
    add the first n_lags lags of each variable, returning the new control names in order
    """
    names = []
    for variable in dict.fromkeys(variables):
        missing = frozenset(l for l in range(1, n_lags + 1) if not frame.has_column(lag_name(variable, l)))
        if missing:
            frame = build_shifts(frame, LagSpec(variable=variable, lags=missing))
        names.extend(lag_name(variable, l) for l in range(1, n_lags + 1))
    return frame, names


def complete_rows(frame: PanelFrame, columns: Iterable[str]) -> np.ndarray:
    mask = np.ones(frame.n_rows, dtype=bool)
    for column in columns:
        mask &= ~np.isnan(frame.values(column))
    return mask


def balanced_subset(frame: PanelFrame, required: Iterable[str], horizon_range: Tuple[int, int],
                    years: Optional[Tuple[int, int]] = None) -> PanelFrame:
    """
    keep the countries whose required columns are observed at every (t + h) for every estimation
    year t and every h in horizon_range, all or nothing per country

    Args:
        frame: panel
        required: columns that must be present
        horizon_range: inclusive (lo, hi) offsets
        years: inclusive estimation window, by default every t with t + lo and t + hi inside the panel span

    Returns:
        panel restricted to the complete countries
    """
    required = list(required)
    frame.require(required)
    lo, hi = horizon_range
    if lo > hi:
        raise ConfigError(f"horizon range out of order: {horizon_range}")
    if frame.n_rows == 0:
        return frame
    if years is None:
        all_years = frame.years
        years = (all_years[0] - min(lo, 0), all_years[-1] - max(hi, 0))
    span = range(years[0] + lo, years[1] + hi + 1)

    observed = complete_rows(frame, required)
    countries = frame.country_array
    year_values = frame.year_array
    keep = []
    for country in frame.countries:
        have = set(year_values[(countries == country) & observed].tolist())
        if all(y in have for y in span):
            keep.append(country)
    dropped = len(frame.countries) - len(keep)
    if dropped:
        _logger.info("balanced subset keeps %d of %d countries", len(keep), len(frame.countries))
    return frame.select_countries(keep)
