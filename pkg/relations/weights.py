from typing import Dict, Iterable, List, Optional, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from util.errors import ConfigError, DataError
from util.serialize_utils import write_table

SHARE_SUM_TOLERANCE = 1e-9


class WeightTable(BaseModel):
    """
    GDP shares of the major nations in one year, not renormalized
    """
    model_config = ConfigDict(frozen=True)

    year: int
    weights: Dict[str, float]

    @field_validator("weights")
    @classmethod
    def _check_weights(cls, v: Dict[str, float]) -> Dict[str, float]:
        for country, share in v.items():
            if not 0.0 <= share <= 1.0:
                raise ValueError(f"share of {country} out of [0, 1]: {share}")
        if sum(v.values()) > 1.0 + SHARE_SUM_TOLERANCE:
            raise ValueError(f"shares sum to {sum(v.values())} > 1")
        return v


class WeightBook:
    """
    year -> WeightTable lookup used by every aggregation
    """

    def __init__(self, tables: Iterable[WeightTable]):
        self._tables: Dict[int, WeightTable] = {}
        for table in tables:
            if table.year in self._tables:
                raise ConfigError(f"weights given twice for year {table.year}")
            self._tables[table.year] = table

    @property
    def years(self) -> List[int]:
        return sorted(self._tables)

    def table(self, year: int) -> Optional[WeightTable]:
        return self._tables.get(year)

    def share(self, country: str, year: int) -> Optional[float]:
        table = self._tables.get(year)
        if table is None:
            return None
        return table.weights.get(country)

    def require(self, country: str, year: int) -> float:
        share = self.share(country, year)
        if share is None:
            raise ConfigError(f"missing weight for major nation {country} in {year}")
        return share

    def tables(self) -> List[WeightTable]:
        return [self._tables[y] for y in self.years]


WeightsLike = Union[WeightBook, WeightTable, Iterable[WeightTable]]


def as_weight_book(weights: WeightsLike) -> WeightBook:
    if isinstance(weights, WeightBook):
        return weights
    if isinstance(weights, WeightTable):
        return WeightBook([weights])
    return WeightBook(weights)


def read_weights(path: str) -> WeightBook:
    """
    read a long (year, country, share) csv
    """
    try:
        frame = pd.read_csv(path, dtype={"country": str})
    except FileNotFoundError:
        raise ConfigError(f"weights file not found: {path}")
    for column in ("year", "country", "share"):
        if column not in frame.columns:
            raise DataError(f"{path}: missing column '{column}'")
    frame = frame.dropna(subset=["year", "country", "share"])
    tables = []
    for year, group in frame.groupby("year", sort=True):
        if group["country"].duplicated().any():
            raise ConfigError(f"{path}: duplicate country weight in {int(year)}")
        try:
            tables.append(WeightTable(year=int(year),
                                      weights={str(c): float(s) for c, s in zip(group["country"], group["share"])}))
        except ValidationError as e:
            raise ConfigError(f"{path}: year {int(year)}: {e.errors()[0]['msg']}")
    return WeightBook(tables)


def write_weights(path: str, book: WeightBook) -> str:
    rows = [{"year": t.year, "country": c, "share": t.weights[c]}
            for t in book.tables() for c in sorted(t.weights)]
    return write_table(path, rows, ["year", "country", "share"])
