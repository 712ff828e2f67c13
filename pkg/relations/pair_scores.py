from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from events.event_data import EventRecord
from util.errors import ConfigError, DataError
from util.iterutils import ordered_map

DEFAULT_DELTA = 0.3


class YearlyPairScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: Tuple[str, str]
    year: int
    s_tilde: float = Field(ge=-1.0, le=1.0)
    n_tilde: int = Field(ge=1)


class DynamicPairScore(BaseModel):
    """
    smoothed state of one pair after the update for `year`
    """
    model_config = ConfigDict(frozen=True)

    pair: Tuple[str, str]
    year: int
    s: float = Field(ge=-1.0, le=1.0)
    n_effective: float = Field(ge=0.0)
    phi: float = Field(ge=0.0, le=1.0)
    delta: float = Field(gt=0.0, le=1.0)

    @classmethod
    def initial(cls, pair: Tuple[str, str], year: int, delta: float = DEFAULT_DELTA) -> 'DynamicPairScore':
        """
        empty history before the first event year, the first update then puts full weight on data
        """
        return cls(pair=pair, year=year, s=0.0, n_effective=0.0, phi=0.0, delta=delta)


def check_delta(delta: float):
    if not 0.0 < delta <= 1.0:
        raise ConfigError(f"depreciation rate delta must lie in (0, 1], got {delta}")


def yearly_pair_scores(events: Iterable[EventRecord]) -> List[YearlyPairScore]:
    """
    mean Goldstein score over /10 per unordered pair and year, pairs without events emit nothing
    """
    buckets: Dict[Tuple[Tuple[str, str], int], List[float]] = defaultdict(list)
    for e in events:
        buckets[(e.pair, e.year)].append(e.goldstein)
    scores = []
    for (pair, year) in sorted(buckets):
        values = buckets[(pair, year)]
        s_tilde = float(np.mean(values)) / 10.0
        scores.append(YearlyPairScore(pair=pair, year=year, s_tilde=min(1.0, max(-1.0, s_tilde)),
                                      n_tilde=len(values)))
    return scores


def update_dynamic_score(prev: DynamicPairScore, yearly: Optional[YearlyPairScore],
                         decay_missing: bool = True) -> DynamicPairScore:
    """
    one step of the depreciated-count recursion

    Args:
        prev: state after year t-1
        yearly: events of year t, None when the pair had none
        decay_missing: decay the effective count in empty years, otherwise freeze it

    Returns:
        state after year t
    """
    year = prev.year + 1
    keep = 1.0 - prev.delta
    if yearly is None:
        n_effective = keep * prev.n_effective if decay_missing else prev.n_effective
        return prev.model_copy(update={"year": year, "n_effective": n_effective, "phi": 0.0})
    if yearly.pair != prev.pair or yearly.year != year:
        raise DataError(f"score update for {yearly.pair} {yearly.year} does not follow {prev.pair} {prev.year}")
    n_effective = keep * prev.n_effective + yearly.n_tilde
    phi = yearly.n_tilde / n_effective
    s = (1.0 - phi) * prev.s + phi * yearly.s_tilde
    # convex combination, clip rounding overshoot only
    s = min(1.0, max(-1.0, s))
    return DynamicPairScore(pair=prev.pair, year=year, s=s, n_effective=n_effective, phi=phi, delta=prev.delta)


def _pair_history(pair: Tuple[str, str], by_year: Dict[int, YearlyPairScore], end_year: int, delta: float,
                  decay_missing: bool) -> List[DynamicPairScore]:
    first = min(by_year)
    state = DynamicPairScore.initial(pair, first - 1, delta)
    history = []
    for year in range(first, end_year + 1):
        state = update_dynamic_score(state, by_year.get(year), decay_missing)
        history.append(state)
    return history


def dynamic_pair_scores(yearly: Iterable[YearlyPairScore], delta: float = DEFAULT_DELTA,
                        end_year: Optional[int] = None, decay_missing: bool = True,
                        num_workers: int = 1) -> List[DynamicPairScore]:
    """
    run the recursion for every pair from its first event year through end_year

    Args:
        yearly: yearly pair scores
        delta: depreciation rate in (0, 1]
        end_year: last year to emit, defaults to the last event year of the corpus
        decay_missing: see update_dynamic_score
        num_workers: pairs are independent and may run concurrently

    Returns:
        states ordered by pair then year
    """
    check_delta(delta)
    per_pair: Dict[Tuple[str, str], Dict[int, YearlyPairScore]] = defaultdict(dict)
    for score in yearly:
        per_pair[score.pair][score.year] = score
    if not per_pair:
        return []
    if end_year is None:
        end_year = max(max(by_year) for by_year in per_pair.values())
    pairs = sorted(per_pair)
    histories = ordered_map(
        lambda pair: _pair_history(pair, per_pair[pair], end_year, delta, decay_missing), pairs, num_workers)
    return [state for history in histories for state in history]
