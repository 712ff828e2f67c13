import logging
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from estimation.regression import refit
from inference.rng import SEED_LIMIT, rademacher, substream
from inference.targets import BootstrapTarget, FitSet, finite
from panel.demean import demean_array
from panel.panel_frame import PanelFrame
from util.errors import GeoGrowthError, InferenceError
from util.iterutils import grouped, ordered_map
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

BATCH_PER_WORKER = 8
RELABEL_SEPARATOR = "~"


class BootstrapScheme(str, Enum):
    CountryBlock = "CountryBlock"
    WildRademacher = "WildRademacher"


class BootstrapSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scheme: BootstrapScheme = BootstrapScheme.CountryBlock
    replications: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0, lt=SEED_LIMIT)
    target: BootstrapTarget
    per_observation: bool = False

    @model_validator(mode="after")
    def _check(self) -> 'BootstrapSpec':
        if self.per_observation and self.scheme != BootstrapScheme.WildRademacher:
            raise ValueError("per_observation only applies to the wild scheme")
        return self


class BootstrapStatistic(BaseModel):
    model_config = ConfigDict(frozen=True)

    statistic: str
    estimate: float
    lo: float
    hi: float
    sd: float
    n_effective: int


class BootstrapResult(BaseModel):
    scheme: BootstrapScheme
    seed: int
    replications: int
    n_failed: int
    statistics: List[BootstrapStatistic]

    def statistic(self, name: str) -> BootstrapStatistic:
        for s in self.statistics:
            if s.statistic == name:
                return s
        raise KeyError(name)


def _block_replicate(frame: PanelFrame, spec: BootstrapSpec, index: int) -> Dict[str, float]:
    countries = frame.countries
    draw = substream(spec.seed, index).integers(0, len(countries), size=len(countries))
    chosen = [countries[i] for i in draw]
    # duplicates become distinct units, region labels travel with the copy
    relabel = [f"{c}{RELABEL_SEPARATOR}{j}" for j, c in enumerate(chosen)]
    return spec.target.evaluate(frame.frame_for_countries(chosen, relabel))


def _wild_replicate(frame: PanelFrame, spec: BootstrapSpec, base: FitSet, index: int) -> Dict[str, float]:
    generator = substream(spec.seed, index)
    if spec.per_observation:
        row_signs = rademacher(generator, frame.n_rows)
    else:
        countries = frame.countries
        signs = dict(zip(countries, rademacher(generator, len(countries))))
        row_signs = np.array([signs[c] for c in frame.country_array])
    fits = {}
    for key, fit in base.items():
        flipped = row_signs[fit.rows] * fit.residuals
        # the flipped residuals are projected back onto the fixed-effect complement
        perturbed = fit.fitted + demean_array(flipped, fit.group_codes).residuals
        fits[key] = refit(fit, perturbed)
    return spec.target.statistics(fits)


def run_bootstrap(frame: PanelFrame, spec: BootstrapSpec, num_workers: int = 1) -> BootstrapResult:
    """
    country-block or wild Rademacher resampling of any BootstrapTarget

    replicate r draws from its own Philox substream keyed by (seed, r), so results do not depend on
    num_workers; replicates whose estimation fails or yields non-finite statistics are counted and dropped

    Args:
        frame: panel the target estimates on, lags already built
        spec: BootstrapSpec
        num_workers: concurrent replicates

    Returns:
        BootstrapResult with percentile 2.5/97.5 bounds per statistic
    """
    base_fits = spec.target.fit(frame)
    estimates = spec.target.statistics(base_fits)
    names = list(estimates)

    def _replicate(index: int) -> Optional[np.ndarray]:
        try:
            if spec.scheme == BootstrapScheme.CountryBlock:
                stats = _block_replicate(frame, spec, index)
            else:
                stats = _wild_replicate(frame, spec, base_fits, index)
        except GeoGrowthError as e:
            _logger.debug("replicate %d failed: %s", index, e)
            return None
        if list(stats) != names or not finite(stats):
            _logger.debug("replicate %d produced an incomplete statistic set", index)
            return None
        return np.array([stats[n] for n in names])

    draws: List[Optional[np.ndarray]] = []
    for batch in grouped(max(num_workers, 1) * BATCH_PER_WORKER, range(spec.replications)):
        draws.extend(ordered_map(_replicate, batch, num_workers))
        _logger.debug("%d of %d replicates done", len(draws), spec.replications)

    kept = [d for d in draws if d is not None]
    n_failed = len(draws) - len(kept)
    if not kept:
        raise InferenceError(f"all {spec.replications} bootstrap replicates failed")
    if n_failed:
        _logger.warning("%d of %d bootstrap replicates failed and were excluded", n_failed, spec.replications)

    matrix = np.vstack(kept)
    lo, hi = np.percentile(matrix, [2.5, 97.5], axis=0)
    sd = matrix.std(axis=0, ddof=1) if len(kept) > 1 else np.zeros(len(names))
    statistics = [BootstrapStatistic(statistic=n, estimate=float(estimates[n]), lo=float(lo[j]), hi=float(hi[j]),
                                     sd=float(sd[j]), n_effective=len(kept))
                  for j, n in enumerate(names)]
    return BootstrapResult(scheme=spec.scheme, seed=spec.seed, replications=spec.replications,
                           n_failed=n_failed, statistics=statistics)


def write_bootstrap(path: str, result: BootstrapResult) -> str:
    header = [f"seed={result.seed} scheme={result.scheme.value} replications={result.replications} "
              f"failed={result.n_failed}"]
    return write_table(path, [s.model_dump() for s in result.statistics],
                       ["statistic", "estimate", "lo", "hi", "sd", "n_effective"], header=header)
