import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from estimation.ardl import ArdlFit, irf_from_ardl, is_stable
from inference.rng import SEED_LIMIT, substream
from panel.panel_frame import PanelFrame
from util.errors import ConfigError
from util.iterutils import ordered_map

_logger = logging.getLogger(__name__)

OUTCOME = "y"
MEASURE = "p"
INSTRUMENT = "z"

SHARED_STREAM = 0
COUNTRY_STREAM_BASE = 1
EVENT_STREAM_BASE = 1 << 32

MeasurePanel = Dict[str, Dict[int, float]]


class DgpSpec(BaseModel):
    """
    p_t = sum rho_l p_{t-l} + loading z_t + u_t
    y_t = alpha p_t + sum beta_l y_{t-l} + sum gamma_l p_{t-l} + a_c + b_t + e_{r(c)t} + eps_t
    every innovation is drawn independently of the regressors
    """
    model_config = ConfigDict(frozen=True)

    n_countries: int = Field(default=40, ge=1)
    n_years: int = Field(default=60, ge=2)
    start_year: int = 1960
    burn_in: int = Field(default=50, ge=0)
    measure_ar: List[float] = Field(default_factory=lambda: [0.6])
    measure_sigma: float = Field(default=0.1, ge=0.0)
    alpha: float = 1.0
    beta: List[float] = Field(default_factory=lambda: [0.5])
    gamma: List[float] = Field(default_factory=lambda: [0.0])
    noise: float = Field(default=1.0, ge=0.0)
    country_fe_scale: float = Field(default=0.0, ge=0.0)
    year_fe_scale: float = Field(default=0.0, ge=0.0)
    region_year_fe_scale: float = Field(default=0.0, ge=0.0)
    instrument_loading: float = 0.0
    instrument_sigma: float = Field(default=1.0, ge=0.0)
    n_regions: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=SEED_LIMIT)
    allow_unstable: bool = False
    event_rate: float = Field(default=2.0, ge=0.0)
    goldstein_mean: float = 1.0
    goldstein_sd: float = Field(default=3.0, ge=0.0)
    n_majors: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def _check(self) -> 'DgpSpec':
        if len(self.beta) != len(self.gamma):
            raise ValueError("beta and gamma need the same lag order")
        if not self.allow_unstable:
            if self.measure_ar and not is_stable(self.measure_ar):
                raise ValueError("measure AR process is not stable, set allow_unstable to override")
            if self.beta and not is_stable(self.beta):
                raise ValueError("outcome lag polynomial is not stable, set allow_unstable to override")
        return self

    @property
    def countries(self) -> List[str]:
        width = max(3, len(str(self.n_countries - 1)))
        return [f"C{i:0{width}d}" for i in range(self.n_countries)]

    @property
    def years(self) -> List[int]:
        return list(range(self.start_year, self.start_year + self.n_years))

    def region_of(self, index: int) -> str:
        return f"R{index % self.n_regions}"

    def true_fit(self) -> ArdlFit:
        J = max(len(self.beta), 1)
        beta = self.beta or [0.0] * J
        gamma = self.gamma or [0.0] * J
        return ArdlFit.from_parameters(self.alpha, beta, gamma)


@dataclass
class GroundTruth:
    """
    population responses implied by the DGP parameters

    phi: outcome response to a one-period unit impulse in p
    measure_irf: response of p to its own innovation
    lp_irf: response of y to a p innovation, the object a local projection controlling for lags targets
    first_stage_irf: response of p to a unit instrument shock
    """
    phi: np.ndarray
    phi_inf: float
    measure_irf: np.ndarray
    lp_irf: np.ndarray
    first_stage_irf: np.ndarray


def ar_irf(coefficients: List[float], H: int) -> np.ndarray:
    psi = np.zeros(H + 1)
    psi[0] = 1.0
    for h in range(1, H + 1):
        psi[h] = sum(rho * psi[h - l] for l, rho in enumerate(coefficients, start=1) if h - l >= 0)
    return psi


def ground_truth(spec: DgpSpec, H: int = 30) -> GroundTruth:
    irf = irf_from_ardl(spec.true_fit(), H)
    phi = np.asarray(irf.phi)
    psi = ar_irf(spec.measure_ar, H)
    lp_irf = np.array([np.dot(phi[:h + 1], psi[h::-1]) for h in range(H + 1)])
    return GroundTruth(phi=phi, phi_inf=irf.phi_inf, measure_irf=psi, lp_irf=lp_irf,
                       first_stage_irf=spec.instrument_loading * psi)


def _shared_effects(spec: DgpSpec, total: int) -> Tuple[np.ndarray, np.ndarray]:
    generator = substream(spec.seed, SHARED_STREAM)
    year_effects = generator.normal(0.0, 1.0, total) * spec.year_fe_scale
    region_year = generator.normal(0.0, 1.0, (spec.n_regions, total)) * spec.region_year_fe_scale
    return year_effects, region_year


def _simulate_country(spec: DgpSpec, index: int, total: int, year_effects: np.ndarray,
                      region_year: np.ndarray, measure: Optional[np.ndarray]) -> Dict[str, np.ndarray]:
    generator = substream(spec.seed, COUNTRY_STREAM_BASE + index)
    # fixed draw order keeps every series reproducible whichever parts are switched off
    country_effect = generator.normal() * spec.country_fe_scale
    z = generator.normal(0.0, 1.0, total) * spec.instrument_sigma
    u = generator.normal(0.0, 1.0, total) * spec.measure_sigma
    eps = generator.normal(0.0, 1.0, total) * spec.noise

    if measure is None:
        p = np.zeros(total)
        for t in range(total):
            p[t] = sum(rho * p[t - l] for l, rho in enumerate(spec.measure_ar, start=1) if t - l >= 0)
            p[t] += spec.instrument_loading * z[t] + u[t]
    else:
        p = np.nan_to_num(measure, nan=0.0)

    y = np.zeros(total)
    region = index % spec.n_regions
    for t in range(total):
        value = spec.alpha * p[t] + country_effect + year_effects[t] + region_year[region, t] + eps[t]
        for l, (b, g) in enumerate(zip(spec.beta, spec.gamma), start=1):
            if t - l >= 0:
                value += b * y[t - l] + g * p[t - l]
        y[t] = value
    return {OUTCOME: y, MEASURE: p, INSTRUMENT: z}


def generate_panel(spec: DgpSpec, measure: Optional[MeasurePanel] = None,
                   H: int = 30, num_workers: int = 1) -> Tuple[PanelFrame, GroundTruth]:
    """
    simulate a country-year panel from the ARDL process

    Args:
        spec: DgpSpec
        measure: optional given p per country and year, replacing the AR process; countries are then the
            measure's countries, unobserved years enter the outcome as zero and stay missing in the panel
        H: ground-truth horizon
        num_workers: countries are simulated concurrently on their own substreams

    Returns:
        frame with columns y, p and, for the AR process, z; and the GroundTruth
    """
    total = spec.burn_in + spec.n_years
    years = spec.years
    if measure is not None:
        countries = sorted(measure)
        if not countries:
            raise ConfigError("given measure has no countries")
        given = {}
        for c in countries:
            series = np.full(total, np.nan)
            for t, year in enumerate(years):
                series[spec.burn_in + t] = measure[c].get(year, np.nan)
            given[c] = series
    else:
        countries = spec.countries
        given = {}
    year_effects, region_year = _shared_effects(spec, total)

    simulated = ordered_map(
        lambda i: _simulate_country(spec, i, total, year_effects, region_year, given.get(countries[i])),
        list(range(len(countries))), num_workers)

    parts = []
    for i, (country, series) in enumerate(zip(countries, simulated)):
        part = {"country": [country] * spec.n_years, "year": years, "region": [spec.region_of(i)] * spec.n_years,
                OUTCOME: series[OUTCOME][spec.burn_in:]}
        if measure is None:
            part[MEASURE] = series[MEASURE][spec.burn_in:]
            part[INSTRUMENT] = series[INSTRUMENT][spec.burn_in:]
        else:
            part[MEASURE] = given[country][spec.burn_in:]
        parts.append(pd.DataFrame(part))
    frame = PanelFrame(pd.concat(parts, ignore_index=True))
    _logger.info("simulated %d countries x %d years", len(countries), spec.n_years)
    return frame, ground_truth(spec, H)
