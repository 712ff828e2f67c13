import logging
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from estimation.covariance import auto_bandwidth
from estimation.regression import RegressionFit, fit_sample, prepare_sample, solve_least_squares
from panel.demean import DEFAULT_MAX_ITER, DEFAULT_TOL, constant_codes, demean_array
from panel.panel_frame import PanelFrame, complete_rows
from util.errors import ConfigError, InsufficientObservationsError
from util.iterutils import ordered_map
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

Z_95 = 1.96
DEFAULT_GROUPS = ("country", "region_year")

Bandwidth = Union[int, Literal["auto"]]


def resolve_bandwidth(bandwidth: Bandwidth, horizon: int, years: np.ndarray) -> int:
    if bandwidth == "auto":
        return auto_bandwidth(horizon, len(np.unique(years)))
    if bandwidth < 0:
        raise ConfigError(f"HAC bandwidth must be nonnegative, got {bandwidth}")
    return int(bandwidth)


class LpSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    outcome: str
    shocks: List[str] = Field(min_length=1)
    controls: List[str] = Field(default_factory=list)
    groups: List[str] = Field(default_factory=lambda: list(DEFAULT_GROUPS))
    horizons: Tuple[int, int] = (0, 10)
    hac_bandwidth: Bandwidth = "auto"
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    @model_validator(mode="after")
    def _check(self) -> 'LpSpec':
        if self.horizons[0] > self.horizons[1]:
            raise ValueError(f"horizons out of order: {self.horizons}")
        if len(set(self.shocks)) != len(self.shocks):
            raise ValueError("shocks must be distinct")
        overlap = set(self.shocks) & set(self.controls)
        if overlap:
            raise ValueError(f"columns listed as both shock and control: {sorted(overlap)}")
        if isinstance(self.hac_bandwidth, int) and self.hac_bandwidth < 0:
            raise ValueError("hac_bandwidth must be nonnegative")
        return self

    @property
    def horizon_list(self) -> List[int]:
        return list(range(self.horizons[0], self.horizons[1] + 1))

    @property
    def regressors(self) -> List[str]:
        return [*self.shocks, *self.controls]


class IrfResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    horizon: int
    shock: str
    coef: float
    se: float
    lo95: float
    hi95: float
    nobs: int
    n_countries: int
    within_r2: float
    bandwidth: int

    @classmethod
    def from_fit(cls, horizon: int, shock: str, fit: RegressionFit) -> 'IrfResult':
        coef = fit.coefficient(shock)
        se = fit.standard_error(shock)
        return cls(horizon=horizon, shock=shock, coef=coef, se=se, lo95=coef - Z_95 * se, hi95=coef + Z_95 * se,
                   nobs=fit.nobs, n_countries=fit.n_countries, within_r2=fit.within_r2, bandwidth=fit.bandwidth)


def fit_horizon(frame: PanelFrame, spec: LpSpec, horizon: int) -> RegressionFit:
    """
    outcome at t + h on shocks and controls at t, demeaned on the complete-case sample of this horizon
    """
    frame.require([spec.outcome, *spec.regressors])
    dependent = frame.shifted(spec.outcome, horizon)
    regressors = {name: frame.values(name) for name in spec.regressors}
    sample = prepare_sample(frame, [dependent], regressors, spec.groups, tol=spec.tol, max_iter=spec.max_iter)
    bandwidth = resolve_bandwidth(spec.hac_bandwidth, horizon, sample.years)
    return fit_sample(sample, 0, bandwidth, label=f"{spec.outcome} h={horizon}")


def estimate_lp_fits(frame: PanelFrame, spec: LpSpec, num_workers: int = 1) -> Dict[int, RegressionFit]:
    """
    one fit per horizon, horizons without enough complete rows are skipped with a warning
    """
    frame.require([spec.outcome, *spec.regressors])

    def _fit(horizon: int) -> Optional[RegressionFit]:
        try:
            return fit_horizon(frame, spec, horizon)
        except InsufficientObservationsError as e:
            _logger.warning("horizon %d skipped: %s", horizon, e)
            return None

    fits = ordered_map(_fit, spec.horizon_list, num_workers)
    return {h: f for h, f in zip(spec.horizon_list, fits) if f is not None}


def irf_results(fits: Dict[int, RegressionFit], shocks: Sequence[str]) -> List[IrfResult]:
    return [IrfResult.from_fit(h, shock, fits[h]) for h in sorted(fits) for shock in shocks]


def estimate_lp(frame: PanelFrame, spec: LpSpec, num_workers: int = 1) -> List[IrfResult]:
    """
    panel local projections

    Args:
        frame: panel holding outcome, shocks and controls (lags already built)
        spec: LpSpec
        num_workers: horizons are estimated concurrently

    Returns:
        IrfResult per horizon and shock, ordered by horizon then shock
    """
    return irf_results(estimate_lp_fits(frame, spec, num_workers), spec.shocks)


def coefficient_path(results: Sequence[IrfResult], shock: str) -> np.ndarray:
    return np.array([r.coef for r in sorted(results, key=lambda r: r.horizon) if r.shock == shock])


def fwl_residualize(frame: PanelFrame, y: str, x: str, controls: Sequence[str], groups: Sequence[str],
                    y_offset: int = 0, x_offset: int = 0, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER) -> List[Tuple[float, float]]:
    """
    partial controls and fixed effects out of y at t + y_offset and x at t + x_offset

    the slope of the returned y residuals on the x residuals equals the coefficient on x in the
    full regression over the same rows

    Returns:
        (x_resid, y_resid) per complete row in frame order
    """
    frame.require([y, x, *controls])
    y_values = frame.shifted(y, y_offset)
    x_values = frame.shifted(x, x_offset)
    control_values = [frame.values(c) for c in controls]
    mask = complete_rows(frame, controls) & ~np.isnan(y_values) & ~np.isnan(x_values)
    rows = np.flatnonzero(mask)
    needed = len(controls) + 2
    if len(rows) < needed:
        raise InsufficientObservationsError(
            f"{len(rows)} complete observations for the partialling regression", len(rows), needed)

    codes = frame.group_codes(groups, rows) if groups else constant_codes(len(rows))
    stacked = np.column_stack([y_values[rows], x_values[rows], *[c[rows] for c in control_values]])
    demeaned = demean_array(stacked, codes, tol, max_iter).residuals
    pair = demeaned[:, :2]
    if controls:
        z = demeaned[:, 2:]
        coefficients, _ = solve_least_squares(z, pair, list(controls))
        pair = pair - z @ coefficients
    return [(float(xr), float(yr)) for yr, xr in pair]


def fwl_slope(pairs: Sequence[Tuple[float, float]]) -> float:
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    sxx = float(x @ x)
    if sxx == 0.0:
        return float("nan")
    return float(x @ y) / sxx


def binscatter(pairs: Sequence[Tuple[float, float]], n_bins: int) -> List[Tuple[float, float, int]]:
    """
    equal-count bins on x, counts differ by at most one with the larger bins first

    Returns:
        (mean_x, mean_y, count) per bin in increasing x
    """
    if not 1 <= n_bins <= len(pairs):
        raise ConfigError(f"bin count {n_bins} outside [1, {len(pairs)}]")
    values = np.asarray(pairs, dtype=float).reshape(-1, 2)
    order = np.argsort(values[:, 0], kind="stable")
    bins = []
    for chunk in np.array_split(order, n_bins):
        bins.append((float(values[chunk, 0].mean()), float(values[chunk, 1].mean()), int(len(chunk))))
    return bins


IRF_COLUMNS = ["horizon", "shock", "coef", "se", "lo95", "hi95", "nobs", "n_countries", "within_r2", "bandwidth"]


def write_irf(path: str, results: Sequence[IrfResult]) -> str:
    return write_table(path, [r.model_dump() for r in results], IRF_COLUMNS)


def write_binscatter(path: str, bins: Sequence[Tuple[float, float, int]]) -> str:
    rows = [{"bin": i, "mean_x": mx, "mean_y": my, "count": n} for i, (mx, my, n) in enumerate(bins)]
    return write_table(path, rows, ["bin", "mean_x", "mean_y", "count"])


def write_fwl_pairs(path: str, pairs: Sequence[Tuple[float, float]]) -> str:
    return write_table(path, [{"x_resid": x, "y_resid": y} for x, y in pairs], ["x_resid", "y_resid"])
