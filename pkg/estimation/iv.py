import logging
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from estimation.covariance import dk_covariance
from estimation.lp import Bandwidth, DEFAULT_GROUPS, IrfResult, LpSpec, Z_95, estimate_lp, resolve_bandwidth
from estimation.regression import RegressionFit, fit_sample, prepare_sample, solve_least_squares
from panel.demean import DEFAULT_MAX_ITER, DEFAULT_TOL
from panel.panel_frame import PanelFrame
from util.errors import InsufficientObservationsError
from util.iterutils import ordered_map
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

ZERO_FIRST_STAGE = 1e-12
WEAK_T = 3.0


class LpIvSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    outcome: str
    shock: str
    instrument: str
    controls: List[str] = Field(default_factory=list)
    groups: List[str] = Field(default_factory=lambda: list(DEFAULT_GROUPS))
    horizons: Tuple[int, int] = (0, 10)
    hac_bandwidth: Bandwidth = "auto"
    per_horizon_first_stage: bool = False
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    @model_validator(mode="after")
    def _check(self) -> 'LpIvSpec':
        if self.instrument == self.shock:
            raise ValueError("instrument must differ from the endogenous shock")
        if self.horizons[0] > self.horizons[1]:
            raise ValueError(f"horizons out of order: {self.horizons}")
        if self.instrument in self.controls or self.shock in self.controls:
            raise ValueError("shock and instrument cannot also be controls")
        return self

    @property
    def horizon_list(self) -> List[int]:
        return list(range(self.horizons[0], self.horizons[1] + 1))

    def first_stage_lp(self) -> LpSpec:
        return LpSpec(outcome=self.shock, shocks=[self.instrument], controls=self.controls, groups=self.groups,
                      horizons=self.horizons, hac_bandwidth=self.hac_bandwidth, tol=self.tol, max_iter=self.max_iter)


class LpIvResult(BaseModel):
    """
    rf_coef comes from the rows where the outcome at t + h is observed, fs_coef from the first-stage sample
    (the h = 0 rows unless fit per horizon); ratio_se uses both equations refit on their cov_nobs common rows
    """
    model_config = ConfigDict(frozen=True)

    horizon: int
    rf_coef: float
    rf_se: float
    fs_coef: float
    fs_se: float
    fs_t: float
    ratio: float
    ratio_se: float
    lo95: float
    hi95: float
    nobs: int
    n_countries: int
    fs_nobs: int
    cov_nobs: int
    weak_instrument: bool
    undefined: bool


def _regressors(frame: PanelFrame, spec: LpIvSpec):
    return {name: frame.values(name) for name in [spec.instrument, *spec.controls]}


def fit_first_stage(frame: PanelFrame, spec: LpIvSpec, horizon: int = 0) -> RegressionFit:
    """
    shock at t on the instrument and controls, over the rows where the outcome at t + horizon is also observed
    """
    outcome_lead = frame.shifted(spec.outcome, horizon)
    sample = prepare_sample(frame, [frame.values(spec.shock)], _regressors(frame, spec), spec.groups,
                            extra_mask=~np.isnan(outcome_lead), tol=spec.tol, max_iter=spec.max_iter)
    bandwidth = resolve_bandwidth(spec.hac_bandwidth, 0, sample.years)
    return fit_sample(sample, 0, bandwidth, label=f"first stage {spec.shock} on {spec.instrument}")


def fit_reduced_form(frame: PanelFrame, spec: LpIvSpec, horizon: int) -> RegressionFit:
    sample = prepare_sample(frame, [frame.shifted(spec.outcome, horizon)], _regressors(frame, spec), spec.groups,
                            tol=spec.tol, max_iter=spec.max_iter)
    bandwidth = resolve_bandwidth(spec.hac_bandwidth, horizon, sample.years)
    return fit_sample(sample, 0, bandwidth, label=f"reduced form {spec.outcome} h={horizon}")


def _t_stat(coef: float, se: float) -> float:
    if se > 0.0:
        return coef / se
    return math.copysign(math.inf, coef) if coef != 0.0 else float("nan")


class JointCovariance(NamedTuple):
    var_rf: float
    var_fs: float
    cov: float
    nobs: int


def joint_covariance(frame: PanelFrame, spec: LpIvSpec, horizon: int) -> JointCovariance:
    """
    variances of the reduced-form and first-stage instrument coefficients and their covariance

    both equations are refit on their common rows with one design, so a single Driscoll-Kraay meat over the
    stacked moments [x e_rf, x e_fs] gives the cross term
    """
    outcome_lead = frame.shifted(spec.outcome, horizon)
    outcome_now = frame.shifted(spec.outcome, 0)
    sample = prepare_sample(frame, [outcome_lead, frame.values(spec.shock)], _regressors(frame, spec),
                            spec.groups, extra_mask=~np.isnan(outcome_now), tol=spec.tol, max_iter=spec.max_iter)
    coefficients, bread = solve_least_squares(sample.design, sample.dependents, sample.names)
    residuals = sample.dependents - sample.design @ coefficients
    bandwidth = resolve_bandwidth(spec.hac_bandwidth, horizon, sample.years)
    covariance = dk_covariance(sample.design, residuals, sample.years, bandwidth, bread)
    k = len(sample.names)
    j = sample.names.index(spec.instrument)
    return JointCovariance(float(covariance[j, j]), float(covariance[k + j, k + j]), float(covariance[j, k + j]),
                           int(sample.design.shape[0]))


def ratio_standard_error(rf: float, fs: float, var_rf: float, var_fs: float, cov: float) -> float:
    """
    delta method for rf / fs:
    Var = Var_rf / fs^2 + rf^2 Var_fs / fs^4 - 2 rf Cov / fs^3
    """
    variance = var_rf / fs ** 2 + rf ** 2 * var_fs / fs ** 4 - 2.0 * rf * cov / fs ** 3
    return float(np.sqrt(max(variance, 0.0)))


def _horizon_result(frame: PanelFrame, spec: LpIvSpec, horizon: int,
                    first_stage: Optional[RegressionFit]) -> Optional[LpIvResult]:
    try:
        rf_fit = fit_reduced_form(frame, spec, horizon)
        fs_fit = first_stage if first_stage is not None else fit_first_stage(frame, spec, horizon)
    except InsufficientObservationsError as e:
        _logger.warning("horizon %d skipped: %s", horizon, e)
        return None
    rf, rf_se = rf_fit.coefficient(spec.instrument), rf_fit.standard_error(spec.instrument)
    fs, fs_se = fs_fit.coefficient(spec.instrument), fs_fit.standard_error(spec.instrument)
    fs_t = _t_stat(fs, fs_se)
    undefined = abs(fs) < ZERO_FIRST_STAGE
    weak = undefined or not abs(fs_t) >= WEAK_T
    cov_nobs = 0
    if undefined:
        ratio = ratio_se = float("nan")
    else:
        ratio = rf / fs
        try:
            joint = joint_covariance(frame, spec, horizon)
            ratio_se = ratio_standard_error(rf, fs, joint.var_rf, joint.var_fs, joint.cov)
            cov_nobs = joint.nobs
        except InsufficientObservationsError:
            ratio_se = float("nan")
    return LpIvResult(horizon=horizon, rf_coef=rf, rf_se=rf_se, fs_coef=fs, fs_se=fs_se, fs_t=fs_t, ratio=ratio,
                      ratio_se=ratio_se, lo95=ratio - Z_95 * ratio_se, hi95=ratio + Z_95 * ratio_se,
                      nobs=rf_fit.nobs, n_countries=rf_fit.n_countries, fs_nobs=fs_fit.nobs, cov_nobs=cov_nobs,
                      weak_instrument=weak, undefined=undefined)


def estimate_lp_iv(frame: PanelFrame, spec: LpIvSpec, num_workers: int = 1) -> List[LpIvResult]:
    """
    LP-IV as the ratio of the reduced-form response to the first-stage coefficient

    Args:
        frame: panel with outcome, shock, instrument and controls
        spec: LpIvSpec, the first stage is fit once on the h = 0 sample unless per_horizon_first_stage
        num_workers: horizons run concurrently

    Returns:
        LpIvResult per estimated horizon
    """
    frame.require([spec.outcome, spec.shock, spec.instrument, *spec.controls])
    first_stage = None
    if not spec.per_horizon_first_stage:
        first_stage = fit_first_stage(frame, spec, 0)
        fs = first_stage.coefficient(spec.instrument)
        fs_t = _t_stat(fs, first_stage.standard_error(spec.instrument))
        if abs(fs) < ZERO_FIRST_STAGE:
            _logger.error("first-stage coefficient is zero, LP-IV responses are undefined at every horizon")
        elif not abs(fs_t) >= WEAK_T:
            _logger.warning("weak instrument: first-stage t = %.3f", fs_t)

    results = ordered_map(lambda h: _horizon_result(frame, spec, h, first_stage), spec.horizon_list, num_workers)
    results = [r for r in results if r is not None]
    if spec.per_horizon_first_stage:
        for r in results:
            if r.undefined:
                _logger.error("first-stage coefficient is zero at horizon %d", r.horizon)
            elif r.weak_instrument:
                _logger.warning("weak instrument at horizon %d: first-stage t = %.3f", r.horizon, r.fs_t)
    return results


def first_stage_irf(frame: PanelFrame, spec: LpIvSpec, num_workers: int = 1) -> List[IrfResult]:
    """
    response of the shock at t + h to the instrument at t
    """
    return estimate_lp(frame, spec.first_stage_lp(), num_workers)


IV_COLUMNS = list(LpIvResult.model_fields)


def write_lp_iv(path: str, results: Sequence[LpIvResult]) -> str:
    return write_table(path, [r.model_dump() for r in results], IV_COLUMNS)
