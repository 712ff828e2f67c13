import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from estimation.covariance import bread_matrix, dk_covariance
from panel.demean import DEFAULT_MAX_ITER, DEFAULT_TOL, constant_codes, demean_array
from panel.panel_frame import PanelFrame
from util.errors import DataError, InsufficientObservationsError, SingularityError

_logger = logging.getLogger(__name__)

SINGULAR_RTOL = 1e-9


@dataclass
class RegressionFit:
    """
    OLS on fixed-effect demeaned data with Driscoll-Kraay covariance

    design and dependent are the demeaned arrays actually regressed, rows indexes the
    frame rows of the estimation sample in order
    """
    names: List[str]
    coefficients: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray
    design: np.ndarray
    dependent: np.ndarray
    bread: np.ndarray
    rows: np.ndarray
    countries: np.ndarray
    years: np.ndarray
    group_codes: List[np.ndarray]
    bandwidth: int
    within_r2: float
    label: str = ""
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def nobs(self) -> int:
        return len(self.residuals)

    @property
    def n_countries(self) -> int:
        return len(np.unique(self.countries))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"'{name}' is not a regressor of {self.label or 'this fit'}")

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.index(name)])

    def standard_error(self, name: str) -> float:
        i = self.index(name)
        return float(np.sqrt(max(self.covariance[i, i], 0.0)))

    @property
    def fitted(self) -> np.ndarray:
        return self.dependent - self.residuals


@dataclass
class DemeanedSample:
    names: List[str]
    design: np.ndarray
    dependents: np.ndarray
    rows: np.ndarray
    countries: np.ndarray
    years: np.ndarray
    group_codes: List[np.ndarray]


def prepare_sample(frame: PanelFrame, dependents: Sequence[np.ndarray], regressors: Dict[str, np.ndarray],
                   groups: Sequence[str], extra_mask: Optional[np.ndarray] = None, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> DemeanedSample:
    """
    listwise deletion over every array, then joint demeaning of dependents and regressors

    Args:
        frame: panel the arrays are aligned with
        dependents: one or more row-aligned outcome arrays sharing the design
        regressors: ordered name -> row-aligned array
        groups: fixed-effect keys, none means an intercept only
        extra_mask: additional rows to exclude
        tol: demeaning tolerance
        max_iter: demeaning sweep budget

    Returns:
        DemeanedSample
    """
    names = list(regressors)
    columns = [np.asarray(d, dtype=float) for d in dependents] + [np.asarray(regressors[n], dtype=float)
                                                                     for n in names]
    mask = np.ones(frame.n_rows, dtype=bool) if extra_mask is None else np.asarray(extra_mask, dtype=bool).copy()
    for column in columns:
        if column.shape != (frame.n_rows,):
            raise DataError(f"array of shape {column.shape} does not align with {frame.n_rows} panel rows")
        mask &= ~np.isnan(column)
    rows = np.flatnonzero(mask)
    needed = len(names) + 1
    if len(rows) < needed:
        raise InsufficientObservationsError(
            f"{len(rows)} complete observations for {len(names)} regressors", len(rows), needed)

    codes = frame.group_codes(groups, rows) if groups else constant_codes(len(rows))
    stacked = np.column_stack([c[rows] for c in columns])
    demeaned = demean_array(stacked, codes, tol, max_iter).residuals
    m = len(dependents)
    return DemeanedSample(names=names, design=demeaned[:, m:], dependents=demeaned[:, :m], rows=rows,
                          countries=frame.country_array[rows], years=frame.year_array[rows], group_codes=codes)


def solve_least_squares(design: np.ndarray, dependents: np.ndarray, names: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    """
    QR solve, SingularityError naming the first regressor that is collinear with the ones before it

    Returns:
        coefficients (k,) or (k, m) and the bread (X'X)^{-1}
    """
    if design.shape[1] == 0:
        raise DataError("regression needs at least one regressor")
    q, r = scipy.linalg.qr(design, mode="economic")
    norms = np.linalg.norm(design, axis=0)
    diagonal = np.abs(np.diag(r))
    for j, name in enumerate(names):
        if norms[j] == 0.0 or diagonal[j] <= SINGULAR_RTOL * norms[j]:
            raise SingularityError(f"regressor '{name}' is collinear after demeaning", name)
    coefficients = scipy.linalg.solve_triangular(r, q.T @ dependents)
    return coefficients, bread_matrix(design)


def within_r2(dependent: np.ndarray, residuals: np.ndarray) -> float:
    total = float(dependent @ dependent)
    if total == 0.0:
        return float("nan")
    return 1.0 - float(residuals @ residuals) / total


def fit_regression(frame: PanelFrame, dependent: np.ndarray, regressors: Dict[str, np.ndarray],
                   groups: Sequence[str], bandwidth: int, extra_mask: Optional[np.ndarray] = None,
                   tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, label: str = "") -> RegressionFit:
    sample = prepare_sample(frame, [dependent], regressors, groups, extra_mask, tol, max_iter)
    return fit_sample(sample, 0, bandwidth, label)


def fit_sample(sample: DemeanedSample, which: int, bandwidth: int, label: str = "") -> RegressionFit:
    y = sample.dependents[:, which]
    coefficients, bread = solve_least_squares(sample.design, y, sample.names)
    residuals = y - sample.design @ coefficients
    covariance = dk_covariance(sample.design, residuals, sample.years, bandwidth, bread)
    _logger.debug("%s: n=%d k=%d", label or "regression", len(y), len(sample.names))
    return RegressionFit(names=list(sample.names), coefficients=coefficients, covariance=covariance,
                         residuals=residuals, design=sample.design, dependent=y, bread=bread, rows=sample.rows,
                         countries=sample.countries, years=sample.years, group_codes=sample.group_codes,
                         bandwidth=bandwidth, within_r2=within_r2(y, residuals), label=label)


def refit(fit: RegressionFit, dependent: np.ndarray) -> RegressionFit:
    """
    re-estimate with a new demeaned dependent on the identical design, covariance included
    """
    coefficients = fit.bread @ (fit.design.T @ dependent)
    residuals = dependent - fit.design @ coefficients
    covariance = dk_covariance(fit.design, residuals, fit.years, fit.bandwidth, fit.bread)
    return RegressionFit(names=fit.names, coefficients=coefficients, covariance=covariance, residuals=residuals,
                         design=fit.design, dependent=dependent, bread=fit.bread, rows=fit.rows,
                         countries=fit.countries, years=fit.years, group_codes=fit.group_codes,
                         bandwidth=fit.bandwidth, within_r2=within_r2(dependent, residuals), label=fit.label)
