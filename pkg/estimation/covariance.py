import math
from typing import Optional

import numpy as np
import scipy.linalg

from util.errors import ConfigError, SingularityError


def auto_bandwidth(horizon: int, n_periods: int) -> int:
    """
    Bartlett truncation growing with the horizon: floor(1.5 (|h| + 1)) + 1, capped at T - 1
    """
    return max(0, min(int(math.floor(1.5 * (abs(horizon) + 1))) + 1, n_periods - 1))


def bread_matrix(design: np.ndarray) -> np.ndarray:
    """
    (X'X)^{-1}, SingularityError when X'X is not positive definite
    """
    xtx = design.T @ design
    k = xtx.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    try:
        factor = scipy.linalg.cho_factor(xtx)
    except np.linalg.LinAlgError:
        raise SingularityError("X'X is singular")
    return scipy.linalg.cho_solve(factor, np.eye(k))


def dk_covariance(design: np.ndarray, residuals: np.ndarray, years: np.ndarray, bandwidth: int,
                  bread: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Driscoll-Kraay sandwich

    moment vectors x_i e_i are summed over the cross-section within each year, the yearly sums get a
    Bartlett-weighted long-run covariance over the time dimension and the result is wrapped in (X'X)^{-1}
    lags are taken by calendar distance, so gaps in the year set carry no weight across them

    Args:
        design: demeaned regressors, (n, k)
        residuals: (n,) or (n, m) for m regressions sharing the design
        years: calendar year of every row
        bandwidth: Bartlett truncation L >= 0
        bread: precomputed (X'X)^{-1}

    Returns:
        (k, k) covariance, or (m k, m k) with the coefficients of regression r at r k .. r k + k - 1
    """
    if bandwidth < 0:
        raise ConfigError(f"HAC bandwidth must be nonnegative, got {bandwidth}")
    design = np.asarray(design, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if residuals.ndim == 1:
        residuals = residuals[:, None]
    n, k = design.shape
    m = residuals.shape[1]
    if bread is None:
        bread = bread_matrix(design)

    moments = (residuals[:, :, None] * design[:, None, :]).reshape(n, m * k)
    year_values, position = np.unique(np.asarray(years), return_inverse=True)
    sums = np.zeros((len(year_values), m * k))
    np.add.at(sums, position, moments)

    meat = sums.T @ sums
    index_of = {int(y): i for i, y in enumerate(year_values)}
    for lag in range(1, bandwidth + 1):
        weight = 1.0 - lag / (bandwidth + 1.0)
        later = [index_of[int(y) + lag] for y in year_values if int(y) + lag in index_of]
        if not later:
            continue
        earlier = [index_of[int(year_values[i]) - lag] for i in later]
        gamma = sums[later].T @ sums[earlier]
        meat += weight * (gamma + gamma.T)

    full_bread = np.kron(np.eye(m), bread)
    covariance = full_bread @ meat @ full_bread
    return (covariance + covariance.T) / 2.0


def hc0_covariance(design: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """
    White covariance, the one-unit bandwidth-0 special case of dk_covariance
    """
    bread = bread_matrix(design)
    meat = (design * residuals[:, None] ** 2).T @ design
    return bread @ meat @ bread
