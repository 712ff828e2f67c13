import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from estimation.lp import Bandwidth, DEFAULT_GROUPS, resolve_bandwidth
from estimation.regression import RegressionFit, fit_sample, prepare_sample
from panel.demean import DEFAULT_MAX_ITER, DEFAULT_TOL
from panel.panel_frame import PanelFrame, add_lags
from util.errors import ConfigError
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

UNIT_ROOT_TOL = 1e-12


def lag_polynomial_roots(beta: Sequence[float]) -> np.ndarray:
    """
    roots of 1 - beta_1 L - ... - beta_J L^J
    """
    coefficients = [-b for b in reversed(list(beta))] + [1.0]
    return np.roots(coefficients)


def is_stable(beta: Sequence[float]) -> bool:
    if abs(1.0 - float(np.sum(beta))) < UNIT_ROOT_TOL:
        return False
    roots = lag_polynomial_roots(beta)
    return bool(np.all(np.abs(roots) > 1.0))


@dataclass
class ArdlFit:
    alpha: float
    beta: np.ndarray
    gamma: np.ndarray
    stable: bool
    roots: np.ndarray
    covariance: Optional[np.ndarray] = None
    names: List[str] = field(default_factory=list)
    nobs: int = 0
    n_countries: int = 0
    within_r2: float = float("nan")
    residual_sd: float = float("nan")
    regression: Optional[RegressionFit] = None

    @property
    def J(self) -> int:
        return len(self.beta)

    @classmethod
    def from_parameters(cls, alpha: float, beta: Sequence[float], gamma: Sequence[float]) -> 'ArdlFit':
        """
        known coefficients, as used by the simulator's ground truth
        """
        beta = np.asarray(beta, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        if len(beta) != len(gamma):
            raise ConfigError(f"need as many measure lags as outcome lags, got {len(gamma)} and {len(beta)}")
        return cls(alpha=float(alpha), beta=beta, gamma=gamma, stable=is_stable(beta),
                   roots=lag_polynomial_roots(beta))


class ArdlIrf(BaseModel):
    model_config = ConfigDict(frozen=True)

    phi: List[float]
    cumulative: List[float]
    phi_inf: float
    stable: bool
    printed_recursion: bool = False


def ardl_names(outcome: str, measure: str, J: int) -> List[str]:
    return [measure, *[f"{outcome}_lag{l}" for l in range(1, J + 1)], *[f"{measure}_lag{l}" for l in range(1, J + 1)]]


def estimate_ardl(frame: PanelFrame, outcome: str, measure: str, J: int = 4,
                  groups: Sequence[str] = DEFAULT_GROUPS, hac_bandwidth: Bandwidth = "auto",
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ArdlFit:
    """
    y_t on p_t, J lags of y and J lags of p after fixed-effect demeaning

    Args:
        frame: panel holding outcome and measure
        outcome: y column
        measure: p column
        J: lag order >= 1
        groups: fixed-effect keys
        hac_bandwidth: Driscoll-Kraay truncation or "auto"

    Returns:
        ArdlFit, an unstable lag polynomial is only warned about
    """
    if J < 1:
        raise ConfigError(f"ARDL lag order must be at least 1, got {J}")
    frame.require([outcome, measure])
    frame, _ = add_lags(frame, [outcome, measure], J)
    names = ardl_names(outcome, measure, J)
    sample = prepare_sample(frame, [frame.values(outcome)], {n: frame.values(n) for n in names}, groups,
                            tol=tol, max_iter=max_iter)
    bandwidth = resolve_bandwidth(hac_bandwidth, 0, sample.years)
    fit = fit_sample(sample, 0, bandwidth, label=f"ARDL({J}) {outcome} on {measure}")

    coefficients = fit.coefficients
    beta = coefficients[1:J + 1]
    gamma = coefficients[J + 1:2 * J + 1]
    dof = max(fit.nobs - len(names), 1)
    result = ArdlFit(alpha=float(coefficients[0]), beta=beta, gamma=gamma, stable=is_stable(beta),
                     roots=lag_polynomial_roots(beta), covariance=fit.covariance, names=names, nobs=fit.nobs,
                     n_countries=fit.n_countries, within_r2=fit.within_r2,
                     residual_sd=float(np.sqrt(fit.residuals @ fit.residuals / dof)), regression=fit)
    if not result.stable:
        _logger.warning("estimated ARDL is not stable: sum of outcome lags %.4f, smallest root modulus %.4f",
                        float(np.sum(beta)), float(np.min(np.abs(result.roots))) if len(result.roots) else math.inf)
    return result


def steady_state_multiplier(fit: ArdlFit) -> float:
    """
    (alpha + sum gamma) / (1 - sum beta), non-finite at a unit root
    """
    numerator = fit.alpha + float(np.sum(fit.gamma))
    denominator = 1.0 - float(np.sum(fit.beta))
    if abs(denominator) < UNIT_ROOT_TOL:
        return math.copysign(math.inf, numerator) if numerator != 0.0 else float("nan")
    return numerator / denominator


def irf_from_ardl(fit: ArdlFit, H: int, printed_recursion: bool = False) -> ArdlIrf:
    """
    response of y to a one-period unit impulse in p

    phi_0 = alpha, phi_k = sum_{j <= min(k, J)} beta_j phi_{k-j} + gamma_k [k <= J]
    printed_recursion instead adds sum_{j <= min(k, J)} gamma_j at every k, kept for comparison only
    """
    if H < 0:
        raise ConfigError(f"IRF horizon must be nonnegative, got {H}")
    J = fit.J
    phi = np.zeros(H + 1)
    phi[0] = fit.alpha
    for k in range(1, H + 1):
        top = min(k, J)
        value = float(np.dot(fit.beta[:top], phi[k - 1::-1][:top]))
        if printed_recursion:
            value += float(np.sum(fit.gamma[:top]))
        elif k <= J:
            value += float(fit.gamma[k - 1])
        phi[k] = value
    phi_inf = steady_state_multiplier(fit)
    stable = fit.stable and math.isfinite(phi_inf)
    return ArdlIrf(phi=phi.tolist(), cumulative=np.cumsum(phi).tolist(), phi_inf=phi_inf, stable=stable,
                   printed_recursion=printed_recursion)


def write_ardl_irf(path: str, irf: ArdlIrf) -> str:
    rows = [{"horizon": h, "phi": p, "cumulative": c} for h, (p, c) in enumerate(zip(irf.phi, irf.cumulative))]
    return write_table(path, rows, ["horizon", "phi", "cumulative"])


def write_ardl_coefficients(path: str, fit: ArdlFit) -> str:
    values = [fit.alpha, *fit.beta.tolist(), *fit.gamma.tolist()]
    rows = []
    for i, (name, value) in enumerate(zip(fit.names, values)):
        se = float(np.sqrt(max(fit.covariance[i, i], 0.0))) if fit.covariance is not None else float("nan")
        rows.append({"term": name, "coef": value, "se": se})
    return write_table(path, rows, ["term", "coef", "se"])
