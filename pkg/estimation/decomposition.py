import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from estimation.lp import Bandwidth, DEFAULT_GROUPS, LpSpec, estimate_lp_fits
from panel.panel_frame import PanelFrame
from util.errors import DataError
from util.serialize_utils import write_table

_logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 30
UNIT_LEAD_TOL = 1e-12


def normalize_own_irf(own_irf: Sequence[float]) -> np.ndarray:
    own_irf = np.asarray(own_irf, dtype=float)
    if len(own_irf) == 0 or abs(own_irf[0]) < UNIT_LEAD_TOL:
        raise DataError("own response has no impact effect to normalize by")
    return own_irf / own_irf[0]


def lower_toeplitz(first_column: np.ndarray) -> np.ndarray:
    first_column = np.asarray(first_column, dtype=float)
    return scipy.linalg.toeplitz(first_column, np.zeros(len(first_column)))


def solve_transitory_shock(own_irf: Sequence[float]) -> np.ndarray:
    """
    shock path that, fed through the measure's own dynamics, moves it for one period only:
    Toeplitz(own_irf) . shock = e_0, a unit lower-triangular forward substitution
    """
    own_irf = np.asarray(own_irf, dtype=float)
    if len(own_irf) == 0 or abs(own_irf[0] - 1.0) > UNIT_LEAD_TOL:
        raise DataError("own response must start at 1, normalize it first")
    target = np.zeros(len(own_irf))
    target[0] = 1.0
    return scipy.linalg.solve_triangular(lower_toeplitz(own_irf), target, lower=True, unit_diagonal=True)


def transitory_outcome_irf(shock_path: Sequence[float], outcome_irf: Sequence[float]) -> np.ndarray:
    """
    convolution of the shock path with the outcome response, truncated at H
    """
    shock_path = np.asarray(shock_path, dtype=float)
    outcome_irf = np.asarray(outcome_irf, dtype=float)
    if len(shock_path) != len(outcome_irf):
        raise DataError(f"shock path has {len(shock_path)} horizons, outcome response {len(outcome_irf)}")
    return lower_toeplitz(shock_path) @ outcome_irf


def permanent_outcome_irf(transitory: Sequence[float]) -> np.ndarray:
    return np.cumsum(np.asarray(transitory, dtype=float))


@dataclass
class ShockDecomposition:
    own_irf: np.ndarray
    shock_path: np.ndarray
    outcome_irf: np.ndarray
    transitory_outcome: np.ndarray
    permanent_outcome: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.own_irf) - 1

    @classmethod
    def from_irfs(cls, own_irf: Sequence[float], outcome_irf: Sequence[float]) -> 'ShockDecomposition':
        own = normalize_own_irf(own_irf)
        shock_path = solve_transitory_shock(own)
        outcome = np.asarray(outcome_irf, dtype=float)
        transitory = transitory_outcome_irf(shock_path, outcome)
        return cls(own_irf=own, shock_path=shock_path, outcome_irf=outcome, transitory_outcome=transitory,
                   permanent_outcome=permanent_outcome_irf(transitory))


def _full_path(fits, H: int, what: str, shock: str) -> np.ndarray:
    missing = [h for h in range(H + 1) if h not in fits]
    if missing:
        raise DataError(f"{what} response missing at horizons {missing}, the decomposition needs 0..{H}")
    return np.array([fits[h].coefficient(shock) for h in range(H + 1)])


def estimate_decomposition(frame: PanelFrame, outcome: str, measure: str, controls: Sequence[str] = (),
                           groups: Sequence[str] = DEFAULT_GROUPS, H: int = DEFAULT_HORIZON,
                           hac_bandwidth: Bandwidth = "auto", num_workers: int = 1) -> ShockDecomposition:
    """
    local-projection estimates of the measure's own response and the outcome response, then the
    transitory-shock inversion

    Args:
        frame: panel with lags already built
        outcome: y column
        measure: p column, also the shock
        controls: lag controls shared by both projections
        groups: fixed-effect keys
        H: last horizon
        hac_bandwidth: only affects the reported LP standard errors
        num_workers: horizon concurrency

    Returns:
        ShockDecomposition over 0..H
    """
    horizons = (0, H)
    own_spec = LpSpec(outcome=measure, shocks=[measure], controls=list(controls), groups=list(groups),
                      horizons=horizons, hac_bandwidth=hac_bandwidth)
    outcome_spec = own_spec.model_copy(update={"outcome": outcome})
    own = _full_path(estimate_lp_fits(frame, own_spec, num_workers), H, "own", measure)
    response = _full_path(estimate_lp_fits(frame, outcome_spec, num_workers), H, "outcome", measure)
    decomposition = ShockDecomposition.from_irfs(own, response)
    _logger.info("transitory shock path: impact %.4f, next %.4f", decomposition.shock_path[0],
                 decomposition.shock_path[1] if H >= 1 else float("nan"))
    return decomposition


def write_decomposition(path: str, decomposition: ShockDecomposition) -> str:
    rows = [{"horizon": h, "own_irf": decomposition.own_irf[h], "shock_path": decomposition.shock_path[h],
             "transitory": decomposition.transitory_outcome[h], "permanent": decomposition.permanent_outcome[h]}
            for h in range(len(decomposition.own_irf))]
    return write_table(path, rows, ["horizon", "own_irf", "shock_path", "transitory", "permanent"])
