import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from panel.panel_frame import PanelFrame
from util.errors import ConfigError, ConvergenceError, DataError

_logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000


@dataclass
class DemeanResult:
    residuals: np.ndarray
    iterations: int
    worst_group_mean: float


def _subtract_group_means(matrix: np.ndarray, codes: np.ndarray, counts: np.ndarray):
    for j in range(matrix.shape[1]):
        means = np.bincount(codes, weights=matrix[:, j], minlength=len(counts)) / counts
        matrix[:, j] -= means[codes]


def _worst_group_mean(matrix: np.ndarray, codes_list: Sequence[np.ndarray], counts_list: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for codes, counts in zip(codes_list, counts_list):
        for j in range(matrix.shape[1]):
            means = np.bincount(codes, weights=matrix[:, j], minlength=len(counts)) / counts
            worst = max(worst, float(np.max(np.abs(means))) if len(means) else 0.0)
    return worst


def demean_array(values: np.ndarray, codes_list: Sequence[np.ndarray], tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> DemeanResult:
    """
    method of alternating projections: sweep the group-mean subtraction over every key
    until all group means of every column are below tol

    Args:
        values: (n,) or (n, k) complete data
        codes_list: one integer code array per group key, each of length n
        tol: convergence threshold on the largest absolute group mean
        max_iter: sweep budget

    Returns:
        DemeanResult with residuals shaped like values
    """
    if len(codes_list) == 0:
        raise ConfigError("demeaning needs at least one group key")
    if max_iter < 1:
        raise ConfigError("max_iter must be positive")
    matrix = np.array(values, dtype=float, copy=True)
    squeeze = matrix.ndim == 1
    if squeeze:
        matrix = matrix[:, None]
    n = matrix.shape[0]
    if np.isnan(matrix).any():
        raise DataError("demeaning requires complete rows")
    for codes in codes_list:
        if len(codes) != n:
            raise DataError("group codes do not align with the data rows")
    if n == 0:
        return DemeanResult(matrix[:, 0] if squeeze else matrix, 0, 0.0)

    counts_list = [np.bincount(codes).astype(float) for codes in codes_list]
    # empty codes (unused labels) would divide by zero
    counts_list = [np.where(c > 0, c, 1.0) for c in counts_list]

    worst = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        for codes, counts in zip(codes_list, counts_list):
            _subtract_group_means(matrix, codes, counts)
        if len(codes_list) == 1:
            worst = _worst_group_mean(matrix, codes_list, counts_list)
            break
        worst = _worst_group_mean(matrix, codes_list, counts_list)
        if worst < tol:
            break
    if worst >= tol and len(codes_list) > 1:
        raise ConvergenceError(
            f"demeaning did not converge in {max_iter} sweeps, largest group mean {worst:.3e}", worst)
    _logger.debug("demeaned %d columns over %d keys in %d sweeps", matrix.shape[1], len(codes_list), iterations)
    return DemeanResult(matrix[:, 0] if squeeze else matrix, iterations, worst)


def demean(frame: PanelFrame, columns: Iterable[str], groups: Sequence[str], tol: float = DEFAULT_TOL,
           max_iter: int = DEFAULT_MAX_ITER) -> PanelFrame:
    """
    replace the given columns by their fixed-effect residuals; the input frame is untouched
    rows must already be complete on those columns
    """
    columns = list(columns)
    frame.require(columns)
    if not groups:
        raise ConfigError("demeaning needs at least one group key")
    matrix = np.column_stack([frame.values(c) for c in columns]) if columns else np.zeros((frame.n_rows, 0))
    result = demean_array(matrix, frame.group_codes(groups), tol, max_iter)
    return frame.with_columns({c: result.residuals[:, j] for j, c in enumerate(columns)})


def constant_codes(n: int) -> List[np.ndarray]:
    """
    a single all-rows group, demeaning by it centers on the grand mean
    """
    return [np.zeros(n, dtype=np.int64)]
