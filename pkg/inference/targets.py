from abc import ABC, abstractmethod
from typing import Dict, Sequence

import numpy as np

from estimation.ardl import ArdlFit, estimate_ardl, irf_from_ardl
from estimation.decomposition import ShockDecomposition
from estimation.iv import LpIvSpec, fit_first_stage, fit_reduced_form
from estimation.lp import Bandwidth, DEFAULT_GROUPS, LpSpec, fit_horizon
from estimation.regression import RegressionFit
from panel.panel_frame import PanelFrame

FitSet = Dict[str, RegressionFit]


class BootstrapTarget(ABC):
    """
    an estimator seen by the bootstrap: a set of named regressions and statistics computed from them

    the wild scheme re-solves the regressions in `fit` with perturbed outcomes and calls `statistics`
    again, the block scheme calls both on a resampled panel
    """

    name = "target"

    @abstractmethod
    def fit(self, frame: PanelFrame) -> FitSet:
        pass

    @abstractmethod
    def statistics(self, fits: FitSet) -> Dict[str, float]:
        pass

    def evaluate(self, frame: PanelFrame) -> Dict[str, float]:
        return self.statistics(self.fit(frame))


class LpTarget(BootstrapTarget):
    name = "lp"

    def __init__(self, spec: LpSpec):
        self.spec = spec

    def fit(self, frame: PanelFrame) -> FitSet:
        return {f"h={h}": fit_horizon(frame, self.spec, h) for h in self.spec.horizon_list}

    def statistics(self, fits: FitSet) -> Dict[str, float]:
        return {f"{shock}[h={h}]": fits[f"h={h}"].coefficient(shock)
                for h in self.spec.horizon_list for shock in self.spec.shocks}


class LpIvTarget(BootstrapTarget):
    """
    both stages are re-estimated on every replicate
    """
    name = "lpiv"

    def __init__(self, spec: LpIvSpec):
        self.spec = spec

    def _fs_key(self, h: int) -> str:
        return f"fs:h={h}" if self.spec.per_horizon_first_stage else "fs"

    def fit(self, frame: PanelFrame) -> FitSet:
        fits = {}
        if not self.spec.per_horizon_first_stage:
            fits["fs"] = fit_first_stage(frame, self.spec, 0)
        for h in self.spec.horizon_list:
            fits[f"rf:h={h}"] = fit_reduced_form(frame, self.spec, h)
            if self.spec.per_horizon_first_stage:
                fits[self._fs_key(h)] = fit_first_stage(frame, self.spec, h)
        return fits

    def statistics(self, fits: FitSet) -> Dict[str, float]:
        instrument = self.spec.instrument
        stats = {}
        for h in self.spec.horizon_list:
            fs = fits[self._fs_key(h)].coefficient(instrument)
            rf = fits[f"rf:h={h}"].coefficient(instrument)
            stats[f"ratio[h={h}]"] = rf / fs if fs != 0.0 else float("nan")
        return stats


class ArdlTarget(BootstrapTarget):
    name = "ardl"

    def __init__(self, outcome: str, measure: str, J: int = 4, groups: Sequence[str] = DEFAULT_GROUPS,
                 H: int = 30, hac_bandwidth: Bandwidth = "auto"):
        self.outcome = outcome
        self.measure = measure
        self.J = J
        self.groups = list(groups)
        self.H = H
        self.hac_bandwidth = hac_bandwidth

    def fit(self, frame: PanelFrame) -> FitSet:
        ardl = estimate_ardl(frame, self.outcome, self.measure, self.J, self.groups, self.hac_bandwidth)
        return {"ardl": ardl.regression}

    def statistics(self, fits: FitSet) -> Dict[str, float]:
        c = fits["ardl"].coefficients
        params = ArdlFit.from_parameters(c[0], c[1:self.J + 1], c[self.J + 1:2 * self.J + 1])
        irf = irf_from_ardl(params, self.H)
        stats = {f"phi[h={h}]": value for h, value in enumerate(irf.phi)}
        stats["phi_inf"] = irf.phi_inf
        return stats


class DecompositionTarget(BootstrapTarget):
    """
    own-response and outcome-response projections are both re-estimated per replicate
    """
    name = "decompose"

    def __init__(self, outcome: str, measure: str, controls: Sequence[str] = (),
                 groups: Sequence[str] = DEFAULT_GROUPS, H: int = 30, hac_bandwidth: Bandwidth = "auto"):
        self.measure = measure
        self.H = H
        self.own_spec = LpSpec(outcome=measure, shocks=[measure], controls=list(controls), groups=list(groups),
                               horizons=(0, H), hac_bandwidth=hac_bandwidth)
        self.outcome_spec = self.own_spec.model_copy(update={"outcome": outcome})

    def fit(self, frame: PanelFrame) -> FitSet:
        fits = {}
        for h in range(self.H + 1):
            fits[f"own:h={h}"] = fit_horizon(frame, self.own_spec, h)
            fits[f"outcome:h={h}"] = fit_horizon(frame, self.outcome_spec, h)
        return fits

    def statistics(self, fits: FitSet) -> Dict[str, float]:
        horizons = range(self.H + 1)
        own = [fits[f"own:h={h}"].coefficient(self.measure) for h in horizons]
        response = [fits[f"outcome:h={h}"].coefficient(self.measure) for h in horizons]
        decomposition = ShockDecomposition.from_irfs(own, response)
        stats = {f"transitory[h={h}]": float(v) for h, v in enumerate(decomposition.transitory_outcome)}
        stats.update({f"permanent[h={h}]": float(v) for h, v in enumerate(decomposition.permanent_outcome)})
        return stats


def finite(stats: Dict[str, float]) -> bool:
    return bool(np.all(np.isfinite(list(stats.values()))))
