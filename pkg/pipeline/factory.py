import logging
from typing import List, Optional

from pydantic import ValidationError

from data.run_config import BootstrapConfig, EstimationConfig, MeasureConfig, SimulationConfig
from estimation.iv import LpIvSpec
from estimation.lp import LpSpec
from events.event_filter import EventFilter
from inference.bootstrap import BootstrapScheme, BootstrapSpec
from inference.targets import ArdlTarget, BootstrapTarget, DecompositionTarget, LpIvTarget, LpTarget
from panel.panel_frame import lag_name
from simulation.dgp import DgpSpec
from util.errors import ConfigError

_logger = logging.getLogger(__name__)


def _validated(kind: str, build):
    try:
        return build()
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first.get("loc", ())) or kind
        raise ConfigError(f"invalid {kind} settings: {location}: {first.get('msg', e)}")


def lag_controls(est_conf: EstimationConfig, variables: List[str]) -> List[str]:
    return [lag_name(v, l) for v in variables for l in range(1, est_conf.lags + 1)]


def lp_lag_variables(est_conf: EstimationConfig, with_instrument: bool = False) -> List[str]:
    variables = [est_conf.outcome, *est_conf.shocks]
    if with_instrument:
        variables.append(est_conf.instrument)
    variables += [v for v in est_conf.lag_variables if v not in variables]
    return list(dict.fromkeys(variables))


def create_event_filter(measure_conf: MeasureConfig) -> EventFilter:
    return _validated("instrument filter", lambda: EventFilter.instrument(
        root_min=measure_conf.instrument_root_min, root_max=measure_conf.instrument_root_max,
        goldstein_max=measure_conf.instrument_goldstein_max))


def create_lp_spec(est_conf: EstimationConfig, horizons: Optional[tuple] = None) -> LpSpec:
    controls = [*est_conf.controls, *lag_controls(est_conf, lp_lag_variables(est_conf))]
    return _validated("local projection", lambda: LpSpec(
        outcome=est_conf.outcome, shocks=est_conf.shocks, controls=controls, groups=est_conf.fixed_effects,
        horizons=horizons or (est_conf.horizon_min, est_conf.horizon_max), hac_bandwidth=est_conf.bandwidth,
        tol=est_conf.demean_tol, max_iter=est_conf.demean_max_iter))


def create_lp_iv_spec(est_conf: EstimationConfig) -> LpIvSpec:
    shock = est_conf.shocks[0]
    if len(est_conf.shocks) > 1:
        _logger.warning("lpiv uses the first shock '%s' only", shock)
    variables = [est_conf.outcome, shock, est_conf.instrument]
    variables += [v for v in est_conf.lag_variables if v not in variables]
    controls = [*est_conf.controls, *lag_controls(est_conf, variables)]
    return _validated("LP-IV", lambda: LpIvSpec(
        outcome=est_conf.outcome, shock=shock, instrument=est_conf.instrument, controls=controls,
        groups=est_conf.fixed_effects, horizons=(est_conf.horizon_min, est_conf.horizon_max),
        hac_bandwidth=est_conf.bandwidth, per_horizon_first_stage=est_conf.per_horizon_first_stage,
        tol=est_conf.demean_tol, max_iter=est_conf.demean_max_iter))


def create_decomposition_controls(est_conf: EstimationConfig) -> List[str]:
    variables = [est_conf.outcome, est_conf.shocks[0], *est_conf.lag_variables]
    return [*est_conf.controls, *lag_controls(est_conf, list(dict.fromkeys(variables)))]


def create_bootstrap_target(boot_conf: BootstrapConfig, est_conf: EstimationConfig) -> BootstrapTarget:
    if boot_conf.target == "lp":
        return LpTarget(create_lp_spec(est_conf))
    if boot_conf.target == "lpiv":
        return LpIvTarget(create_lp_iv_spec(est_conf))
    if boot_conf.target == "ardl":
        return ArdlTarget(est_conf.outcome, est_conf.shocks[0], max(est_conf.lags, 1), est_conf.fixed_effects,
                          est_conf.irf_horizon, est_conf.bandwidth)
    if boot_conf.target == "decompose":
        return DecompositionTarget(est_conf.outcome, est_conf.shocks[0], create_decomposition_controls(est_conf),
                                   est_conf.fixed_effects, est_conf.irf_horizon, est_conf.bandwidth)
    raise ConfigError(f"unknown bootstrap target '{boot_conf.target}'")


def create_bootstrap_spec(boot_conf: BootstrapConfig, est_conf: EstimationConfig) -> BootstrapSpec:
    target = create_bootstrap_target(boot_conf, est_conf)
    return _validated("bootstrap", lambda: BootstrapSpec(
        scheme=BootstrapScheme(boot_conf.scheme), replications=boot_conf.replications, seed=boot_conf.seed,
        target=target, per_observation=boot_conf.per_observation))


def create_dgp_spec(sim_conf: SimulationConfig) -> DgpSpec:
    return _validated("simulation", lambda: DgpSpec(
        n_countries=sim_conf.n_countries, n_years=sim_conf.n_years, start_year=sim_conf.start_year,
        burn_in=sim_conf.burn_in, measure_ar=sim_conf.measure_ar, measure_sigma=sim_conf.measure_sigma,
        alpha=sim_conf.alpha, beta=sim_conf.beta, gamma=sim_conf.gamma, noise=sim_conf.noise,
        country_fe_scale=sim_conf.country_fe_scale, year_fe_scale=sim_conf.year_fe_scale,
        region_year_fe_scale=sim_conf.region_year_fe_scale, instrument_loading=sim_conf.instrument_loading,
        instrument_sigma=sim_conf.instrument_sigma, n_regions=sim_conf.n_regions, seed=sim_conf.sim_seed,
        allow_unstable=sim_conf.allow_unstable, event_rate=sim_conf.event_rate,
        goldstein_mean=sim_conf.goldstein_mean, goldstein_sd=sim_conf.goldstein_sd, n_majors=sim_conf.n_majors))
