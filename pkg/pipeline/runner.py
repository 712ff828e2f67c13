import logging
import os
import traceback
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from accounting.growth_accounting import AccountingInputs, counterfactual_paths, decade_effects, long_run_effect, \
    measure_panel, measure_panel_from_frame, median_series, steady_state_effect, write_counterfactuals, \
    write_decade_effects, write_median_series
from data.run_config import AccountingConfig, BootstrapConfig, EstimationConfig, InputConfig, MeasureConfig, \
    SimulationConfig
from estimation.ardl import estimate_ardl, irf_from_ardl, write_ardl_coefficients, write_ardl_irf
from estimation.decomposition import estimate_decomposition, write_decomposition
from estimation.iv import estimate_lp_iv, first_stage_irf, write_lp_iv
from estimation.lp import binscatter, estimate_lp_fits, fwl_residualize, fwl_slope, irf_results, write_binscatter, \
    write_fwl_pairs, write_irf
from events.event_data import EventRecord
from events.event_reader import EventParseResult, read_event_files, write_events, write_validation_report
from inference.bootstrap import run_bootstrap, write_bootstrap
from panel.panel_frame import PanelFrame, add_lags, balanced_subset
from pipeline import factory
from pipeline.manifest import ManifestLogger, NullManifestLogger
from pipeline.summary import event_statistics, instrument_statistics, measure_extremes, measure_statistics, \
    write_event_statistics, write_instrument_statistics, write_measure_extremes, write_measure_statistics
from relations.country_measures import MeasureKind, MeasureSeries, aggregate_country, aggregate_yearly, \
    build_instrument, build_sanctions_measure, measures_to_frame, read_measures, read_sanction_flags, write_measures
from relations.majors import partner_groups
from relations.pair_scores import DynamicPairScore, dynamic_pair_scores, yearly_pair_scores
from relations.weights import WeightBook, read_weights, write_weights
from simulation.dgp import INSTRUMENT, MEASURE, OUTCOME, generate_panel
from simulation.event_generator import generate_events, generate_weights, simulated_majors
from util.errors import ConfigError, DataError, GeoGrowthError
from util.serialize_utils import write_table
from util.time_measure import TimeMeasure

_logger = logging.getLogger(__name__)


def file_stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def require_path(path: Optional[str], flag: str, command: str) -> str:
    if not path:
        raise ConfigError(f"{command} needs --{flag}")
    if not os.path.exists(path):
        raise ConfigError(f"--{flag} file not found: {path}")
    return path


def write_pair_scores(path: str, scores: List[DynamicPairScore]) -> str:
    rows = [{"country1": s.pair[0], "country2": s.pair[1], "year": s.year, "s": s.s,
             "n_effective": s.n_effective, "phi": s.phi} for s in scores]
    return write_table(path, rows, ["country1", "country2", "year", "s", "n_effective", "phi"])


def write_relationships(path: str, parsed: EventParseResult) -> str:
    """
    relationship category per pair-year, from events and from no-event annotations
    """
    entries = set()
    for item in [*parsed.events, *parsed.annotations]:
        if item.relationship is not None:
            entries.add((*item.pair, item.year, item.relationship.value))
    rows = [{"country1": a, "country2": b, "year": y, "relationship": r} for a, b, y, r in sorted(entries)]
    return write_table(path, rows, ["country1", "country2", "year", "relationship"])


def read_transitory_irf(path: str) -> pd.DataFrame:
    frame = pd.read_csv(path, comment="#")
    for column in ("horizon", "transitory", "permanent"):
        if column not in frame.columns:
            raise DataError(f"{path}: missing column '{column}'")
    frame = frame.sort_values("horizon", kind="mergesort").reset_index(drop=True)
    if not np.array_equal(frame["horizon"].to_numpy(), np.arange(len(frame))):
        raise DataError(f"{path}: horizons must run 0, 1, 2, ... without gaps")
    return frame


class GeoGrowthRunner:
    def __init__(self,
                 input_conf: InputConfig,
                 measure_conf: MeasureConfig,
                 est_conf: EstimationConfig,
                 boot_conf: BootstrapConfig,
                 acc_conf: AccountingConfig,
                 sim_conf: SimulationConfig,
                 manifest: Optional[ManifestLogger] = None):
        self.input_conf = input_conf
        self.measure_conf = measure_conf
        self.est_conf = est_conf
        self.boot_conf = boot_conf
        self.acc_conf = acc_conf
        self.sim_conf = sim_conf
        self.manifest = manifest if manifest is not None else NullManifestLogger()
        self._tm = TimeMeasure.default()
        self.written: List[str] = []

    @property
    def threads(self) -> int:
        return self.input_conf.threads

    def _output(self, name: str) -> str:
        return os.path.join(self.input_conf.output_dir, name)

    def _written(self, path: str) -> str:
        self.manifest.log_output(path)
        self.written.append(path)
        return path

    def run(self, command: str) -> List[str]:
        handler = getattr(self, f"cmd_{command}", None)
        if handler is None:
            raise ConfigError(f"unknown command '{command}'")
        try:
            self.input_conf.check()
            with self._tm.measure(command):
                handler()
            manifest_path = self.manifest.close()
            return self.written + ([manifest_path] if manifest_path else [])
        except GeoGrowthError:
            raise
        except Exception as e:
            print("An error occured")
            print("The information of error is as following")
            traceback.print_exc()
            raise e

    # inputs

    def _read_events(self) -> EventParseResult:
        if not self.input_conf.events:
            raise ConfigError("this command needs --events")
        for path in self.input_conf.events:
            require_path(path, "events", "event ingestion")
        with self._tm.measure("read events"):
            parsed = read_event_files(self.input_conf.events, strict=self.input_conf.strict)
        if not parsed.events:
            _logger.warning("event corpus is empty")
        _logger.info("%d events, %d annotations from %d records", len(parsed.events), len(parsed.annotations),
                     parsed.n_records)
        return parsed

    def _read_weights(self) -> WeightBook:
        return read_weights(require_path(self.input_conf.weights, "weights", "measure construction"))

    def _read_panel(self) -> PanelFrame:
        with self._tm.measure("read panel"):
            return PanelFrame.read_csv(require_path(self.input_conf.panel, "panel", "estimation"))

    def _estimation_frame(self, lag_variables: List[str], n_lags: Optional[int] = None) -> PanelFrame:
        est = self.est_conf
        frame = self._read_panel()
        with self._tm.measure("build lags"):
            frame.require(lag_variables)
            frame, _ = add_lags(frame, lag_variables, est.lags if n_lags is None else n_lags)
        if est.balanced:
            before = len(frame.countries)
            frame = balanced_subset(frame, [est.outcome, *est.shocks], (est.balanced_min, est.balanced_max))
            _logger.info("balanced panel keeps %d of %d countries", len(frame.countries), before)
            if frame.n_rows == 0:
                raise DataError(f"no country is observed over offsets {est.balanced_min}..{est.balanced_max}")
        return frame

    # measures

    def _country_measures(self, events: List[EventRecord], weights: WeightBook, majors: List[str],
                          end_year: Optional[int]) -> Tuple[Dict[str, List[MeasureSeries]], List[DynamicPairScore]]:
        conf = self.measure_conf
        name = conf.measure_name
        with self._tm.measure("pair scores"):
            yearly = yearly_pair_scores(events)
            dynamic = dynamic_pair_scores(yearly, conf.delta, end_year, conf.decay_missing, self.threads)
        with self._tm.measure("aggregate"):
            measures = {
                name: aggregate_country(dynamic, weights, majors),
                f"{name}_yearly": aggregate_yearly(yearly, weights, majors),
                f"{name}_iv": build_instrument(events, weights, majors, factory.create_event_filter(conf)),
            }
            if conf.partner_split != "none":
                for suffix, partners in partner_groups(conf.partner_split, frozenset(majors)).items():
                    measures[f"{name}_{suffix}"] = aggregate_country(dynamic, weights, majors, partners=partners)
        return measures, dynamic

    def cmd_scores(self):
        self.measure_conf.check()
        parsed = self._read_events()
        weights = self._read_weights()
        measures, dynamic = self._country_measures(parsed.events, weights, self.measure_conf.majors,
                                          self.measure_conf.end_year)
        if self.input_conf.sanctions:
            flags = read_sanction_flags(require_path(self.input_conf.sanctions, "sanctions", "scores"))
            measures["sanctions"] = build_sanctions_measure(flags, weights, self.measure_conf.majors)
        for name, series in measures.items():
            self._written(write_measures(self._output(f"{name}.csv"), series))
        self._written(write_pair_scores(self._output("pair_scores.csv"), dynamic))
        self._written(write_relationships(self._output("relationships.csv"), parsed))
        self._written(write_validation_report(self._output("validation_report.csv"), parsed))
        self.manifest.log_value("events", len(parsed.events))
        self.manifest.log_value("rejected", len(parsed.rejections))

    def cmd_panel(self):
        frame = self._read_panel()
        for path in self.input_conf.measures:
            series = read_measures(require_path(path, "measures", "panel"))
            frame = frame.merge_columns(measures_to_frame(series, file_stem(path)))
        for path in self.input_conf.external:
            series = read_measures(require_path(path, "external", "panel"), kind=MeasureKind.External)
            frame = frame.merge_columns(measures_to_frame(series, file_stem(path)))
        _logger.info("panel: %d countries, %d rows, variables %s", len(frame.countries), frame.n_rows,
                     list(frame.variables))
        self._written(frame.to_csv(self._output("panel.csv")))

    # estimation

    def cmd_lp(self):
        est = self.est_conf
        est.check()
        spec = factory.create_lp_spec(est)
        frame = self._estimation_frame(factory.lp_lag_variables(est))
        with self._tm.measure("local projections"):
            fits = estimate_lp_fits(frame, spec, self.threads)
        if not fits:
            raise DataError("no horizon has enough complete observations")
        for h, fit in sorted(fits.items()):
            self.manifest.log_sample("lp", h, fit.nobs, fit.n_countries)
        self._written(write_irf(self._output("irf.csv"), irf_results(fits, spec.shocks)))

        if est.fwl_outcome_offset is not None:
            shock = spec.shocks[0]
            controls = [*spec.shocks[1:], *spec.controls]
            with self._tm.measure("fwl"):
                pairs = fwl_residualize(frame, est.outcome, shock, controls, spec.groups, est.fwl_outcome_offset,
                                        est.fwl_regressor_offset, est.demean_tol, est.demean_max_iter)
            self.manifest.log_value("fwl_slope", fwl_slope(pairs))
            self._written(write_fwl_pairs(self._output("fwl_pairs.csv"), pairs))
            self._written(write_binscatter(self._output("binscatter.csv"), binscatter(pairs, est.n_bins)))

    def cmd_lpiv(self):
        est = self.est_conf
        est.check()
        spec = factory.create_lp_iv_spec(est)
        frame = self._estimation_frame(factory.lp_lag_variables(est, with_instrument=True))
        with self._tm.measure("lp-iv"):
            results = estimate_lp_iv(frame, spec, self.threads)
        if not results:
            raise DataError("no horizon has enough complete observations")
        for r in results:
            self.manifest.log_sample("lpiv", r.horizon, r.nobs, r.n_countries)
        self._written(write_lp_iv(self._output("lp_iv.csv"), results))
        with self._tm.measure("first stage"):
            first_stage = first_stage_irf(frame, spec, self.threads)
        self._written(write_irf(self._output("first_stage.csv"), first_stage))

    def cmd_ardl(self):
        est = self.est_conf
        est.check()
        J = max(est.lags, 1)
        frame = self._estimation_frame([est.outcome, est.shocks[0]], J)
        with self._tm.measure("ardl"):
            fit = estimate_ardl(frame, est.outcome, est.shocks[0], J, est.fixed_effects, est.bandwidth,
                                est.demean_tol, est.demean_max_iter)
            irf = irf_from_ardl(fit, est.irf_horizon, est.printed_recursion)
        self.manifest.log_sample("ardl", None, fit.nobs, fit.n_countries)
        self.manifest.log_value("phi_inf", irf.phi_inf)
        self.manifest.log_value("stable", irf.stable)
        self.manifest.log_value("steady_state_effect", steady_state_effect(irf.phi_inf, self.acc_conf.shift))
        self._written(write_ardl_coefficients(self._output("ardl_coefficients.csv"), fit))
        self._written(write_ardl_irf(self._output("ardl_irf.csv"), irf))

    def cmd_decompose(self):
        est = self.est_conf
        est.check()
        controls = factory.create_decomposition_controls(est)
        frame = self._estimation_frame([est.outcome, est.shocks[0], *est.lag_variables])
        with self._tm.measure("decomposition"):
            decomposition = estimate_decomposition(frame, est.outcome, est.shocks[0], controls, est.fixed_effects,
                                                   est.irf_horizon, est.bandwidth, self.threads)
        self.manifest.log_value("permanent_final", float(decomposition.permanent_outcome[-1]))
        self._written(write_decomposition(self._output("decomposition.csv"), decomposition))

    def cmd_bootstrap(self):
        est, boot = self.est_conf, self.boot_conf
        est.check()
        boot.check()
        spec = factory.create_bootstrap_spec(boot, est)
        if boot.target == "ardl":
            frame = self._estimation_frame([est.outcome, est.shocks[0]], max(est.lags, 1))
        elif boot.target == "decompose":
            frame = self._estimation_frame([est.outcome, est.shocks[0], *est.lag_variables])
        else:
            frame = self._estimation_frame(factory.lp_lag_variables(est, with_instrument=boot.target == "lpiv"))
        with self._tm.measure("bootstrap"):
            result = run_bootstrap(frame, spec, self.threads)
        self.manifest.log_value("failed_replicates", result.n_failed)
        self._written(write_bootstrap(self._output(f"bootstrap_{boot.target}.csv"), result))

    # accounting

    def _accounting_measure(self) -> Dict[str, Dict[int, float]]:
        column = self.acc_conf.measure_column
        if self.input_conf.panel:
            return measure_panel_from_frame(self._read_panel(), column)
        if self.input_conf.measures:
            return measure_panel(read_measures(require_path(self.input_conf.measures[0], "measures", "account")))
        raise ConfigError("account needs --panel or --measures for the measure series")

    def cmd_account(self):
        acc = self.acc_conf
        acc.check()
        irf = read_transitory_irf(require_path(acc.transitory_irf, "transitory_irf", "account"))
        if acc.permanent_horizon >= len(irf):
            raise DataError(f"permanent response needs horizon {acc.permanent_horizon}, "
                            f"the decomposition stops at {len(irf) - 1}")
        permanent = float(irf["permanent"].iloc[acc.permanent_horizon])
        inputs = AccountingInputs(transitory_irf=irf["transitory"].to_numpy(dtype=float), permanent_25=permanent,
                                  measure=self._accounting_measure(), window=acc.window, first_year=acc.first_year)

        effects, excluded = [], {}
        with self._tm.measure("decade effects"):
            for decade in acc.decades:
                try:
                    decade_rows, missing = decade_effects(inputs, decade, acc.contemporaneous)
                except DataError as e:
                    _logger.warning("%s", e)
                    continue
                effects.extend(decade_rows)
                excluded[str(decade)] = missing
        if acc.decades and not effects:
            raise DataError("no decade has a country with complete measure data")
        with self._tm.measure("counterfactuals"):
            points = counterfactual_paths(inputs, acc.countries or None, self.threads)

        self.manifest.log_value("excluded", excluded)
        self.manifest.log_value("permanent_response", permanent)
        self.manifest.log_value("long_run_effect", long_run_effect(permanent, acc.shift))
        self._written(write_decade_effects(self._output("decade_effects.csv"), effects))
        self._written(write_counterfactuals(self._output("counterfactuals.csv"), points))
        self._written(write_median_series(self._output("median_measure.csv"), median_series(inputs.measure)))

    # simulation and statistics

    def cmd_simulate(self):
        sim, est, conf = self.sim_conf, self.est_conf, self.measure_conf
        spec = factory.create_dgp_spec(sim)
        H = max(est.irf_horizon, 0)
        if sim.from_events:
            conf.check()
            majors = simulated_majors(spec)
            with self._tm.measure("simulate events"):
                events = generate_events(spec)
                weights = generate_weights(spec, majors)
            measures, _ = self._country_measures(events, weights, majors, spec.years[-1])
            with self._tm.measure("simulate panel"):
                frame, truth = generate_panel(spec, measure_panel(measures[conf.measure_name]), H, self.threads)
            self._written(write_events(self._output("events.jsonl"), events))
            self._written(write_weights(self._output("weights.csv"), weights))
            for name, series in measures.items():
                self._written(write_measures(self._output(f"{name}.csv"), series))
        else:
            with self._tm.measure("simulate panel"):
                frame, truth = generate_panel(spec, None, H, self.threads)

        # column names match the estimation defaults so later commands run without renaming flags
        renamed = frame.data.rename(columns={OUTCOME: est.outcome, MEASURE: conf.measure_name,
                                             INSTRUMENT: est.instrument})
        frame = PanelFrame(renamed, labels=[l for l in frame.labels if l in renamed.columns])
        self._written(frame.to_csv(self._output("panel.csv")))
        rows = [{"horizon": h, "phi": truth.phi[h], "measure_irf": truth.measure_irf[h], "lp_irf": truth.lp_irf[h],
                 "first_stage_irf": truth.first_stage_irf[h]} for h in range(H + 1)]
        self._written(write_table(self._output("ground_truth.csv"), rows,
                                  ["horizon", "phi", "measure_irf", "lp_irf", "first_stage_irf"]))
        self.manifest.log_value("phi_inf", truth.phi_inf)

    def cmd_stats(self):
        parsed = self._read_events()
        with self._tm.measure("event statistics"):
            self._written(write_event_statistics(self._output("event_stats.csv"), event_statistics(parsed.events)))
            self._written(write_instrument_statistics(
                self._output("instrument_stats.csv"),
                instrument_statistics(parsed.events, factory.create_event_filter(self.measure_conf))))
        for path in self.input_conf.measures:
            series = read_measures(require_path(path, "measures", "stats"))
            stem = file_stem(path)
            self._written(write_measure_statistics(self._output(f"measure_stats_{stem}.csv"),
                                                   measure_statistics(series)))
            self._written(write_measure_extremes(self._output(f"measure_extremes_{stem}.csv"),
                                                 measure_extremes(series)))
