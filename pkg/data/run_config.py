from dataclasses import dataclass, field
from typing import List, Literal, Optional, Union

from relations.majors import DEFAULT_MAJORS
from util.errors import ConfigError

COMMANDS = ("scores", "panel", "lp", "lpiv", "ardl", "decompose", "bootstrap", "account", "simulate", "stats")


@dataclass
class InputConfig:
    _argument_group_name = "Input and Output"
    events: List[str] = field(default_factory=list, metadata={"help": "event corpus files (JSON array, wrapper object or JSON Lines)"})
    weights: Optional[str] = field(default=None, metadata={"help": "GDP share csv (year, country, share)"})
    sanctions: Optional[str] = field(default=None, metadata={"help": "sanction indicator csv (major, country, year, sanctioned)"})
    panel: Optional[str] = field(default=None, metadata={"help": "panel csv (country, year, region, variables...)"})
    measures: List[str] = field(default_factory=list, metadata={"help": "measure csvs merged by the panel command, column named after the file"})
    external: List[str] = field(default_factory=list, metadata={"help": "external (country, year, value) csvs merged as measures of kind External"})
    output_dir: str = field(default="./output", metadata={"help": "directory for result files and the run manifest"})
    strict: bool = field(default=True, metadata={"help": "abort on the first invalid event record"})
    threads: int = field(default=1, metadata={"help": "worker cap for horizons, pairs and bootstrap replicates"})
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = field(default="INFO", metadata={"help": "log level"})
    show_timing: bool = field(default=False, metadata={"help": "print stage timings when done"})

    def check(self):
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")


@dataclass
class MeasureConfig:
    _argument_group_name = "Measure Construction"
    delta: float = field(default=0.3, metadata={"help": "depreciation rate of the dynamic score, in (0, 1]"})
    majors: List[str] = field(default_factory=lambda: list(DEFAULT_MAJORS), metadata={"help": "major nation codes"})
    decay_missing: bool = field(default=True, metadata={"help": "decay the effective event count in years without events"})
    end_year: Optional[int] = field(default=None, metadata={"help": "last year of the score recursion, defaults to the last event year"})
    partner_split: Literal["none", "us", "western"] = field(default="none", metadata={"help": "also emit the measure split by partner group"})
    instrument_root_min: int = field(default=9, metadata={"help": "lowest CAMEO root entering the instrument"})
    instrument_root_max: int = field(default=18, metadata={"help": "highest CAMEO root entering the instrument"})
    instrument_goldstein_max: float = field(default=0.0, metadata={"help": "largest Goldstein score entering the instrument"})
    measure_name: str = field(default="geo", metadata={"help": "column prefix of the emitted measures"})

    def check(self):
        if not 0.0 < self.delta <= 1.0:
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta}")
        if self.instrument_root_min > self.instrument_root_max:
            raise ConfigError("instrument root range out of order")
        if not self.majors:
            raise ConfigError("at least one major nation is required")


@dataclass
class EstimationConfig:
    _argument_group_name = "Estimation"
    outcome: str = field(default="gdp", metadata={"help": "outcome column, log GDP per capita x 100"})
    shocks: List[str] = field(default_factory=lambda: ["geo"], metadata={"help": "shock columns estimated jointly"})
    instrument: str = field(default="geo_iv", metadata={"help": "instrument column for lpiv"})
    controls: List[str] = field(default_factory=list, metadata={"help": "extra contemporaneous control columns"})
    lags: int = field(default=4, metadata={"help": "lags of the outcome, the shocks and the instrument"})
    lag_variables: List[str] = field(default_factory=list, metadata={"help": "extra columns entering with the same lags"})
    fixed_effects: List[str] = field(default_factory=lambda: ["country", "region_year"], metadata={"help": "group keys: label columns, year, <label>_year or a*b"})
    horizon_min: int = field(default=0, metadata={"help": "first horizon, negative for pre-trends"})
    horizon_max: int = field(default=10, metadata={"help": "last horizon"})
    hac_bandwidth: str = field(default="auto", metadata={"help": "Driscoll-Kraay truncation, an integer or auto"})
    balanced: bool = field(default=False, metadata={"help": "restrict to countries observed over the balanced horizon range"})
    balanced_min: int = field(default=-15, metadata={"help": "first offset of the balanced-panel requirement"})
    balanced_max: int = field(default=25, metadata={"help": "last offset of the balanced-panel requirement"})
    per_horizon_first_stage: bool = field(default=False, metadata={"help": "lpiv first stage on every horizon's sample"})
    irf_horizon: int = field(default=30, metadata={"help": "last horizon of ARDL and decomposition responses"})
    printed_recursion: bool = field(default=False, metadata={"help": "ARDL IRF adds every gamma up to min(k, J) at each k"})
    fwl_outcome_offset: Optional[int] = field(default=None, metadata={"help": "write FWL pairs and a binscatter for the outcome at t + offset"})
    fwl_regressor_offset: int = field(default=0, metadata={"help": "offset of the first shock in the FWL design"})
    n_bins: int = field(default=50, metadata={"help": "binscatter bin count"})
    demean_tol: float = field(default=1e-10, metadata={"help": "largest group mean accepted by demeaning"})
    demean_max_iter: int = field(default=10000, metadata={"help": "demeaning sweep budget"})

    @property
    def bandwidth(self) -> Union[int, str]:
        if self.hac_bandwidth == "auto":
            return "auto"
        try:
            value = int(self.hac_bandwidth)
        except ValueError:
            raise ConfigError(f"hac_bandwidth must be an integer or auto, got '{self.hac_bandwidth}'")
        if value < 0:
            raise ConfigError(f"HAC bandwidth must be nonnegative, got {value}")
        return value

    def check(self):
        if self.horizon_min > self.horizon_max:
            raise ConfigError(f"horizons out of order: {self.horizon_min} > {self.horizon_max}")
        if self.balanced_min > self.balanced_max:
            raise ConfigError("balanced range out of order")
        if self.lags < 0:
            raise ConfigError(f"lags must be nonnegative, got {self.lags}")
        if not self.shocks:
            raise ConfigError("at least one shock column is required")
        if self.irf_horizon < 0:
            raise ConfigError("irf_horizon must be nonnegative")
        if self.n_bins < 1:
            raise ConfigError("n_bins must be at least 1")
        _ = self.bandwidth


@dataclass
class BootstrapConfig:
    _argument_group_name = "Bootstrap"
    scheme: Literal["CountryBlock", "WildRademacher"] = field(default="CountryBlock", metadata={"help": "resampling scheme"})
    replications: int = field(default=1000, metadata={"help": "bootstrap replications"})
    seed: int = field(default=0, metadata={"help": "64-bit bootstrap seed"})
    target: Literal["lp", "lpiv", "ardl", "decompose"] = field(default="lp", metadata={"help": "estimator to resample"})
    per_observation: bool = field(default=False, metadata={"help": "wild signs per observation instead of per country"})

    def check(self):
        if self.replications < 1:
            raise ConfigError(f"replications must be at least 1, got {self.replications}")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass
class AccountingConfig:
    _argument_group_name = "Growth Accounting"
    transitory_irf: Optional[str] = field(default=None, metadata={"help": "decomposition csv with transitory and permanent columns"})
    measure_column: str = field(default="geo", metadata={"help": "panel column holding the measure"})
    permanent_horizon: int = field(default=25, metadata={"help": "horizon of the permanent response used for long-run effects"})
    window: int = field(default=25, metadata={"help": "lookback of the counterfactual convolution in years"})
    first_year: Optional[int] = field(default=None, metadata={"help": "earliest year entering the counterfactual, defaults to the first measure year"})
    decades: List[int] = field(default_factory=lambda: [1960, 1970, 1980, 1990, 2000, 2010], metadata={"help": "decade start years"})
    contemporaneous: Literal["printed", "end_of_decade"] = field(default="printed", metadata={"help": "decade contemporaneous convolution"})
    countries: List[str] = field(default_factory=list, metadata={"help": "countries for counterfactual paths, all when empty"})
    shift: float = field(default=1.0, metadata={"help": "measure change used for the reported steady-state effect"})

    def check(self):
        if self.window < 1:
            raise ConfigError(f"window must be at least 1, got {self.window}")
        if self.permanent_horizon < 0:
            raise ConfigError("permanent_horizon must be nonnegative")


@dataclass
class SimulationConfig:
    _argument_group_name = "Simulation"
    n_countries: int = field(default=40, metadata={"help": "simulated countries"})
    n_years: int = field(default=60, metadata={"help": "simulated years"})
    start_year: int = field(default=1960, metadata={"help": "first simulated year"})
    burn_in: int = field(default=50, metadata={"help": "discarded warm-up years"})
    measure_ar: List[float] = field(default_factory=lambda: [0.6], metadata={"help": "AR coefficients of the measure"})
    measure_sigma: float = field(default=0.1, metadata={"help": "measure innovation scale"})
    alpha: float = field(default=1.0, metadata={"help": "contemporaneous effect"})
    beta: List[float] = field(default_factory=lambda: [0.5], metadata={"help": "outcome lag coefficients"})
    gamma: List[float] = field(default_factory=lambda: [0.0], metadata={"help": "measure lag coefficients"})
    noise: float = field(default=1.0, metadata={"help": "outcome innovation scale"})
    country_fe_scale: float = field(default=0.0, metadata={"help": "country effect scale"})
    year_fe_scale: float = field(default=0.0, metadata={"help": "year effect scale"})
    region_year_fe_scale: float = field(default=0.0, metadata={"help": "region-year effect scale"})
    instrument_loading: float = field(default=0.0, metadata={"help": "loading of the measure on the instrument"})
    instrument_sigma: float = field(default=1.0, metadata={"help": "instrument scale"})
    n_regions: int = field(default=1, metadata={"help": "simulated regions"})
    sim_seed: int = field(default=0, metadata={"help": "64-bit simulation seed"})
    allow_unstable: bool = field(default=False, metadata={"help": "accept unstable lag polynomials"})
    event_rate: float = field(default=2.0, metadata={"help": "Poisson events per pair and year"})
    goldstein_mean: float = field(default=1.0, metadata={"help": "mean simulated Goldstein score"})
    goldstein_sd: float = field(default=3.0, metadata={"help": "spread of simulated Goldstein scores"})
    n_majors: int = field(default=3, metadata={"help": "simulated major nations"})
    from_events: bool = field(default=True, metadata={"help": "drive the outcome with the measure built from the simulated events"})
