import numpy as np
import pytest

from estimation.iv import LpIvSpec
from estimation.lp import LpSpec, fit_horizon
from inference.bootstrap import BootstrapScheme, BootstrapSpec, run_bootstrap, write_bootstrap
from inference.rng import rademacher, substream
from inference.targets import ArdlTarget, BootstrapTarget, DecompositionTarget, LpIvTarget, LpTarget
from panel.panel_frame import add_lags
from simulation.dgp import DgpSpec, generate_panel
from tests.conftest import make_panel
from util.errors import ConfigError, DataError, InferenceError

LP = LpSpec(outcome="y", shocks=["x"], groups=["country", "year"], horizons=(0, 1))


def exact_panel(rng, n_countries=8, n_years=12):
    a = rng.normal(size=(n_countries, 1))
    b = rng.normal(size=(1, n_years))
    x = rng.normal(size=(n_countries, n_years))
    return make_panel({"y": 0.8 * x + a + b, "x": x}, n_countries, n_years)


@pytest.mark.parametrize("scheme", list(BootstrapScheme))
def test_exact_fit_has_degenerate_interval(rng, scheme):
    spec = BootstrapSpec(scheme=scheme, replications=25, seed=11, target=LpTarget(LP))
    result = run_bootstrap(exact_panel(rng), spec)
    assert result.n_failed == 0
    assert [s.statistic for s in result.statistics] == ["x[h=0]", "x[h=1]"]
    for stat in result.statistics:
        assert stat.lo == pytest.approx(stat.estimate, abs=1e-8)
        assert stat.hi == pytest.approx(stat.estimate, abs=1e-8)
        assert stat.sd == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("scheme", list(BootstrapScheme))
def test_results_do_not_depend_on_workers(two_way_panel, scheme):
    spec = BootstrapSpec(scheme=scheme, replications=30, seed=2024, target=LpTarget(LP))
    serial = run_bootstrap(two_way_panel, spec, num_workers=1)
    threaded = run_bootstrap(two_way_panel, spec, num_workers=4)
    assert serial == threaded
    other = run_bootstrap(two_way_panel, spec.model_copy(update={"seed": 2025}), num_workers=1)
    assert other.statistics[0].lo != serial.statistics[0].lo


def test_interval_brackets_spread(two_way_panel):
    spec = BootstrapSpec(scheme=BootstrapScheme.CountryBlock, replications=50, seed=1, target=LpTarget(LP))
    stat = run_bootstrap(two_way_panel, spec).statistic("x[h=0]")
    assert stat.lo < stat.hi
    assert stat.sd > 0.0
    assert stat.n_effective == 50
    with pytest.raises(KeyError):
        run_bootstrap(two_way_panel, spec).statistic("x[h=9]")


class FailsAfterFirstFit(BootstrapTarget):
    name = "fragile"

    def __init__(self):
        self.calls = 0

    def fit(self, frame):
        self.calls += 1
        if self.calls > 1:
            raise DataError("resampled panel is degenerate")
        return {"h=0": fit_horizon(frame, LP, 0)}

    def statistics(self, fits):
        return {"x[h=0]": fits["h=0"].coefficient("x")}


def test_all_failed_replicates(two_way_panel):
    spec = BootstrapSpec(scheme=BootstrapScheme.CountryBlock, replications=5, target=FailsAfterFirstFit())
    with pytest.raises(InferenceError):
        run_bootstrap(two_way_panel, spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        BootstrapSpec(scheme=BootstrapScheme.CountryBlock, per_observation=True, target=LpTarget(LP))
    with pytest.raises(ValueError):
        BootstrapSpec(replications=0, target=LpTarget(LP))


def test_substreams():
    first = substream(5, 3).random(4)
    assert np.array_equal(first, substream(5, 3).random(4))
    assert not np.array_equal(first, substream(5, 4).random(4))
    signs = rademacher(substream(0, 0), 1000)
    assert set(np.unique(signs)) == {-1.0, 1.0}
    with pytest.raises(ConfigError):
        substream(-1, 0)


@pytest.fixture
def simulated():
    spec = DgpSpec(n_countries=12, n_years=25, burn_in=10, measure_sigma=1.0, noise=0.3,
                   instrument_loading=1.0, seed=9)
    frame, _ = generate_panel(spec)
    frame, lags = add_lags(frame, ["y", "p"], 1)
    return frame, lags


def test_other_targets(simulated):
    frame, lags = simulated
    targets = {
        "ratio[h=1]": LpIvTarget(LpIvSpec(outcome="y", shock="p", instrument="z", controls=lags,
                                          groups=["country", "year"], horizons=(0, 1))),
        "phi_inf": ArdlTarget("y", "p", J=1, groups=["country", "year"], H=3),
        "permanent[h=2]": DecompositionTarget("y", "p", controls=lags, groups=["country", "year"], H=2),
    }
    for name, target in targets.items():
        spec = BootstrapSpec(scheme=BootstrapScheme.WildRademacher, replications=10, seed=4, target=target)
        result = run_bootstrap(frame, spec)
        stat = result.statistic(name)
        assert stat.lo <= stat.hi
        assert np.isfinite(stat.estimate)


def test_writer(tmp_path, two_way_panel):
    spec = BootstrapSpec(scheme=BootstrapScheme.WildRademacher, replications=5, seed=8, target=LpTarget(LP))
    path = write_bootstrap(str(tmp_path / "boot.csv"), run_bootstrap(two_way_panel, spec))
    lines = open(path).read().splitlines()
    assert lines[0] == "# seed=8 scheme=WildRademacher replications=5 failed=0"
    assert lines[1] == "statistic,estimate,lo,hi,sd,n_effective"


@pytest.mark.slow
def test_wild_interval_coverage():
    covered = 0
    runs = 500
    spec = LpSpec(outcome="y", shocks=["x"], groups=["country", "year"], horizons=(0, 0), hac_bandwidth=0)
    for run in range(runs):
        rng = np.random.default_rng(run)
        n_countries, n_years = 40, 30
        x = rng.normal(size=(n_countries, n_years))
        y = 0.5 * x + rng.normal(size=(n_countries, 1)) + rng.normal(size=(n_countries, n_years))
        frame = make_panel({"y": y, "x": x}, n_countries, n_years)
        boot = BootstrapSpec(scheme=BootstrapScheme.WildRademacher, replications=399, seed=run,
                             target=LpTarget(spec))
        stat = run_bootstrap(frame, boot, num_workers=4).statistic("x[h=0]")
        covered += stat.lo <= 0.5 <= stat.hi
    # binomial sd of the coverage rate is about 0.01 at this run count
    assert 0.92 <= covered / runs <= 0.98
