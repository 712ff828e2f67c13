import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from estimation.ardl import irf_from_ardl
from estimation.iv import LpIvSpec, estimate_lp_iv, first_stage_irf, ratio_standard_error, write_lp_iv
from estimation.lp import LpSpec, estimate_lp
from panel.panel_frame import add_lags
from simulation.dgp import DgpSpec, generate_panel
from tests.conftest import make_panel


def iv_panel(rng, n_countries=40, n_years=40, noise=True):
    """
    shock driven by the instrument and a confounder that also moves the outcome
    """
    shape = (n_countries, n_years)
    a = rng.normal(size=(n_countries, 1))
    b = rng.normal(size=(1, n_years))
    z = rng.normal(size=shape)
    u = rng.normal(size=shape)
    shock = z + u + 0.5 * a
    y = 1.7 * shock + a + b
    if noise:
        y = y + 2.0 * u + rng.normal(size=shape)
    return make_panel({"y": y, "s": shock, "z": z}, n_countries, n_years)


def spec_for(**kwargs) -> LpIvSpec:
    values = dict(outcome="y", shock="s", instrument="z", groups=["country", "year"], horizons=(0, 0))
    values.update(kwargs)
    return LpIvSpec(**values)


def test_exact_relation_gives_exact_ratio(rng):
    result = estimate_lp_iv(iv_panel(rng, 10, 15, noise=False), spec_for())[0]
    assert result.ratio == pytest.approx(1.7, abs=1e-8)
    assert result.ratio_se == pytest.approx(0.0, abs=1e-6)
    assert not result.undefined and not result.weak_instrument


def test_instrument_removes_confounding(rng):
    frame = iv_panel(rng)
    iv = estimate_lp_iv(frame, spec_for())[0]
    ols = estimate_lp(frame, LpSpec(outcome="y", shocks=["s"], groups=["country", "year"], horizons=(0, 0)))[0]
    assert iv.ratio == pytest.approx(1.7, abs=0.25)
    assert ols.coef > 2.3
    assert iv.lo95 < iv.ratio < iv.hi95
    assert iv.fs_t > 10.0


def test_ratio_is_invariant_to_instrument_scale(rng):
    frame = iv_panel(rng, 12, 20)
    scaled = frame.with_columns({"z": -3.5 * frame.values("z")})
    spec = spec_for(horizons=(0, 3))
    for base, other in zip(estimate_lp_iv(frame, spec), estimate_lp_iv(scaled, spec)):
        assert other.ratio == pytest.approx(base.ratio, rel=1e-9)
        assert other.ratio_se == pytest.approx(base.ratio_se, rel=1e-7)
        assert abs(other.fs_t) == pytest.approx(abs(base.fs_t), rel=1e-9)
        assert other.fs_coef == pytest.approx(-base.fs_coef / 3.5, rel=1e-9)


def test_zero_first_stage_is_undefined(rng):
    frame = make_panel({"y": rng.normal(size=60), "s": np.ones(60), "z": rng.normal(size=60)}, 6, 10)
    result = estimate_lp_iv(frame, spec_for(groups=[]))[0]
    assert result.undefined and result.weak_instrument
    assert math.isnan(result.ratio) and math.isnan(result.ratio_se)


def test_weak_instrument_is_flagged(rng):
    z = rng.normal(size=200)
    z -= z.mean()
    noise = rng.normal(size=200)
    noise -= noise.mean()
    noise -= z * (z @ noise) / (z @ z)
    frame = make_panel({"y": rng.normal(size=200), "s": 1e-6 * z + noise, "z": z}, 10, 20)
    result = estimate_lp_iv(frame, spec_for(groups=[]))[0]
    assert result.weak_instrument and not result.undefined
    assert abs(result.fs_t) < 3.0


def test_per_horizon_first_stage(rng):
    frame = iv_panel(rng, 10, 20)
    shared = estimate_lp_iv(frame, spec_for(horizons=(0, 2)))
    own = estimate_lp_iv(frame, spec_for(horizons=(0, 2), per_horizon_first_stage=True))
    assert own[0] == shared[0]
    assert len({r.fs_coef for r in shared}) == 1
    assert own[2].fs_coef != shared[2].fs_coef
    assert [r.nobs for r in own] == [200, 190, 180]


def test_first_stage_response_starts_at_first_stage(rng):
    frame = iv_panel(rng, 10, 20)
    irf = first_stage_irf(frame, spec_for(horizons=(0, 2)))
    assert [r.shock for r in irf] == ["z", "z", "z"]
    assert irf[0].coef == pytest.approx(estimate_lp_iv(frame, spec_for())[0].fs_coef, rel=1e-10)


def test_delta_method_formula():
    se = ratio_standard_error(rf=2.0, fs=0.5, var_rf=0.04, var_fs=0.01, cov=0.005)
    variance = 0.04 / 0.25 + 4.0 * 0.01 / 0.0625 - 2.0 * 2.0 * 0.005 / 0.125
    assert se == pytest.approx(math.sqrt(variance))


def test_spec_validation():
    with pytest.raises(ValueError):
        spec_for(instrument="s")
    with pytest.raises(ValueError):
        spec_for(controls=["z"])


def test_writer(tmp_path, rng):
    path = write_lp_iv(str(tmp_path / "iv.csv"), estimate_lp_iv(iv_panel(rng, 8, 12), spec_for(horizons=(0, 1))))
    header = open(path).read().splitlines()[0].split(",")
    assert header[:3] == ["horizon", "rf_coef", "rf_se"]
    assert "weak_instrument" in header


def test_noiseless_loading_and_effect(rng):
    n_countries, n_years = 8, 12
    z = rng.normal(size=(n_countries, n_years))
    shock = 0.5 * z
    y = 2.0 * shock + rng.normal(size=(n_countries, 1)) + rng.normal(size=(1, n_years))
    frame = make_panel({"y": y, "s": shock, "z": z}, n_countries, n_years)
    result = estimate_lp_iv(frame, spec_for())[0]
    assert result.fs_coef == pytest.approx(0.5, abs=1e-10)
    assert result.rf_coef == pytest.approx(1.0, abs=1e-10)
    assert result.ratio == pytest.approx(2.0, abs=1e-9)
    assert not result.weak_instrument


def test_shock_as_its_own_instrument_is_the_projection(rng):
    frame = iv_panel(rng, 12, 20)
    frame = frame.with_columns({"z": frame.values("s")})
    iv = estimate_lp_iv(frame, spec_for(horizons=(0, 3)))
    ols = estimate_lp(frame, LpSpec(outcome="y", shocks=["s"], groups=["country", "year"], horizons=(0, 3)))
    assert [r.horizon for r in iv] == [r.horizon for r in ols]
    for a, b in zip(iv, ols):
        assert a.fs_coef == pytest.approx(1.0, abs=1e-10)
        assert a.ratio == pytest.approx(b.coef, rel=1e-9)
    assert iv[0].ratio_se == pytest.approx(ols[0].se, rel=1e-7)


def test_sample_sizes_are_reported(rng):
    results = estimate_lp_iv(iv_panel(rng, 10, 20), spec_for(horizons=(0, 2)))
    assert [r.nobs for r in results] == [200, 190, 180]
    assert [r.fs_nobs for r in results] == [200, 200, 200]
    assert [r.cov_nobs for r in results] == [200, 190, 180]


def test_first_stage_response_follows_measure_persistence():
    spec = DgpSpec(n_countries=200, n_years=40, burn_in=30, measure_ar=[0.6], measure_sigma=0.0,
                   instrument_loading=0.5, seed=3)
    frame, truth = generate_panel(spec, H=5)
    assert_allclose(truth.first_stage_irf, 0.5 * 0.6 ** np.arange(6), atol=1e-15)
    frame, lags = add_lags(frame, ["p"], 1)
    iv_spec = LpIvSpec(outcome="y", shock="p", instrument="z", controls=lags, groups=["year"], horizons=(0, 5))
    coefs = [r.coef for r in first_stage_irf(frame, iv_spec)]
    assert_allclose(coefs, truth.first_stage_irf, atol=0.04)
    assert coefs[0] == pytest.approx(0.5, abs=1e-8)


IV_DGP = dict(n_countries=100, n_years=45, burn_in=30, measure_ar=[0.0], measure_sigma=1.0, alpha=1.0,
              beta=[0.9], gamma=[0.0], noise=0.5, instrument_loading=1.0, year_fe_scale=1.0)


@pytest.mark.slow
def test_ratio_bias_is_small():
    H = 10
    spec = None
    ratios = []
    for seed in range(200):
        frame, _ = generate_panel(DgpSpec(seed=seed, **IV_DGP), H=H)
        frame, lags = add_lags(frame, ["y", "p", "z"], 1)
        if spec is None:
            spec = spec_for(outcome="y", shock="p", instrument="z", controls=lags, groups=["year"], horizons=(0, H))
        ratios.append([r.ratio for r in estimate_lp_iv(frame, spec, num_workers=4)])
    phi = np.asarray(irf_from_ardl(DgpSpec(**IV_DGP).true_fit(), H).phi)
    bias = np.mean(ratios, axis=0) - phi
    assert np.all(np.abs(bias) < 0.05 * np.abs(phi))
