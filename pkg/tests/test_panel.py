import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from panel.demean import constant_codes, demean, demean_array
from panel.panel_frame import LagSpec, PanelFrame, add_lags, balanced_subset, build_shifts, complete_rows, lag_name
from tests.conftest import make_panel
from util.errors import ConfigError, ConvergenceError, DataError


def gapped_panel() -> PanelFrame:
    return PanelFrame(pd.DataFrame({
        "country": ["A", "A", "A", "B", "B"],
        "year": [2000, 2001, 2003, 2000, 2001],
        "region": ["N", "N", "N", "S", "S"],
        "y": [1.0, 2.0, 4.0, 10.0, np.nan],
    }))


def dummy_residuals(y: np.ndarray, country: np.ndarray, year: np.ndarray) -> np.ndarray:
    """
    least squares on explicit country and year dummies
    """
    c_codes = pd.factorize(country, sort=True)[0]
    t_codes = pd.factorize(year, sort=True)[0]
    design = np.column_stack([np.eye(c_codes.max() + 1)[c_codes], np.eye(t_codes.max() + 1)[t_codes][:, 1:]])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ coef


def test_rows_are_sorted_and_keyed():
    frame = PanelFrame(pd.DataFrame({"country": ["B", "A"], "year": [2001.0, 2000.0], "v": ["1", "2"]}))
    assert list(frame.country_array) == ["A", "B"]
    assert frame.year_array.dtype == np.int64
    assert frame.labels == ("country", "region")
    assert_allclose(frame.values("v"), [2.0, 1.0])


def test_duplicate_rows_are_rejected():
    with pytest.raises(DataError, match="duplicate"):
        PanelFrame(pd.DataFrame({"country": ["A", "A"], "year": [2000, 2000], "y": [1.0, 2.0]}))


def test_unknown_column_is_named():
    with pytest.raises(DataError, match="'gdp'"):
        gapped_panel().values("gdp")


def test_shift_respects_calendar_gaps():
    frame = gapped_panel()
    assert_allclose(frame.shifted("y", -1), [np.nan, 1.0, np.nan, np.nan, 10.0])
    assert_allclose(frame.shifted("y", 2), [np.nan, 4.0, np.nan, np.nan, np.nan])


def test_lag_columns():
    frame, names = add_lags(gapped_panel(), ["y"], 2)
    assert names == [lag_name("y", 1), lag_name("y", 2)]
    assert_allclose(frame.values("y_lag2"), [np.nan, np.nan, 2.0, np.nan, np.nan])
    leads = build_shifts(gapped_panel(), LagSpec(variable="y", leads=frozenset({1})))
    assert_allclose(leads.values("y_lead1"), [2.0, np.nan, np.nan, np.nan, np.nan])
    with pytest.raises(ValueError):
        LagSpec(variable="y", lags=frozenset({0}))


def test_group_keys():
    frame = gapped_panel()
    assert list(frame.labels_for("region_year")) == ["N|2000", "N|2001", "N|2003", "S|2000", "S|2001"]
    assert list(frame.labels_for("country*region")) == ["A|N", "A|N", "A|N", "B|S", "B|S"]
    codes = frame.group_codes(["year"])[0]
    assert list(codes) == [0, 1, 2, 0, 1]
    with pytest.raises(DataError):
        frame.labels_for("regime")


def test_balanced_subset_drops_gapped_countries():
    frame = make_panel({"y": np.arange(12.0)}, 3, 4)
    holes = frame.values("y")
    holes[5] = np.nan
    frame = frame.with_columns({"y": holes})
    kept = balanced_subset(frame, ["y"], (-1, 1))
    assert kept.countries == ["C00", "C02"]
    with pytest.raises(ConfigError):
        balanced_subset(frame, ["y"], (2, 1))


def test_merge_columns_left_joins():
    frame = gapped_panel()
    merged = frame.merge_columns(pd.DataFrame({"country": ["A", "Z"], "year": [2000, 2000], "geo": [0.5, 0.1]}))
    assert_allclose(merged.values("geo"), [0.5, np.nan, np.nan, np.nan, np.nan])
    with pytest.raises(DataError):
        merged.merge_columns(pd.DataFrame({"country": ["A"], "year": [2000], "geo": [0.2]}))


def test_csv_round_trip(tmp_path):
    frame = gapped_panel()
    path = frame.to_csv(str(tmp_path / "panel.csv"))
    again = PanelFrame.read_csv(path)
    pd.testing.assert_frame_equal(again.data, frame.data)
    with pytest.raises(ConfigError):
        PanelFrame.read_csv(str(tmp_path / "missing.csv"))


def test_complete_rows():
    assert list(complete_rows(gapped_panel(), ["y"])) == [True, True, True, True, False]


@pytest.mark.parametrize("n_countries, n_years", [(3, 3), (10, 20)])
def test_two_way_demeaning_matches_dummy_regression(rng, n_countries, n_years):
    y = rng.normal(size=n_countries * n_years)
    frame = make_panel({"y": y}, n_countries, n_years)
    result = demean(frame, ["y"], ["country", "year"])
    expected = dummy_residuals(y, frame.country_array, frame.year_array)
    assert_allclose(result.values("y"), expected, atol=1e-10)


def test_unbalanced_demeaning_matches_dummy_regression(rng):
    frame = make_panel({"y": rng.normal(size=60)}, 6, 10)
    keep = rng.random(60) > 0.25
    keep[:10] = True
    frame = frame.select_rows(keep)
    result = demean(frame, ["y"], ["country", "year"], tol=1e-13)
    expected = dummy_residuals(frame.values("y"), frame.country_array, frame.year_array)
    assert_allclose(result.values("y"), expected, atol=1e-10)


def test_demeaning_is_idempotent(two_way_panel):
    once = demean(two_way_panel, ["y", "x"], ["country", "year"])
    twice = demean(once, ["y", "x"], ["country", "year"])
    assert_allclose(twice.values("y"), once.values("y"), atol=1e-10)
    assert_allclose(twice.values("x"), once.values("x"), atol=1e-10)


@pytest.mark.parametrize("a, b", [(2.0, -0.5), (-1.0, 3.0)])
def test_demeaning_is_linear(rng, a, b):
    frame = make_panel({"y": rng.normal(size=80), "x": rng.normal(size=80)}, 8, 10)
    keep = rng.random(80) > 0.2
    keep[:10] = True
    frame = frame.select_rows(keep)
    frame = frame.with_columns({"z": a * frame.values("y") + b * frame.values("x")})
    result = demean(frame, ["y", "x", "z"], ["country", "year"], tol=1e-13)
    assert_allclose(result.values("z"), a * result.values("y") + b * result.values("x"), atol=1e-10)


def test_single_key_takes_one_sweep(rng):
    values = rng.normal(size=(20, 2))
    codes = [np.repeat(np.arange(4), 5)]
    result = demean_array(values, codes)
    assert result.iterations == 1
    for g in range(4):
        assert_allclose(result.residuals[codes[0] == g].mean(axis=0), 0.0, atol=1e-14)


def test_constant_codes_center_on_grand_mean():
    result = demean_array(np.array([1.0, 2.0, 6.0]), constant_codes(3))
    assert_allclose(result.residuals, [-2.0, -1.0, 3.0])


def test_demeaning_input_errors(rng):
    with pytest.raises(DataError):
        demean_array(np.array([1.0, np.nan]), constant_codes(2))
    with pytest.raises(DataError):
        demean_array(np.ones(3), constant_codes(2))
    with pytest.raises(ConfigError):
        demean_array(np.ones(3), [])


def test_non_convergence_reports_worst_mean(rng):
    frame = make_panel({"y": rng.normal(size=40)}, 4, 10)
    frame = frame.select_rows(rng.random(40) > 0.3)
    with pytest.raises(ConvergenceError) as info:
        demean(frame, ["y"], ["country", "year"], tol=0.0, max_iter=2)
    assert info.value.worst >= 0.0
