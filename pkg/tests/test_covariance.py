import numpy as np
import pytest
from numpy.testing import assert_allclose

from estimation.covariance import auto_bandwidth, bread_matrix, dk_covariance, hc0_covariance
from estimation.regression import solve_least_squares
from util.errors import ConfigError, SingularityError


def direct_dk(design, residuals, years, bandwidth):
    """
    textbook double sum over year pairs with Bartlett weights
    """
    k = design.shape[1]
    year_set = sorted(set(years.tolist()))
    sums = {t: (design[years == t] * residuals[years == t, None]).sum(axis=0) for t in year_set}
    meat = np.zeros((k, k))
    for s in year_set:
        for t in year_set:
            distance = abs(s - t)
            if distance > bandwidth:
                continue
            meat += (1.0 - distance / (bandwidth + 1.0)) * np.outer(sums[s], sums[t])
    bread = np.linalg.inv(design.T @ design)
    return bread @ meat @ bread


@pytest.fixture
def toy(rng):
    years = np.repeat(np.arange(2000, 2012), 5)
    design = rng.normal(size=(len(years), 3))
    residuals = rng.normal(size=len(years))
    return design, residuals, years


@pytest.mark.parametrize("bandwidth", [0, 1, 3, 11])
def test_matches_direct_formula(toy, bandwidth):
    design, residuals, years = toy
    assert_allclose(dk_covariance(design, residuals, years, bandwidth),
                    direct_dk(design, residuals, years, bandwidth), rtol=1e-12, atol=1e-15)


def test_single_country_bandwidth_zero_is_hc0(rng):
    years = np.arange(1980, 2020)
    design = rng.normal(size=(40, 2))
    residuals = rng.normal(size=40)
    assert_allclose(dk_covariance(design, residuals, years, 0), hc0_covariance(design, residuals),
                    rtol=1e-12, atol=1e-15)


def test_lags_follow_calendar_distance(rng):
    years = np.array([2000, 2000, 2002, 2002, 2004, 2004])
    design = rng.normal(size=(6, 1))
    residuals = rng.normal(size=6)
    assert_allclose(dk_covariance(design, residuals, years, 1), dk_covariance(design, residuals, years, 0))
    assert_allclose(dk_covariance(design, residuals, years, 2),
                    direct_dk(design, residuals, years, 2), rtol=1e-12)


def test_stacked_residuals_give_block_covariance(toy, rng):
    design, residuals, years = toy
    other = rng.normal(size=len(residuals))
    joint = dk_covariance(design, np.column_stack([residuals, other]), years, 2)
    assert joint.shape == (6, 6)
    assert_allclose(joint[:3, :3], dk_covariance(design, residuals, years, 2), rtol=1e-12)
    assert_allclose(joint[3:, 3:], dk_covariance(design, other, years, 2), rtol=1e-12)
    assert_allclose(joint, joint.T)


def test_row_order_does_not_matter(toy, rng):
    design, residuals, years = toy
    order = rng.permutation(len(years))
    assert_allclose(dk_covariance(design[order], residuals[order], years[order], 3),
                    dk_covariance(design, residuals, years, 3), rtol=1e-11, atol=1e-15)


def test_zero_residuals_give_zero_covariance(toy):
    design, _, years = toy
    assert_allclose(dk_covariance(design, np.zeros(len(years)), years, 3), 0.0)


def test_negative_bandwidth(toy):
    design, residuals, years = toy
    with pytest.raises(ConfigError):
        dk_covariance(design, residuals, years, -1)


@pytest.mark.parametrize("horizon, periods, expected", [
    (0, 50, 2), (1, 50, 4), (10, 50, 17), (-3, 50, 7), (10, 5, 4), (0, 1, 0),
])
def test_auto_bandwidth(horizon, periods, expected):
    assert auto_bandwidth(horizon, periods) == expected


def test_collinear_regressor_is_named(rng):
    x = rng.normal(size=(30, 2))
    design = np.column_stack([x, x[:, 0] + 2.0 * x[:, 1]])
    with pytest.raises(SingularityError) as info:
        solve_least_squares(design, rng.normal(size=30), ["a", "b", "a_plus_b"])
    assert info.value.column == "a_plus_b"
    with pytest.raises(SingularityError):
        bread_matrix(np.zeros((5, 2)))
