import numpy as np
import pytest

from netform.grouped import BicGrid, bic, fit_grouped, select_group_counts
from netform.simulation import DgpConfig, generate_network
from netform.step1 import fit_fixed_effects


@pytest.fixture(scope="module")
def sim():
    return generate_network(DgpConfig(n=54, r=1.0, seed=8), 0)


@pytest.fixture(scope="module")
def oracle_fit(sim):
    return fit_grouped(sim.dataset, sim.groups.membership_a, sim.groups.membership_b)


def test_bic_reported_minimum():
    assert bic(-810.798, 5, 7, 6, 57) == pytest.approx(1761.725, abs=1e-3)


def test_bic_penalty_increment():
    assert bic(-810.798, 5, 7, 7, 57) - bic(-810.798, 5, 7, 6, 57) == pytest.approx(np.log(1596), abs=1e-12)
    assert bic(0.0, 2, 3, 3, 10) == pytest.approx(9 * np.log(45))
    with pytest.raises(ValueError):
        bic(-1.0, 1, 2, 2, 1)


def test_oracle_fit_shapes(sim, oracle_fit):
    fit = oracle_fit
    assert fit.converged and not fit.singular
    assert fit.vector.size == sim.dataset.d_z + 1 + 3 + 3
    assert fit.names == ["beta_1", "beta_2", "alpha", "rho", "a_2", "a_3", "b_1", "b_2", "b_3"]
    assert fit.groups.a_values[0] == 0.0
    assert fit.groups.is_ordered()


def test_covariance_and_t_values(oracle_fit):
    cov = oracle_fit.covariance
    assert np.allclose(cov, cov.T, atol=1e-15)
    assert np.linalg.eigvalsh(cov)[0] > 0
    np.testing.assert_allclose(oracle_fit.t_values, oracle_fit.vector / oracle_fit.standard_errors, rtol=1e-12)


def test_recovers_truth_roughly(sim, oracle_fit):
    np.testing.assert_allclose(oracle_fit.groups.a_values, sim.groups.a_values, atol=0.5)
    assert abs(oracle_fit.theta_hat.alpha - 0.6) < 0.5


def test_labels_resorted_after_fit(sim, oracle_fit):
    # swap the names of sender groups 2 and 3; the fit must hand back ascending labels
    ma = sim.groups.membership_a.copy()
    swapped = np.where(ma == 2, 3, np.where(ma == 3, 2, ma))
    fit = fit_grouped(sim.dataset, swapped, sim.groups.membership_b)
    assert fit.groups.is_ordered()
    assert np.array_equal(fit.groups.membership_a, oracle_fit.groups.membership_a)
    assert fit.loglik_sum == pytest.approx(oracle_fit.loglik_sum, abs=1e-8)


def test_singleton_groups_reproduce_fixed_effects():
    sim = generate_network(DgpConfig(n=8, r=1.0, seed=2), 0)
    data = sim.dataset
    step1 = fit_fixed_effects(data)
    ident = np.arange(1, data.n + 1)
    fit = fit_grouped(data, ident, ident, init=step1)
    assert fit.loglik_sum == pytest.approx(step1.loglik_sum, abs=1e-8)


def test_invalid_memberships(sim):
    n = sim.dataset.n
    with pytest.raises(ValueError, match="none empty"):
        fit_grouped(sim.dataset, np.where(np.arange(n) < 5, 1, 3), sim.groups.membership_b)
    with pytest.raises(ValueError):
        fit_grouped(sim.dataset, np.ones(n - 1, int), sim.groups.membership_b)


def test_select_single_cell(sim):
    grid = select_group_counts(sim.dataset, [3], [3])
    assert grid.best == (3, 3)
    assert np.isfinite(grid.table[0, 0])


def test_select_grid_penalty_tradeoff(sim):
    grid = select_group_counts(sim.dataset, [2, 3], [2, 3])
    for (ka, kb), fit in grid.fits.items():
        r, c = grid.k_a_values.index(ka), grid.k_b_values.index(kb)
        assert grid.table[r, c] == pytest.approx(bic(fit.loglik_sum, 2, ka, kb, sim.dataset.n))
    with pytest.raises(ValueError):
        select_group_counts(sim.dataset, [1, 2], [2])


def test_grid_with_only_failures():
    grid = BicGrid([2], [2], np.array([[np.nan]]))
    with pytest.raises(RuntimeError):
        grid.best


def test_singular_information_is_reported(sim):
    # a covariate that is zero everywhere carries no information about its coefficient
    from netform.model import Dataset, DyadCovariates

    z = sim.dataset.covariates.z.copy()
    z[:, :, 1] = 0.0
    data = Dataset(sim.dataset.network, DyadCovariates(z))
    fit = fit_grouped(data, sim.groups.membership_a, sim.groups.membership_b)
    assert fit.singular
    assert fit.covariance is None and fit.standard_errors is None
    assert all(np.isnan(row[2]) for row in fit.estimates_table())
