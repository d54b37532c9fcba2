import numpy as np
import pytest

from netform.model import DyadOutcome, oneway_prob, solve_dyad
from netform.simulation import (
    DgpConfig,
    draw_errors,
    generate_network,
    rep_rng,
    run_monte_carlo,
)


def test_config_validation():
    with pytest.raises(ValueError):
        DgpConfig(alpha0=0.0)
    with pytest.raises(ValueError):
        DgpConfig(selection_prob=1.5)
    with pytest.raises(ValueError):
        DgpConfig(r=0.0)
    assert DgpConfig(n=54).unbalanced is False
    assert DgpConfig(n=55).unbalanced is True


def test_group_values():
    a, b = DgpConfig(r=0.7).group_values()
    np.testing.assert_allclose(a, [0.0, 0.7, 1.4])
    np.testing.assert_allclose(b, [-1.1, -0.4, 0.3])


def test_design_structure():
    cfg = DgpConfig(n=54, r=1.0, seed=4)
    sim = generate_network(cfg, 3)
    g = sim.dataset.network.adjacency
    assert np.all(np.diag(g) == 0)
    z = sim.dataset.covariates.z
    assert np.allclose(z[:, :, 0], z[:, :, 0].T)  # |X_i - X_j| is symmetric
    assert np.all(z[:, :, 0] <= 2.0) and np.all(z[:, :, 0] >= 0.0)
    assert sim.groups.membership_a[0] == 1
    for m in (sim.groups.membership_a, sim.groups.membership_b):
        assert np.bincount(m)[1:].tolist() == [18, 18, 18]
    codes = sim.outcomes[np.triu_indices(54, 1)]
    assert set(np.unique(codes)) <= set(int(o) for o in DyadOutcome)


def test_uneven_sizes_within_one():
    sim = generate_network(DgpConfig(n=20, seed=1))
    sizes = np.bincount(sim.groups.membership_a)[1:]
    assert sizes.max() - sizes.min() <= 1


def test_reproducible_streams():
    cfg = DgpConfig(n=30, seed=9)
    a = generate_network(cfg, 2).dataset.network.adjacency
    b = generate_network(cfg, 2).dataset.network.adjacency
    c = generate_network(cfg, 3).dataset.network.adjacency
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert rep_rng(1, 2).random() == rep_rng(1, 2).random()


def test_independent_errors_uncorrelated():
    e1, e2 = draw_errors(rep_rng(0, 0), 100_000, 0.0)
    r = np.corrcoef(e1, e2)[0, 1]
    assert abs(r) < 3 / np.sqrt(100_000)


def test_error_correlation():
    e1, e2 = draw_errors(rep_rng(0, 1), 100_000, 0.6)
    assert np.corrcoef(e1, e2)[0, 1] == pytest.approx(0.6, abs=3 * (1 - 0.36) / np.sqrt(100_000))


def test_oneway_frequency_matches_probability():
    m = 100_000
    e1, e2 = draw_errors(rep_rng(5, 0), m, 0.6)
    pi_ij, pi_ji, alpha = -0.4, 0.3, 0.6
    freq = np.mean(solve_dyad(pi_ij, pi_ji, alpha, e1, e2) == DyadOutcome.ONEWAY_IJ)
    p = oneway_prob(pi_ij, pi_ji, alpha, 0.6)
    assert abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / m)


def test_selection_rule_leaves_oneway_links_unchanged():
    nets = [generate_network(DgpConfig(n=40, seed=2, selection_prob=q), 0).dataset.network for q in (0.0, 0.5, 1.0)]
    assert not np.array_equal(nets[0].adjacency, nets[2].adjacency)
    assert np.array_equal(nets[0].oneway(), nets[1].oneway())
    assert np.array_equal(nets[0].oneway(), nets[2].oneway())


def test_single_rep_summary():
    s = run_monte_carlo(DgpConfig(n=24, seed=1), 1, ["Step1", "Oracle"])
    for e in s.estimators:
        if s.failures[e]:
            continue
        for p, b in s.bias[e].items():
            assert s.rmse[e][p] == pytest.approx(abs(b), abs=1e-15)


def test_summary_independent_of_workers():
    cfg = DgpConfig(n=24, seed=5)
    one = run_monte_carlo(cfg, 3, ["Step1", "BS2"], n_jobs=1)
    two = run_monte_carlo(cfg, 3, ["Step1", "BS2"], n_jobs=2)
    assert one == two
    assert all(one.rmse[e][p] >= abs(one.bias[e][p]) for e in one.estimators for p in one.bias[e])


def test_unknown_estimator():
    with pytest.raises(ValueError):
        run_monte_carlo(DgpConfig(n=24), 1, ["BS7"])
    with pytest.raises(ValueError):
        run_monte_carlo(DgpConfig(n=24), 0, ["BS2"])
