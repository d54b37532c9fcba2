import numpy as np
import pytest
from scipy.stats import norm

from conftest import interior_point, random_dataset, random_point
from netform.likelihood import (
    DegenerateProbabilityError,
    Layout,
    LikelihoodEvaluator,
    grouped_hessian,
    grouped_score,
    hessian,
    log_likelihood,
    profile_rho,
    score,
)
from netform.model import CommonParams, Dataset, DirectedNetwork, DyadCovariates, HeterogeneityVector, oneway_prob
from netform.simulation import DgpConfig, generate_network


def fd_rel_err(got, ref, floor):
    # relative error with a floor on the denominator for near-zero entries
    return np.max(np.abs(got - ref) / np.maximum(np.abs(ref), floor))


def normalized(ev, vec):
    return 2.0 * ev.evaluate(vec, 0).loglik_sum / ev.dyads.N


def test_two_agent_example():
    data = Dataset(DirectedNetwork(np.zeros((2, 2), int)), DyadCovariates(np.zeros((2, 2, 1))))
    theta = CommonParams([0.0], 0.6, 0.0)
    gam = HeterogeneityVector(np.zeros(2), np.zeros(2))
    p = 0.5 - 0.5 * norm.cdf(0.6)
    assert p == pytest.approx(0.137127, abs=1e-6)
    ll = log_likelihood(data, theta, gam)
    assert ll.loglik_sum == pytest.approx(np.log(norm.cdf(0.6)), abs=1e-12)
    # the quoted six-digit value is ln(0.725747) rounded; it agrees to rounding only
    assert ll.loglik_sum == pytest.approx(-0.320552, abs=5e-6)
    assert ll.loglik_normalized == pytest.approx(ll.loglik_sum, abs=1e-15)  # 2/N = 1 for n = 2


def test_equivalent_forms(rng, small_data):
    theta, gam = random_point(rng, small_data.n, small_data.d_z)
    ll = log_likelihood(small_data, theta, gam).loglik_sum
    y = small_data.network.oneway()
    z = small_data.covariates.z
    n = small_data.n
    pi = z @ theta.beta + gam.a[:, None] + gam.b[None, :]
    # ordered-pair form: sum over i != j of y_ij ln P_ij + (1/2)(1 - y_ij - y_ji) ln(1 - P_ij - P_ji)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pij = oneway_prob(pi[i, j], pi[j, i], theta.alpha, theta.rho)
            pji = oneway_prob(pi[j, i], pi[i, j], theta.alpha, theta.rho)
            total += y[i, j] * np.log(pij) + 0.5 * (1 - y[i, j] - y[j, i]) * np.log(1 - pij - pji)
    assert ll == pytest.approx(total, abs=1e-12 * abs(total))


def test_multinomial_product(rng):
    data = random_dataset(rng, n=5)
    theta, gam = random_point(rng, 5, 2)
    y = data.network.oneway()
    pi = data.covariates.z @ theta.beta + gam.a[:, None] + gam.b[None, :]
    prod = 1.0
    for i in range(5):
        for j in range(i + 1, 5):
            pij = oneway_prob(pi[i, j], pi[j, i], theta.alpha, theta.rho)
            pji = oneway_prob(pi[j, i], pi[i, j], theta.alpha, theta.rho)
            prod *= pij if y[i, j] else pji if y[j, i] else 1 - pij - pji
    assert np.exp(log_likelihood(data, theta, gam).loglik_sum) == pytest.approx(prod, rel=1e-12)


def test_score_layout(rng, small_data):
    theta, gam = random_point(rng, small_data.n, small_data.d_z)
    s = score(small_data, theta, gam)
    assert s.d_theta.size == small_data.d_z + 2
    assert s.d_gamma.size == 2 * small_data.n - 1


@pytest.mark.parametrize("seed", range(5))
def test_score_and_hessian_against_differences(seed):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng)
    theta, gam = interior_point(rng, data)
    layout = Layout.fixed_effects(data.n, data.d_z)
    # unclipped: the analytic derivatives are those of the exact likelihood
    ev = LikelihoodEvaluator(data, layout, clip=False)
    vec = layout.pack_gamma(theta, gam)
    out = ev.evaluate(vec, 2)
    eye = np.eye(vec.size)
    h = 1e-6
    fd = np.array([(normalized(ev, vec + h * e) - normalized(ev, vec - h * e)) / (2 * h) for e in eye])
    assert fd_rel_err(out.grad, fd, 1e-4 * np.max(np.abs(fd))) < 1e-6
    h = 1e-5
    fdh = np.array([(ev.evaluate(vec + h * e, 1).grad - ev.evaluate(vec - h * e, 1).grad) / (2 * h) for e in eye])
    assert fd_rel_err(out.hess, fdh, 1e-4 * np.max(np.abs(fdh))) < 1e-5
    assert np.max(np.abs(out.hess - out.hess.T)) <= 1e-10


def test_public_wrappers_agree(rng, small_data):
    theta, gam = random_point(rng, small_data.n, small_data.d_z)
    H = hessian(small_data, theta, gam)
    assert H.shape == (small_data.d_z + 2 * small_data.n + 1,) * 2
    gamma_block = H[small_data.d_z + 2 :, small_data.d_z + 2 :]
    assert np.all(np.diag(gamma_block) < 0)


def test_grouped_score_is_aggregated_fixed_effect_score(rng, small_data):
    n = small_data.n
    ma = np.arange(n) % 3 + 1
    mb = (np.arange(n) * 7) % 2 + 1
    theta = CommonParams([0.2, -0.3], 0.7, 0.4)
    a_vals = np.array([0.0, 0.5, -0.4])
    b_vals = np.array([-0.2, 0.3])
    gs = grouped_score(small_data, theta, a_vals, b_vals, ma, mb)
    # shift so agent 1's sender effect is zero; the likelihood is invariant to it
    gam = HeterogeneityVector.normalized(a_vals[ma - 1], b_vals[mb - 1])
    fs = score(small_data, theta, gam)
    dA = np.concatenate([[0.0], fs.d_gamma[: n - 1]])
    dB = fs.d_gamma[n - 1 :]
    np.testing.assert_allclose(gs.d_theta, fs.d_theta, atol=1e-13)
    # A_1 has no free column, so its score is recovered from the location invariance sum(dA) = sum(dB)
    dA[0] = dB.sum() - dA[1:].sum()
    expected_a = [dA[ma == k].sum() for k in (2, 3)]
    expected_b = [dB[mb == k].sum() for k in (1, 2)]
    np.testing.assert_allclose(gs.d_gamma, expected_a + expected_b, atol=1e-12)
    Hg = grouped_hessian(small_data, theta, a_vals, b_vals, ma, mb)
    assert np.allclose(Hg, Hg.T, atol=1e-12)


def test_degenerate_probability_names_dyad():
    g = np.zeros((3, 3), int)
    g[0, 1] = 1
    data = Dataset(DirectedNetwork(g), DyadCovariates(np.zeros((3, 3, 1))))
    theta = CommonParams([0.0], 0.5, 0.0)
    gam = HeterogeneityVector(np.array([0.0, 0.0, 0.0]), np.array([0.0, -40.0, 0.0]))
    with pytest.raises(DegenerateProbabilityError) as info:
        log_likelihood(data, theta, gam)
    assert info.value.dyad == (1, 2)
    assert np.isfinite(log_likelihood(data, theta, gam, strict=False).loglik_sum)


def test_score_mean_zero_at_truth():
    cfg = DgpConfig(n=30, r=1.0, seed=11)
    rows = []
    for rep in range(200):
        sim = generate_network(cfg, rep)
        rows.append(score(sim.dataset, sim.theta, sim.groups.heterogeneity()).d_theta)
    rows = np.array(rows)
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])
    assert np.all(np.abs(mean) <= 3 * se)


def test_profile_rejects_bad_grid(small_data):
    with pytest.raises(ValueError):
        profile_rho(small_data, [0.1, 0.2])
    with pytest.raises(ValueError):
        profile_rho(small_data, [-1.0, 0.0, 0.5])
