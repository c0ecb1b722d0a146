import numpy as np
import pytest

from cfidd import chanest, sysmodel


def test_assignment_unique_when_enough_pilots():
    plan = chanest.assign_pilots(4, 10)
    assert np.array_equal(plan.t, [0, 1, 2, 3])
    for k in range(4):
        assert list(plan.co_pilot_sets[k]) == [k]


def test_assignment_round_robin_sharing():
    plan = chanest.assign_pilots(12, 10)
    assert plan.t[0] == plan.t[10] == 0
    assert list(plan.co_pilot_sets[0]) == [0, 10]
    assert list(plan.co_pilot_sets[10]) == [0, 10]


def test_pilot_gram_orthogonality():
    plan = chanest.assign_pilots(4, 10)
    gram = plan.pilots.conj() @ plan.pilots.T
    assert np.allclose(gram, 10.0 * np.eye(10), atol=1e-9)
    assert np.allclose(np.linalg.norm(plan.pilots, axis=1) ** 2, 10.0)


def test_observation_noiseless_single_ue_rank_one():
    rng = np.random.default_rng(0)
    g = (rng.normal(size=(1, 4, 1)) + 1j * rng.normal(size=(1, 4, 1)))
    plan = chanest.assign_pilots(1, 5)
    Y = chanest.pilot_observation(g, plan, 0.5, 0.0, rng)
    assert np.linalg.matrix_rank(Y[0]) == 1
    assert np.allclose(Y[0], np.sqrt(0.5) * g[0] * plan.pilots[0][None, :])


def test_observation_noise_variance():
    rng = np.random.default_rng(1)
    G = np.zeros((100, 4, 1), dtype=complex)
    plan = chanest.assign_pilots(1, 10)
    sigma2 = 0.37
    Y = chanest.pilot_observation(G, plan, 1.0, sigma2, rng)
    v = np.mean(np.abs(Y) ** 2)
    assert v == pytest.approx(sigma2, rel=0.02)


def test_despreading_recovers_channels():
    # two UEs on orthogonal pilots, no noise
    rng = np.random.default_rng(2)
    G = (rng.normal(size=(3, 4, 2)) + 1j * rng.normal(size=(3, 4, 2)))
    plan = chanest.assign_pilots(2, 6)
    eta = np.array([0.5, 2.0])
    Y = chanest.pilot_observation(G, plan, eta, 0.0, rng)
    for k in range(2):
        rec = np.einsum("lnt,t->ln", Y, np.conj(plan.pilots[plan.t[k]])) / 6.0
        assert np.allclose(rec, np.sqrt(eta[k]) * G[:, :, k], atol=1e-10)


def test_estimate_noiseless_orthogonal_is_perfect():
    rng = np.random.default_rng(3)
    beta = rng.uniform(0.5, 2.0, size=(2, 3))
    omega = sysmodel.spatial_correlation(beta, 4)
    G = sysmodel.realize_channel(omega, rng)
    plan = chanest.assign_pilots(2, 6)
    sigma2 = 1e-12
    Y = chanest.pilot_observation(G, plan, 1.0, sigma2, rng)
    est = chanest.mmse_estimate(Y, plan, omega, 1.0, sigma2)
    for k in range(2):
        for l in range(3):
            assert np.allclose(est.g_hat[k, l], G[l, :, k], atol=1e-4)
            assert np.linalg.norm(est.C[k, l]) < 1e-10


def test_estimate_dead_link():
    omega = np.zeros((1, 1, 3, 3))
    omega[0, 0] = np.zeros((3, 3))
    Y = np.ones((1, 3, 4), dtype=complex)
    plan = chanest.assign_pilots(1, 4)
    est = chanest.mmse_estimate(Y, plan, omega, 1.0, 0.5)
    assert not est.g_hat.any()
    assert not est.C.any()


def test_estimate_scalar_closed_form_and_empirical_covariance():
    # identity correlation, one UE per pilot: everything collapses to scalars
    beta, eta, tau_p, sigma2, N = 1.7, 0.3, 4, 0.6, 2
    n_rel = 10 ** 5
    rng = np.random.default_rng(4)
    omega = sysmodel.spatial_correlation(np.full((1, n_rel), beta), N)
    G = sysmodel.realize_channel(omega, rng)         # (n_rel, N, 1)
    plan = chanest.assign_pilots(1, tau_p)
    Y = chanest.pilot_observation(G, plan, eta, sigma2, rng)
    est = chanest.mmse_estimate(Y, plan, omega, eta, sigma2)

    gain = eta * tau_p * beta / (eta * tau_p * beta + sigma2)
    c_expect = beta * (1.0 - gain)
    assert np.allclose(est.C[0], c_expect * np.eye(N), atol=1e-12)

    err = est.g_hat[0] - G[:, :, 0]                  # (n_rel, N)
    emp = (err[:, :, None] * err[:, None, :].conj()).mean(axis=0)
    ref = c_expect * np.eye(N)
    assert np.linalg.norm(emp - ref) / np.linalg.norm(ref) < 0.02


def test_estimate_covariance_ordering():
    rng = np.random.default_rng(5)
    beta = rng.uniform(0.2, 3.0, size=(4, 3))
    omega = sysmodel.spatial_correlation(beta, 3, r=0.3)
    G = sysmodel.realize_channel(omega, rng)
    plan = chanest.assign_pilots(4, 2)               # forced pilot sharing
    Y = chanest.pilot_observation(G, plan, 0.8, 0.4, rng)
    est = chanest.mmse_estimate(Y, plan, omega, 0.8, 0.4)
    for k in range(4):
        for l in range(3):
            tr = np.trace(omega[k, l]).real
            assert np.linalg.eigvalsh(est.C[k, l]).min() >= -1e-10 * tr
            gap = omega[k, l] - est.C[k, l]
            assert np.linalg.eigvalsh(gap).min() >= -1e-10 * tr
            herm = est.C[k, l] - est.C[k, l].conj().T
            assert np.abs(herm).max() < 1e-12


def test_pilot_contamination_parallel_estimates():
    # two UEs sharing a pilot with identical correlation: at low noise the
    # despread observation is rank one, so their estimates align
    rng = np.random.default_rng(6)
    beta = np.full((2, 1), 1.0)
    omega = sysmodel.spatial_correlation(beta, 4)
    G = sysmodel.realize_channel(omega, rng)
    plan = chanest.assign_pilots(2, 1)               # both UEs on pilot 0
    sigma2 = 1e-9
    Y = chanest.pilot_observation(G, plan, 1.0, sigma2, rng)
    est = chanest.mmse_estimate(Y, plan, omega, 1.0, sigma2)
    a, b = est.g_hat[0, 0], est.g_hat[1, 0]
    corr = np.abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    assert corr == pytest.approx(1.0, abs=1e-9)
