import numpy as np
import pytest

from cfidd import sysmodel
from cfidd.config import SystemConfig


def test_collocated_distance_is_height():
    cfg = SystemConfig(L=1, K=1)
    rng = np.random.default_rng(0)
    pos = sysmodel.drop_geometry(cfg, rng)
    pos.ap[0, :2] = [500.0, 500.0]
    pos.ue[0, :2] = [500.0, 500.0]
    assert pos.distances[0, 0] == pytest.approx(10.0)


def test_geometry_deterministic():
    cfg = SystemConfig()
    a = sysmodel.drop_geometry(cfg, np.random.default_rng(42))
    b = sysmodel.drop_geometry(cfg, np.random.default_rng(42))
    assert np.array_equal(a.ap, b.ap) and np.array_equal(a.ue, b.ue)


def test_geometry_uniform_mean():
    cfg = SystemConfig(K=1, L=1)
    rng = np.random.default_rng(1)
    xs = [sysmodel.drop_geometry(cfg, rng).ue[0, 0] for _ in range(10 ** 4)]
    assert np.mean(xs) == pytest.approx(500.0, abs=10.0)


def test_pathloss_reference_points():
    assert sysmodel.pathloss_db(np.array([1.0]))[0] == pytest.approx(-30.5)
    assert sysmodel.pathloss_db(np.array([100.0]))[0] == pytest.approx(-103.9)


def test_shadowing_spread():
    cfg = SystemConfig(K=1, L=1)
    pos = sysmodel.Positions(ap=np.array([[0.0, 0.0, 10.0]]),
                             ue=np.array([[30.0, 0.0, 0.0]]))
    rng = np.random.default_rng(2)
    vals = np.array([sysmodel.large_scale_fading(pos, rng)[0, 0]
                     for _ in range(10 ** 5)])
    db = 10.0 * np.log10(vals)
    assert db.std() == pytest.approx(4.0, abs=0.1)
    assert db.mean() == pytest.approx(sysmodel.pathloss_db(pos.distances)[0, 0],
                                      abs=0.1)


def test_correlation_default_identity():
    omega = sysmodel.spatial_correlation(np.array([[2.0]]), n_ant=2)
    assert np.array_equal(omega[0, 0], 2.0 * np.eye(2))


def test_correlation_trace_exact():
    rng = np.random.default_rng(3)
    beta = rng.uniform(1e-12, 5.0, size=(6, 7))
    # every diagonal entry is beta itself; the summed trace over a
    # power-of-two count divides back exactly, otherwise to 1 ulp
    for r in (0.0, 0.4):
        omega = sysmodel.spatial_correlation(beta, n_ant=4, r=r)
        assert np.array_equal(np.einsum("klnn->kl", omega).real / 4, beta)
        diag = np.einsum("klnn->kln", omega).real
        assert np.array_equal(diag, np.broadcast_to(beta[..., None],
                                                    diag.shape))
    for n_ant in (3, 8):
        omega = sysmodel.spatial_correlation(beta, n_ant=n_ant, r=0.4)
        tr = np.einsum("klnn->kl", omega).real / n_ant
        assert np.allclose(tr, beta, rtol=1e-15, atol=0)


def test_correlation_exponential_eigenvalues():
    omega = sysmodel.spatial_correlation(np.array([[1.0]]), n_ant=2, r=0.5)
    assert np.allclose(omega[0, 0], [[1.0, 0.5], [0.5, 1.0]])
    assert np.allclose(np.linalg.eigvalsh(omega[0, 0]), [0.5, 1.5])


def test_correlation_rejects_bad_coefficient():
    for r in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            sysmodel.spatial_correlation(np.ones((1, 1)), 2, r=r)


def test_realize_zero_covariance():
    omega = np.zeros((1, 1, 3, 3))
    g = sysmodel.realize_channel(omega, np.random.default_rng(4))
    assert not g.any()


def test_realize_identity_covariance_statistics():
    n_draw = 10 ** 6
    omega = np.broadcast_to(np.eye(2), (n_draw, 1, 2, 2)).copy()
    g = sysmodel.realize_channel(omega, np.random.default_rng(5))  # (1,2,B)
    g = g[0].T
    emp = (g[:, :, None] * g[:, None, :].conj()).mean(axis=0)
    assert np.linalg.norm(emp - np.eye(2)) / np.linalg.norm(np.eye(2)) < 0.01


def test_realize_diagonal_variances():
    n_draw = 10 ** 6
    omega = np.broadcast_to(np.diag([4.0, 1.0]), (n_draw, 1, 2, 2)).copy()
    g = sysmodel.realize_channel(omega, np.random.default_rng(6))[0].T
    v = (np.abs(g) ** 2).mean(axis=0)
    assert v[0] == pytest.approx(4.0, rel=0.02)
    assert v[1] == pytest.approx(1.0, rel=0.02)


def test_realize_correlated_covariance():
    n_draw = 2 * 10 ** 5
    base = sysmodel.spatial_correlation(np.array([[1.5]]), 3, r=0.6)[0, 0]
    omega = np.broadcast_to(base, (n_draw, 1, 3, 3)).copy()
    g = sysmodel.realize_channel(omega, np.random.default_rng(7))[0].T
    emp = (g[:, :, None] * g[:, None, :].conj()).mean(axis=0)
    assert np.linalg.norm(emp - base) / np.linalg.norm(base) < 0.02


def test_realize_rejects_indefinite():
    omega = np.array([[[[1.0, 0.0], [0.0, -0.5]]]])
    with pytest.raises(ValueError):
        sysmodel.realize_channel(omega, np.random.default_rng(8))
