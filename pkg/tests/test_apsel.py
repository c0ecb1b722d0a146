import numpy as np
import pytest

from cfidd import apsel


def db(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def test_full_mode_serves_everything():
    rng = np.random.default_rng(0)
    beta = rng.uniform(1e-12, 1e-8, size=(5, 7))
    sel = apsel.select_aps(beta, -40.0, mode="full")
    assert sel.served.all()
    assert np.array_equal(sel.as_matrix(), np.ones((5, 7), dtype=np.uint8))
    assert np.array_equal(sel.selection_matrix(2, 3, 4), np.eye(4))


def test_threshold_boundary_inclusive():
    sel = apsel.select_aps(db([[-60.0, -100.0]]), -40.0, mode="scalable")
    assert sel.masters[0] == 0
    assert sel.served[0].tolist() == [True, True]

    sel = apsel.select_aps(db([[-60.0, -100.1]]), -40.0, mode="scalable")
    assert sel.served[0].tolist() == [True, False]
    assert np.array_equal(sel.selection_matrix(0, 1, 3), np.zeros((3, 3)))


def test_master_tie_breaks_to_lowest_index():
    beta = db([[-70.0, -70.0, -80.0]])
    sel = apsel.select_aps(beta, -5.0, mode="scalable")
    assert sel.masters[0] == 0
    assert list(sel.M_k[0]) == [0, 1]


def test_master_always_served():
    rng = np.random.default_rng(1)
    beta = rng.uniform(1e-14, 1e-6, size=(8, 6))
    sel = apsel.select_aps(beta, -0.0, mode="scalable")
    for k in range(8):
        assert sel.served[k, sel.masters[k]]
        assert len(sel.M_k[k]) >= 1
        assert sel.M_k[k][0] == sel.masters[k]


def test_scale_invariance():
    rng = np.random.default_rng(2)
    beta = rng.uniform(1e-14, 1e-6, size=(6, 5))
    a = apsel.select_aps(beta, -20.0, mode="scalable")
    b = apsel.select_aps(beta * 3.7e9, -20.0, mode="scalable")
    assert np.array_equal(a.served, b.served)
    assert np.array_equal(a.masters, b.masters)


def test_huge_threshold_equals_full_mode():
    rng = np.random.default_rng(3)
    beta = rng.uniform(1e-14, 1e-6, size=(4, 4))
    sel = apsel.select_aps(beta, -10000.0, mode="scalable")
    assert sel.served.all()


def test_served_sets_consistent():
    rng = np.random.default_rng(4)
    beta = rng.uniform(1e-14, 1e-6, size=(5, 4))
    sel = apsel.select_aps(beta, -15.0, mode="scalable")
    for l in range(4):
        for k in range(5):
            assert (k in sel.D_l[l]) == sel.served[k, l]
            trace = np.trace(sel.selection_matrix(k, l, 2))
            assert (trace >= 1) == sel.served[k, l]


def test_rejects_positive_threshold_and_bad_mode():
    beta = db([[-60.0, -70.0]])
    with pytest.raises(ValueError):
        apsel.select_aps(beta, 3.0, mode="scalable")
    with pytest.raises(ValueError):
        apsel.select_aps(beta, -3.0, mode="clustered")
