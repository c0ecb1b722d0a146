import numpy as np
import pytest

from cfidd import ldpc
from cfidd.errors import ConstructionError


def toy_code_8_4():
    """Distance-4 (8,4) code used as the decoder oracle workbench."""
    A = np.array([[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]],
                 dtype=np.uint8)
    H = np.hstack([A, np.eye(4, dtype=np.uint8)])
    return _pc_from_matrix(H)


def _pc_from_matrix(H):
    rank, piv, red = ldpc._gf2_reduce(H.copy())
    assert rank == H.shape[0]
    pc = ldpc.ParityCheck(
        H=H, seed=-1,
        chk_adj=[list(np.flatnonzero(H[c]).astype(int))
                 for c in range(H.shape[0])],
        var_adj=[list(np.flatnonzero(H[:, v]).astype(int))
                 for v in range(H.shape[1])])
    ldpc._finalize(pc, piv, red)
    return pc


def all_codewords(pc):
    k = pc.n_message_bits
    msgs = ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    return np.array([ldpc.encode(pc, m) for m in msgs])


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def test_small_construction_degrees_and_rank():
    pc = ldpc.build_parity_check(8, 4, seed=11)
    assert np.all(pc.H.sum(axis=0) == 3)
    rank, _, _ = ldpc._gf2_reduce(pc.H.copy())
    assert rank == 4


def test_construction_deterministic():
    a = ldpc.build_parity_check(64, 32, seed=5)
    b = ldpc.build_parity_check(64, 32, seed=5)
    assert np.array_equal(a.H, b.H)
    c = ldpc.build_parity_check(64, 32, seed=6)
    assert not np.array_equal(a.H, c.H)


def test_big_construction_girth():
    pc = ldpc.build_parity_check(256, 128, seed=0)
    assert pc.girth() >= 6
    # independent four-cycle check: no two columns share two checks
    overlap = pc.H.astype(np.int64).T @ pc.H.astype(np.int64)
    np.fill_diagonal(overlap, 0)
    assert overlap.max() <= 1


def test_construction_rejects_bad_shapes():
    with pytest.raises(ConstructionError):
        ldpc.build_parity_check(4, 8, seed=0)
    with pytest.raises(ConstructionError):
        ldpc.build_parity_check(5, 2, seed=0)


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def test_encode_zero_message():
    pc = ldpc.build_parity_check(32, 16, seed=1)
    cw = ldpc.encode(pc, np.zeros(16, dtype=np.uint8))
    assert not cw.any()


def test_encode_zero_syndrome_and_linearity():
    pc = ldpc.build_parity_check(64, 32, seed=2)
    rng = np.random.default_rng(0)
    m1 = rng.integers(0, 2, 32, dtype=np.uint8)
    m2 = rng.integers(0, 2, 32, dtype=np.uint8)
    c1, c2 = ldpc.encode(pc, m1), ldpc.encode(pc, m2)
    assert not ((pc.H @ c1) % 2).any()
    assert not ((pc.H @ c2) % 2).any()
    assert np.array_equal(ldpc.encode(pc, m1 ^ m2), c1 ^ c2)


def test_encode_systematic_positions():
    pc = ldpc.build_parity_check(32, 16, seed=3)
    rng = np.random.default_rng(1)
    msg = rng.integers(0, 2, 16, dtype=np.uint8)
    cw = ldpc.encode(pc, msg)
    assert np.array_equal(cw[pc.msg_cols], msg)


def test_generator_orthogonal_to_checks():
    pc = ldpc.build_parity_check(48, 24, seed=4)
    assert not ((pc.G_sys @ pc.H.T) % 2).any()


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

def test_decode_saturated_consistent_input():
    pc = ldpc.build_parity_check(64, 32, seed=7)
    rng = np.random.default_rng(2)
    msg = rng.integers(0, 2, 32, dtype=np.uint8)
    cw = ldpc.encode(pc, msg)
    llr = np.where(cw == 0, 40.0, -40.0)
    ext, hard, conv = ldpc.decode_boxplus(pc, llr, 50)
    assert conv
    assert np.array_equal(hard, cw)


def test_decode_clean_codewords_error_free():
    pc = ldpc.build_parity_check(256, 128, seed=0)
    rng = np.random.default_rng(3)
    for _ in range(10000):
        msg = rng.integers(0, 2, 128, dtype=np.uint8)
        cw = ldpc.encode(pc, msg)
        llr = np.where(cw == 0, 40.0, -40.0)
        _, hard, conv = ldpc.decode_boxplus(pc, llr, 10)
        assert conv and np.array_equal(hard, cw)


def test_decode_all_zero_input_is_fixed_point():
    pc = ldpc.build_parity_check(32, 16, seed=8)
    ext, hard, conv = ldpc.decode_boxplus(pc, np.zeros(32), 20)
    assert np.allclose(ext.values, 0.0)
    # zero beliefs give the all-zero word, which satisfies every check
    assert conv and not hard.any()


def test_single_flip_corrected_matches_ml():
    pc = toy_code_8_4()
    cws = all_codewords(pc)
    assert sorted(np.unique(cws.sum(axis=1)))[:2] == [0, 4]  # distance 4
    for cw in cws:
        for pos in range(8):
            llr = np.where(cw == 0, 8.0, -8.0)
            llr[pos] = -llr[pos]
            weights = np.exp(-(cws * llr).sum(axis=1))
            ml = cws[np.argmax(weights)]
            _, hard, _ = ldpc.decode_boxplus(pc, llr, 50)
            assert np.array_equal(ml, cw)
            assert np.array_equal(hard, ml)


def test_extrinsic_excludes_input_and_prior():
    pc = ldpc.build_parity_check(32, 16, seed=9)
    rng = np.random.default_rng(4)
    vals = rng.uniform(-4, 4, 32)
    prior = rng.uniform(-2, 2, 32)
    frame = ldpc.LlrFrame.make(vals, ue=3, ap=1)
    ext_a, hard_a, _ = ldpc.decode_boxplus(pc, frame, 5,
                                           prior=ldpc.LlrFrame.make(prior))
    ext_b, hard_b, _ = ldpc.decode_boxplus(pc, vals + prior, 5)
    assert np.allclose(ext_a.values, ext_b.values)
    assert np.array_equal(hard_a, hard_b)
    assert ext_a.ue == 3 and ext_a.ap == 1


def test_llr_frame_summary():
    f = ldpc.LlrFrame.make([1.0, -3.0, 50.0], ue=1, ap=None)
    assert f.values.max() == 40.0       # clamped
    assert f.mu_abs == pytest.approx(np.mean([1.0, 3.0, 40.0]))


# ---------------------------------------------------------------------------
# alist interchange
# ---------------------------------------------------------------------------

def test_alist_roundtrip():
    pc = ldpc.build_parity_check(64, 32, seed=10)
    back = ldpc.from_alist(ldpc.to_alist(pc))
    assert np.array_equal(pc.H, back.H)
    rng = np.random.default_rng(5)
    msg = rng.integers(0, 2, 32, dtype=np.uint8)
    assert np.array_equal(ldpc.encode(pc, msg), ldpc.encode(back, msg))


def test_alist_tolerates_zero_padding():
    pc = ldpc.build_parity_check(16, 8, seed=12)
    text = ldpc.to_alist(pc)
    lines = text.strip().splitlines()
    maxd = max(len(line.split()) for line in lines[4:])
    padded = lines[:4] + [" ".join(line.split() + ["0"] * (maxd - len(line.split())))
                          for line in lines[4:]]
    back = ldpc.from_alist("\n".join(padded))
    assert np.array_equal(pc.H, back.H)
