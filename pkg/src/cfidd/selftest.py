"""Fast invariant battery behind the ``cfidd selftest`` subcommand.

Each check is a cheap, seeded verification of a structural property the
simulator relies on; the full statistical validation lives in the test
suite."""

from __future__ import annotations

import numpy as np

from . import apsel, chanest, detect, harness, sysmodel
from . import ldpc as ldpc_mod
from ._kernels import backend, boxplus
from .config import SystemConfig

__all__ = ["selftest"]


def _check_pilot_orthogonality(cfg):
    plan = chanest.assign_pilots(cfg.K, cfg.tau_p)
    gram = plan.pilots.conj() @ plan.pilots.T
    return np.allclose(gram, cfg.tau_p * np.eye(cfg.tau_p), atol=1e-9)


def _check_correlation_trace(cfg):
    rng = np.random.default_rng(0)
    beta = rng.uniform(0.1, 5.0, size=(cfg.K, cfg.L))
    omega = sysmodel.spatial_correlation(beta, cfg.N)
    tr = np.einsum("klnn->kl", omega).real / cfg.N
    return np.array_equal(tr, beta)


def _check_estimation_order(cfg):
    rng = np.random.default_rng(1)
    beta = rng.uniform(0.5, 2.0, size=(cfg.K, cfg.L))
    omega = sysmodel.spatial_correlation(beta, cfg.N)
    G = sysmodel.realize_channel(omega, rng)
    plan = chanest.assign_pilots(cfg.K, cfg.tau_p)
    Y = chanest.pilot_observation(G, plan, cfg.eta_k, 0.1, rng)
    est = chanest.mmse_estimate(Y, plan, omega, cfg.eta_k, 0.1)
    gap = omega - est.C
    eig_c = np.linalg.eigvalsh(est.C).min()
    eig_gap = np.linalg.eigvalsh(gap).min()
    floor = -1e-10 * np.einsum("klnn->kl", omega).real.max()
    return eig_c >= floor and eig_gap >= floor


def _check_boxplus(cfg):
    a = np.array([1.7, -2.3, 0.4])
    ok = np.allclose(boxplus(a, np.inf), a)
    ok &= np.allclose(boxplus(a, 0.0), 0.0)
    b = np.array([-0.6, 3.0, -1.1])
    ok &= np.allclose(boxplus(a, b), boxplus(b, a))
    ok &= bool(np.all(np.abs(boxplus(a, b))
                      <= np.minimum(np.abs(a), np.abs(b)) + 1e-12))
    return ok


def _check_decoder_clean(cfg):
    pc = harness.get_code(cfg)
    rng = np.random.default_rng(2)
    for _ in range(20):
        msg = rng.integers(0, 2, pc.n_message_bits, dtype=np.uint8)
        cw = ldpc_mod.encode(pc, msg)
        llr = np.where(cw == 0, 40.0, -40.0)
        _, hard, conv = ldpc_mod.decode_boxplus(pc, llr, cfg.dec_iters)
        if not conv or not np.array_equal(hard, cw):
            return False
    return True


def _check_zero_prior_reduction(cfg):
    rng = np.random.default_rng(3)
    N, K = cfg.N, cfg.K
    g = (rng.normal(size=(N, K)) + 1j * rng.normal(size=(N, K))) / np.sqrt(2)
    C = np.stack([0.05 * np.eye(N) for _ in range(K)]).astype(complex)
    stats = detect.SoftSymbolStats(s_bar=np.zeros(K, complex), var=np.ones(K))
    mask = np.ones(N, dtype=bool)
    for k in range(K):
        w_pic = detect.mmse_pic_filter(g, C, stats, mask, 0.2, 1.0, k)
        w_lin = detect.mmse_filter(g, C, mask, 0.2, k)
        if not np.allclose(w_pic, w_lin, rtol=1e-12, atol=0):
            return False
    return True


def _check_flops(cfg):
    return (detect.flop_count("rmf", 4, 4, 4, 2) == 1152
            and detect.flop_count("mmse", 4, 4, 4, 2) == 2064
            and detect.flop_count("mmse-pic", 4, 4, 4, 2) == 3408)


def _check_theta_moments(cfg):
    rng = np.random.default_rng(4)
    n_draw = 200000
    g = (rng.normal(size=(n_draw, cfg.N))
         + 1j * rng.normal(size=(n_draw, cfg.N))) / np.sqrt(2)
    theta = (np.abs(g) ** 2).sum(axis=1) / cfg.N
    return (abs(theta.mean() - 1.0) < 0.03
            and abs((theta ** 2).mean() - (1 + 1 / cfg.N)) < 0.05)


def _check_trial_determinism(cfg):
    small = SystemConfig(L=2, N=2, K=2, C_leng=32, M=16, trials=1,
                         snr_grid=[4.0], seed=cfg.seed)
    a = harness.run_trial(small, 4.0, 123, detectors=("mmse-pic",))
    b = harness.run_trial(small, 4.0, 123, detectors=("mmse-pic",))
    return all(x.bit_errors == y.bit_errors and x.diagnostics == y.diagnostics
               for x, y in zip(a, b))


def _check_selection_rules(cfg):
    beta = 10.0 ** (np.array([[-60.0, -100.0]]) / 10.0)
    sel = apsel.select_aps(beta, -40.0, mode="scalable")
    if not (sel.served[0, 0] and sel.served[0, 1]):   # boundary is inclusive
        return False
    beta2 = 10.0 ** (np.array([[-60.0, -100.1]]) / 10.0)
    sel2 = apsel.select_aps(beta2, -40.0, mode="scalable")
    return bool(sel2.served[0, 0] and not sel2.served[0, 1])


_CHECKS = (
    ("pilot orthogonality", _check_pilot_orthogonality),
    ("correlation trace normalization", _check_correlation_trace),
    ("estimation covariance order", _check_estimation_order),
    ("pairwise combine identities", _check_boxplus),
    ("decoder on clean codewords", _check_decoder_clean),
    ("zero-prior filter reduction", _check_zero_prior_reduction),
    ("complexity polynomial values", _check_flops),
    ("matched-filter gain moments", _check_theta_moments),
    ("trial determinism", _check_trial_determinism),
    ("selection threshold boundary", _check_selection_rules),
)


def selftest(cfg: SystemConfig = None, verbose: bool = True) -> int:
    """Run every invariant check; returns the number of failures."""
    cfg = cfg or SystemConfig()
    failures = 0
    if verbose:
        print(f"# kernel backend: {backend()}")
    for name, fn in _CHECKS:
        try:
            ok = fn(cfg)
        except Exception as exc:   # a crash is a failure, keep going
            ok = False
            if verbose:
                print(f"FAIL {name}: {exc}")
                failures += 1
                continue
        if verbose:
            print(("PASS" if ok else "FAIL") + f" {name}")
        failures += 0 if ok else 1
    return failures
