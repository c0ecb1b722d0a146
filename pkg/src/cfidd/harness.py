"""Monte Carlo engine: per-trial simulation chains, SNR sweeps, and result
aggregation.

One trial redraws everything (geometry, shadowing, small-scale fading,
messages, noise) from named substreams of the trial seed, runs the local
detector/decoder exchange at every AP for each requested detector, forwards
the per-AP extrinsic LLR frames to the CPU after every outer round, applies
the three refinement strategies, and counts message-bit errors per
(detector, strategy, round) cell.

Detection runs in receiver-normalized units: channels are scaled by the
network-average received symbol energy per antenna per UE, which makes the
noise power exactly the inverse target SNR and keeps the matched filter's
unit-power output model meaningful.  The scaling is common to signal and
noise, so it changes no ratio the receivers see.
"""

from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import apsel, chanest, detect, refine, sysmodel
from . import ldpc as ldpc_mod
from .config import SystemConfig
from .errors import NumericalError

__all__ = [
    "DETECTORS",
    "TrialResult",
    "SnrPoint",
    "compute_noise_power",
    "run_trial",
    "sweep",
    "write_csv",
    "CSV_COLUMNS",
]

DETECTORS = ("rmf", "mmse", "mmse-pic")

CSV_COLUMNS = ("snr_db", "mode", "detector", "strategy", "idd_iter",
               "bit_errors", "bits_total", "ber")

# named substreams of a trial seed
_S_GEOMETRY, _S_SHADOW, _S_CHANNEL, _S_PILOT, _S_DATA, _S_MSG = range(6)


@dataclass
class TrialResult:
    snr_db: float
    mode: str
    detector: str
    strategy: str
    idd_iter: int
    bit_errors: float    # fractional for the AP-averaged standard strategy
    bits_total: int
    diagnostics: dict = field(default_factory=dict)


@dataclass
class SnrPoint:
    snr_db: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise NumericalError("noise power must be positive")


def compute_noise_power(G, rho, target_snr_db: float) -> float:
    """Noise power that puts the AP-averaged received SNR on target.

    The per-AP SNR is tr(G_l diag(rho) G_l^H) / (sigma2 N K); the returned
    sigma2 makes the average over APs equal the target exactly for this
    realization.
    """
    G = np.asarray(G)
    L, N, K = G.shape
    rho_vec = np.broadcast_to(rho, (K,))
    num = np.einsum("lnk,k->l", np.abs(G) ** 2, rho_vec)
    mean_num = float(num.mean())
    if mean_num <= 0.0:
        raise NumericalError("degenerate scenario: zero channel energy")
    return mean_num / (N * K * 10.0 ** (target_snr_db / 10.0))


@functools.lru_cache(maxsize=8)
def _cached_code(c_leng: int, m: int, seed: int) -> ldpc_mod.ParityCheck:
    return ldpc_mod.build_parity_check(c_leng, m, seed)


def get_code(config: SystemConfig) -> ldpc_mod.ParityCheck:
    return _cached_code(config.C_leng, config.M, config.seed)


def _substream(trial_seed, stream: int) -> np.random.Generator:
    if isinstance(trial_seed, np.random.SeedSequence):
        base = trial_seed
    else:
        base = np.random.SeedSequence(trial_seed)
    return np.random.default_rng(
        np.random.SeedSequence(base.entropy,
                               spawn_key=base.spawn_key + (stream,)))


def run_trial(config: SystemConfig, snr_db: float, trial_seed,
              mode: str = "full", detectors=DETECTORS,
              perfect_csi: bool = False) -> list:
    """Simulate one coherence block; returns TrialResults for every
    (detector, strategy, outer round) cell.

    Deterministic in (config, snr_db, trial_seed).  The underlying noise
    draws depend only on the trial seed, so runs at different SNRs share
    randomness (paired comparisons across SNR are low-variance).
    """
    cfg = config
    const = detect.Constellation.qpsk()
    pc = get_code(cfg)

    pos = sysmodel.drop_geometry(cfg, _substream(trial_seed, _S_GEOMETRY))
    beta = sysmodel.large_scale_fading(pos, _substream(trial_seed, _S_SHADOW))
    omega = sysmodel.spatial_correlation(beta, cfg.N)
    G = sysmodel.realize_channel(omega, _substream(trial_seed, _S_CHANNEL))
    selmap = apsel.select_aps(beta, cfg.beta_th, mode)

    sigma2_phys = compute_noise_power(G, cfg.rho, snr_db)
    snr_lin = 10.0 ** (snr_db / 10.0)
    scale2 = sigma2_phys * snr_lin      # network-average symbol energy/antenna
    Gn = G / np.sqrt(scale2)
    sigma2 = 1.0 / snr_lin

    if perfect_csi:
        g_hat = np.ascontiguousarray(Gn.transpose(2, 0, 1))   # (K, L, N)
        C = np.zeros((cfg.K, cfg.L, cfg.N, cfg.N), dtype=np.complex128)
    else:
        plan = chanest.assign_pilots(cfg.K, cfg.tau_p)
        omega_n = omega / scale2
        Y_pilot = chanest.pilot_observation(
            Gn, plan, cfg.eta_k, sigma2, _substream(trial_seed, _S_PILOT))
        est = chanest.mmse_estimate(Y_pilot, plan, omega_n, cfg.eta_k, sigma2)
        g_hat, C = est.g_hat, est.C

    k_info = cfg.C_leng - cfg.M
    rng_msg = _substream(trial_seed, _S_MSG)
    msgs = rng_msg.integers(0, 2, size=(cfg.K, k_info), dtype=np.uint8)
    cws = np.stack([ldpc_mod.encode(pc, m) for m in msgs])
    syms = np.stack([const.map_bits(c) for c in cws])        # (K, n_sym)

    n_sym = cfg.C_leng // cfg.M_c
    rng_data = _substream(trial_seed, _S_DATA)
    noise = (rng_data.normal(size=(cfg.L, cfg.N, n_sym))
             + 1j * rng_data.normal(size=(cfg.L, cfg.N, n_sym))) \
        * np.sqrt(sigma2 / 2.0)
    Y = np.einsum("lnk,ks->lns", Gn, syms) + noise

    results = []
    for det_kind in detectors:
        if det_kind not in DETECTORS:
            raise ValueError(f"unknown detector: {det_kind}")
        results.extend(_run_idd(cfg, det_kind, Y, g_hat, C, selmap, sigma2,
                                msgs, pc, const, mode, snr_db))
    return results


def describe_selection(config: SystemConfig, trial_seed,
                       mode: str = "full") -> apsel.SelectionMap:
    """The serving map a trial with this seed sees (for diagnostics dumps);
    reuses the trial's geometry and shadowing substreams."""
    pos = sysmodel.drop_geometry(config, _substream(trial_seed, _S_GEOMETRY))
    beta = sysmodel.large_scale_fading(pos, _substream(trial_seed, _S_SHADOW))
    return apsel.select_aps(beta, config.beta_th, mode)


def _run_idd(cfg, det_kind, Y, g_hat, C, selmap, sigma2, msgs, pc, const,
             mode, snr_db):
    """Local detector/decoder exchange at every AP plus CPU refinement."""
    K, L, N = cfg.K, cfg.L, cfg.N
    n_sym = cfg.C_leng // cfg.M_c
    es = const.es
    msg_cols = pc.msg_cols
    k_info = msgs.shape[1]
    full_mask = np.ones(N, dtype=bool)
    zero_stats = detect.SoftSymbolStats(
        s_bar=np.zeros(K, dtype=np.complex128), var=np.full(K, es))

    # per-AP views
    g_ap = [np.ascontiguousarray(g_hat[:, l, :].T) for l in range(L)]  # (N,K)
    C_ap = [C[:, l] for l in range(L)]
    y_ap = [np.ascontiguousarray(Y[l].T) for l in range(L)]            # (ns,N)

    # round-independent detector state; the matched filter and the linear
    # MMSE filter cancel nothing, so their residual statistics keep the
    # zero-prior symbol moments whatever the decoder feeds back
    static = {}
    for l in range(L):
        for k in selmap.D_l[l]:
            if det_kind == "rmf":
                s_t = detect.rmf_detect(y_ap[l], g_ap[l][:, k], full_mask)
                mu, s2h = detect.gaussian_params(
                    "rmf", None, g_ap[l], C_ap[l], zero_stats, full_mask,
                    sigma2, k, es=es, rmf_unit_power_model=(mode == "full"))
                static[(k, l)] = (None, s_t, mu, s2h)
            elif det_kind == "mmse":
                w = detect.mmse_filter(g_ap[l], C_ap[l], full_mask, sigma2,
                                       k, rho_k=cfg.rho, es=es)
                s_t = detect.mmse_pic_detect(
                    y_ap[l], g_ap[l], np.zeros((n_sym, K), np.complex128),
                    w, full_mask, k)
                mu, s2h = detect.gaussian_params(
                    "mmse", w, g_ap[l], C_ap[l], zero_stats, full_mask,
                    sigma2, k, es=es)
                static[(k, l)] = (w, s_t, mu, s2h)

    prior_dec = np.zeros((K, L, cfg.C_leng))
    frames = {}
    local_err = np.zeros((K, L))
    local_conv = np.zeros((K, L), dtype=bool)

    results = []
    for rnd in range(1, cfg.idd_iters + 1):
        for l in range(L):
            served = selmap.D_l[l]
            if served.size == 0:
                continue
            prior_syms = prior_dec[:, l, :].reshape(K, n_sym, cfg.M_c)
            stats_kl = detect.soft_symbol_stats(prior_syms, const)
            stats_t = detect.SoftSymbolStats(
                s_bar=np.ascontiguousarray(stats_kl.s_bar.T),   # (ns, K)
                var=np.ascontiguousarray(stats_kl.var.T))

            for k in served:
                priors_k = prior_syms[k]                        # (ns, M_c)
                if det_kind == "mmse-pic":
                    w = detect.mmse_pic_filter(
                        g_ap[l], C_ap[l], stats_t, full_mask, sigma2,
                        cfg.rho, k, es=es)
                    s_t = detect.mmse_pic_detect(
                        y_ap[l], g_ap[l], stats_t.s_bar, w, full_mask, k)
                    mu, s2h = detect.gaussian_params(
                        "mmse-pic", w, g_ap[l], C_ap[l], stats_t, full_mask,
                        sigma2, k, es=es)
                else:
                    w, s_t, mu, s2h = static[(k, l)]

                llr_det = detect.demap_llr(s_t, mu, s2h, priors_k, const)
                frame = ldpc_mod.LlrFrame.make(llr_det.ravel(), ue=k, ap=l)
                frames[(k, l)] = frame

                dec_ext, hard, conv = ldpc_mod.decode_boxplus(
                    pc, frame, cfg.dec_iters)
                prior_dec[k, l] = dec_ext.values
                local_err[k, l] = int((hard[msg_cols] != msgs[k]).sum())
                local_conv[k, l] = conv

        results.extend(_apply_strategies(
            cfg, det_kind, frames, selmap, msgs, pc, msg_cols, local_err,
            local_conv, mode, snr_db, rnd, k_info))
    return results


def _apply_strategies(cfg, det_kind, frames, selmap, msgs, pc, msg_cols,
                      local_err, local_conv, mode, snr_db, rnd, k_info):
    """CPU-side refinement of the current round's forwarded frames."""
    bits_total = cfg.K * k_info
    err = {"standard": 0.0, "censoring": 0.0, "combining": 0.0}
    mu_abs = {s: [] for s in refine.STRATEGIES}
    conv = {"censoring": [], "combining": []}

    for k in range(cfg.K):
        serving = selmap.M_k[k]
        bundle = refine.LlrBundle([frames[(k, l)] for l in serving])

        # standard: each serving AP decodes its own stream; the per-UE
        # contribution is the average error count across those decodes
        err["standard"] += local_err[k, serving].mean()
        mu_abs["standard"].extend(f.mu_abs for f in bundle.frames)

        cens = refine.censor_llrs(bundle)
        _, hard, c_ok = ldpc_mod.decode_boxplus(pc, cens, cfg.dec_iters)
        err["censoring"] += int((hard[msg_cols] != msgs[k]).sum())
        mu_abs["censoring"].append(cens.mu_abs)
        conv["censoring"].append(c_ok)

        comb = refine.combine_llrs(bundle)
        _, hard, c_ok = ldpc_mod.decode_boxplus(pc, comb, cfg.dec_iters)
        err["combining"] += int((hard[msg_cols] != msgs[k]).sum())
        mu_abs["combining"].append(comb.mu_abs)
        conv["combining"].append(c_ok)

    out = []
    for strat in refine.STRATEGIES:
        diag = {"mu_abs_mean": float(np.mean(mu_abs[strat]))}
        if strat == "standard":
            served_mask = selmap.served
            diag["frac_converged"] = float(local_conv[served_mask].mean())
        else:
            diag["frac_converged"] = float(np.mean(conv[strat]))
        out.append(TrialResult(
            snr_db=snr_db, mode=mode, detector=det_kind, strategy=strat,
            idd_iter=rnd, bit_errors=float(err[strat]),
            bits_total=bits_total, diagnostics=diag))
    return out


# ---------------------------------------------------------------------------
# sweep and aggregation
# ---------------------------------------------------------------------------


def _trial_seed(master_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(trial,))


def _sweep_task(args):
    cfg, snr_db, trial, mode, detectors, perfect_csi = args
    res = run_trial(cfg, snr_db, _trial_seed(cfg.seed, trial), mode=mode,
                    detectors=detectors, perfect_csi=perfect_csi)
    return (snr_db, trial), res


def run_batch(config: SystemConfig, snr_db: float, mode: str = "full",
              detectors=DETECTORS, n_trials: int = None, workers: int = 1,
              perfect_csi: bool = False):
    """All trials of one SNR point; returns per-cell per-trial error arrays.

    The reduction happens in trial order whatever the execution order, so
    parallel runs aggregate bitwise-identically to serial ones.
    """
    n_trials = config.trials if n_trials is None else n_trials
    tasks = [(config, snr_db, t, mode, tuple(detectors), perfect_csi)
             for t in range(n_trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = dict(pool.map(_sweep_task, tasks,
                                chunksize=max(1, n_trials // (8 * workers))))
    else:
        raw = dict(map(_sweep_task, tasks))

    cells = {}
    for t in range(n_trials):
        for r in raw[(snr_db, t)]:
            key = (r.detector, r.strategy, r.idd_iter)
            cells.setdefault(key, {"errors": [], "bits": []})
            cells[key]["errors"].append(r.bit_errors)
            cells[key]["bits"].append(r.bits_total)
    for v in cells.values():
        v["errors"] = np.asarray(v["errors"])
        v["bits"] = np.asarray(v["bits"])
    return cells


def sweep(config: SystemConfig, mode: str = "full", detectors=DETECTORS,
          strategies=refine.STRATEGIES, workers: int = 1,
          n_trials: int = None):
    """Full BER table over the configured SNR grid.

    Returns rows (dicts with the CSV columns) in deterministic order:
    SNR grid order, then detector, strategy, and round.
    """
    detectors = tuple(d for d in DETECTORS if d in detectors)
    strategies = tuple(s for s in refine.STRATEGIES if s in strategies)
    rows = []
    for snr_db in config.snr_grid:
        cells = run_batch(config, snr_db, mode=mode, detectors=detectors,
                          n_trials=n_trials, workers=workers)
        for det in detectors:
            for strat in strategies:
                for it in range(1, config.idd_iters + 1):
                    cell = cells[(det, strat, it)]
                    errors = float(cell["errors"].sum())
                    bits = int(cell["bits"].sum())
                    rows.append({
                        "snr_db": snr_db, "mode": mode, "detector": det,
                        "strategy": strat, "idd_iter": it,
                        "bit_errors": errors, "bits_total": bits,
                        "ber": errors / bits,
                    })
    return rows


def write_csv(rows, path) -> None:
    """Emit the sweep table; formatting is fixed so equal results give
    byte-identical files."""
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(",".join([
            f"{r['snr_db']:.6g}", r["mode"], r["detector"], r["strategy"],
            str(r["idd_iter"]), f"{r['bit_errors']:.10g}",
            str(r["bits_total"]), f"{r['ber']:.10e}",
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
