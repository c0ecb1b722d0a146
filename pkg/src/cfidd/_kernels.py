"""Hot numerical kernels with a numba fast path and a pure-numpy fallback.

The two inner loops that dominate a Monte Carlo run live here: the flooding
belief-propagation decoder (exact pairwise check-node combine) and the
exact-sum soft demapper.  Both exist twice with identical semantics:

* a ``@njit`` implementation, used by default when numba imports cleanly;
* a vectorized numpy implementation, selected by setting the environment
  variable ``CFIDD_NUMBA=0`` (or when numba is unavailable).

``benchmarks/bench_kernels.py`` times one against the other.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "LLR_CLAMP",
    "NUMBA_ENABLED",
    "backend",
    "boxplus",
    "decode_flood",
    "demap_exact",
]

# Global LLR saturation level, applied at every module boundary.  Beyond this
# magnitude the logarithmic correction terms of the pairwise check-node
# combine are below double precision.
LLR_CLAMP = 40.0


def _numba_requested() -> bool:
    flag = os.environ.get("CFIDD_NUMBA", "").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()

if NUMBA_ENABLED:
    from numba import njit
else:  # pragma: no cover - exercised via the env flag in tests
    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


def backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# pairwise box-plus
# ---------------------------------------------------------------------------

def boxplus(a, b):
    """Exact pairwise check-node combine of two LLR arrays (elementwise).

    sign(a)sign(b)min(|a|,|b|) + log1p(e^-|a+b|) - log1p(e^-|a-b|), the
    full-precision form including both logarithmic correction terms.
    +inf is the identity element.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mag = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore"):
        out = mag + np.log1p(np.exp(-np.abs(a + b))) \
            - np.log1p(np.exp(-np.abs(a - b)))
    # |a - b| is nan when both are infinite; the combine is then exact
    both = np.isinf(a) & np.isinf(b)
    if np.any(both):
        out = np.where(both, mag, out)
    return out


@njit(cache=True)
def _boxplus_scalar(a, b):
    if a <= 0.0:
        sa = -1.0 if a < 0.0 else 0.0
    else:
        sa = 1.0
    if b <= 0.0:
        sb = -1.0 if b < 0.0 else 0.0
    else:
        sb = 1.0
    mag = sa * sb * min(abs(a), abs(b))
    if np.isinf(a) and np.isinf(b):
        return mag
    return mag + np.log1p(np.exp(-abs(a + b))) - np.log1p(np.exp(-abs(a - b)))


# ---------------------------------------------------------------------------
# flooding decoder
# ---------------------------------------------------------------------------
#
# Graph layout (built once per code by ldpc.ParityCheck):
#   chk_ptr  : (M+1,) int32, edges of check c are chk_ptr[c]:chk_ptr[c+1]
#   chk_var  : (E,)   int32, variable touched by each edge (check order)
#   var_ptr  : (C+1,) int32, edge ids of variable v are var_edge[var_ptr[v]:...]
#   var_edge : (E,)   int32, ascending edge ids grouped by variable
#
# The check-node update runs prefix/suffix folds of the pairwise combine in
# ascending edge order; both backends use the same order so results agree.


@njit(cache=True)
def _decode_flood_numba(llr_in, chk_ptr, chk_var, var_ptr, var_edge,
                        max_iter, clamp):
    n_chk = chk_ptr.shape[0] - 1
    n_var = var_ptr.shape[0] - 1
    n_edge = chk_var.shape[0]

    msg_c2v = np.zeros(n_edge)
    msg_v2c = np.empty(n_edge)
    posterior = llr_in.copy()

    max_deg = 0
    for c in range(n_chk):
        d = chk_ptr[c + 1] - chk_ptr[c]
        if d > max_deg:
            max_deg = d
    prefix = np.empty(max_deg + 1)
    suffix = np.empty(max_deg + 1)

    converged = False
    it_done = 0
    for it in range(max_iter):
        # variable -> check
        for e in range(n_edge):
            m = posterior[chk_var[e]] - msg_c2v[e]
            if m > clamp:
                m = clamp
            elif m < -clamp:
                m = -clamp
            msg_v2c[e] = m

        # check -> variable (prefix/suffix fold per check)
        for c in range(n_chk):
            lo = chk_ptr[c]
            d = chk_ptr[c + 1] - lo
            prefix[0] = np.inf
            for j in range(d):
                prefix[j + 1] = _boxplus_scalar(prefix[j], msg_v2c[lo + j])
            suffix[d] = np.inf
            for j in range(d - 1, -1, -1):
                suffix[j] = _boxplus_scalar(suffix[j + 1], msg_v2c[lo + j])
            for j in range(d):
                msg_c2v[lo + j] = _boxplus_scalar(prefix[j], suffix[j + 1])

        # posterior and syndrome
        for v in range(n_var):
            acc = llr_in[v]
            for p in range(var_ptr[v], var_ptr[v + 1]):
                acc += msg_c2v[var_edge[p]]
            posterior[v] = acc

        it_done = it + 1
        ok = True
        for c in range(n_chk):
            par = 0
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                if posterior[chk_var[e]] < 0.0:
                    par ^= 1
            if par == 1:
                ok = False
                break
        if ok:
            converged = True
            break

    return posterior, it_done, converged


def _decode_flood_numpy(llr_in, chk_ptr, chk_var, var_ptr, var_edge,
                        max_iter, clamp, chk_edge_mat, chk_mask):
    n_var = var_ptr.shape[0] - 1
    n_edge = chk_var.shape[0]
    dmax = chk_edge_mat.shape[1]

    msg_c2v = np.zeros(n_edge)
    posterior = llr_in.copy()

    converged = False
    it_done = 0
    for it in range(max_iter):
        msg_v2c = np.clip(posterior[chk_var] - msg_c2v, -clamp, clamp)

        v2c_mat = np.where(chk_mask, msg_v2c[chk_edge_mat], np.inf)
        prefix = np.empty((v2c_mat.shape[0], dmax + 1))
        suffix = np.empty_like(prefix)
        prefix[:, 0] = np.inf
        suffix[:, dmax] = np.inf
        for j in range(dmax):
            prefix[:, j + 1] = boxplus(prefix[:, j], v2c_mat[:, j])
            suffix[:, dmax - 1 - j] = boxplus(suffix[:, dmax - j],
                                              v2c_mat[:, dmax - 1 - j])
        c2v_mat = boxplus(prefix[:, :dmax], suffix[:, 1:])
        msg_c2v[chk_edge_mat[chk_mask]] = c2v_mat[chk_mask]

        posterior = llr_in + np.bincount(chk_var, weights=msg_c2v,
                                         minlength=n_var)

        it_done = it + 1
        hard = (posterior < 0.0).astype(np.int64)
        syndrome = np.add.reduceat(hard[chk_var], chk_ptr[:-1]) % 2
        if not syndrome.any():
            converged = True
            break

    return posterior, it_done, converged


def decode_flood(llr_in, graph, max_iter, clamp=LLR_CLAMP):
    """Run the flooding decoder; returns (posterior, iterations, converged).

    ``graph`` is a TannerGraph (see ldpc module).  The posterior is the total
    per-bit LLR after the last completed iteration; convergence means the
    hard decision satisfied every parity check.
    """
    llr_in = np.ascontiguousarray(llr_in, dtype=np.float64)
    if NUMBA_ENABLED:
        return _decode_flood_numba(llr_in, graph.chk_ptr, graph.chk_var,
                                   graph.var_ptr, graph.var_edge,
                                   max_iter, clamp)
    return _decode_flood_numpy(llr_in, graph.chk_ptr, graph.chk_var,
                               graph.var_ptr, graph.var_edge, max_iter, clamp,
                               graph.chk_edge_mat, graph.chk_mask)


# ---------------------------------------------------------------------------
# exact-sum demapper
# ---------------------------------------------------------------------------


@njit(cache=True)
def _demap_exact_numba(s_tilde, mu, sigma2_h, priors, points, levels, clamp):
    n = s_tilde.shape[0]
    n_pts = points.shape[0]
    n_bits = levels.shape[1]
    out = np.empty((n, n_bits))
    metric = np.empty(n_pts)

    for i in range(n):
        inv = 1.0 / sigma2_h[i]
        for a in range(n_pts):
            d = s_tilde[i] - mu[i] * points[a]
            m = -(d.real * d.real + d.imag * d.imag) * inv
            for b in range(n_bits):
                x = -levels[a, b] * priors[i, b]
                # log(1 + e^x), overflow-safe
                if x > 0.0:
                    m -= x + np.log1p(np.exp(-x))
                else:
                    m -= np.log1p(np.exp(x))
            metric[a] = m
        for b in range(n_bits):
            max_p = -np.inf
            max_m = -np.inf
            for a in range(n_pts):
                if levels[a, b] > 0.0:
                    if metric[a] > max_p:
                        max_p = metric[a]
                else:
                    if metric[a] > max_m:
                        max_m = metric[a]
            acc_p = 0.0
            acc_m = 0.0
            for a in range(n_pts):
                if levels[a, b] > 0.0:
                    acc_p += np.exp(metric[a] - max_p)
                else:
                    acc_m += np.exp(metric[a] - max_m)
            llr = (max_p + np.log(acc_p)) - (max_m + np.log(acc_m)) \
                - priors[i, b]
            if llr > clamp:
                llr = clamp
            elif llr < -clamp:
                llr = -clamp
            out[i, b] = llr
    return out


def _demap_exact_numpy(s_tilde, mu, sigma2_h, priors, points, levels, clamp):
    d = s_tilde[:, None] - mu[:, None] * points[None, :]
    metric = -(np.abs(d) ** 2) / sigma2_h[:, None]
    # log prior of each hypothesis: sum_b -softplus(-level * llr_b)
    metric = metric - np.logaddexp(
        0.0, -levels[None, :, :] * priors[:, None, :]).sum(axis=2)

    n_bits = levels.shape[1]
    out = np.empty((s_tilde.shape[0], n_bits))
    for b in range(n_bits):
        pos = levels[:, b] > 0.0
        num = _logsumexp(metric[:, pos])
        den = _logsumexp(metric[:, ~pos])
        out[:, b] = num - den - priors[:, b]
    return np.clip(out, -clamp, clamp)


def _logsumexp(m):
    mx = m.max(axis=1)
    return mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))


def demap_exact(s_tilde, mu, sigma2_h, priors, points, levels, clamp=LLR_CLAMP):
    """Per-symbol extrinsic bit LLRs from a Gaussian-approximated output.

    Full sum over all constellation hypotheses, weighted by the bit priors,
    with the prior of the bit under test subtracted from the result.

    s_tilde, mu  : (n,) complex
    sigma2_h     : (n,) positive
    priors       : (n, n_bits) prior LLRs for the bits of each symbol
    points       : (A,) constellation points
    levels       : (A, n_bits) +-1 bit levels of each point
    """
    s_tilde = np.ascontiguousarray(s_tilde, dtype=np.complex128)
    mu = np.ascontiguousarray(np.broadcast_to(mu, s_tilde.shape),
                              dtype=np.complex128)
    sigma2_h = np.ascontiguousarray(np.broadcast_to(sigma2_h, s_tilde.shape),
                                    dtype=np.float64)
    priors = np.ascontiguousarray(priors, dtype=np.float64)
    if NUMBA_ENABLED:
        return _demap_exact_numba(s_tilde, mu, sigma2_h, priors,
                                  points, levels, clamp)
    return _demap_exact_numpy(s_tilde, mu, sigma2_h, priors,
                              points, levels, clamp)
