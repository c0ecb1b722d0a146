"""Local soft detectors: matched filter, linear MMSE, and MMSE with parallel
soft interference cancellation, plus the Gaussian output model and the
prior-aware exact-sum demapper.

All operations are pure and broadcast over a leading symbol axis, so one call
covers a whole codeword block.  Antenna selection enters as a 0/1 diagonal
matrix or mask; filters live on the selected subspace and are zero off it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import LLR_CLAMP, demap_exact
from .errors import NumericalError

__all__ = [
    "Constellation",
    "SoftSymbolStats",
    "DetectorOutput",
    "soft_symbol_stats",
    "rmf_detect",
    "mmse_filter",
    "mmse_pic_filter",
    "mmse_pic_detect",
    "gaussian_params",
    "demap_llr",
    "flop_count",
]

DETECTOR_KINDS = ("rmf", "mmse", "mmse-pic")


@dataclass(frozen=True)
class Constellation:
    """Unit-energy complex alphabet with its Gray bit labeling.

    ``levels[a, b]`` is the +-1 level of bit b for point a; level +1 encodes
    bit value 0 and corresponds to a positive LLR.
    """

    points: np.ndarray
    levels: np.ndarray

    @classmethod
    def qpsk(cls):
        """Gray QPSK: bit 0 keys the real part, bit 1 the imaginary part."""
        bits = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8)
        levels = 1.0 - 2.0 * bits.astype(np.float64)
        points = (levels[:, 0] + 1j * levels[:, 1]) / np.sqrt(2.0)
        return cls(points=points, levels=levels)

    @property
    def n_bits(self) -> int:
        return self.levels.shape[1]

    @property
    def es(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def bit_map(self) -> np.ndarray:
        """Bit values (0/1) of each point, one row per point."""
        return ((1.0 - self.levels) / 2.0).astype(np.uint8)

    def map_bits(self, bits) -> np.ndarray:
        """Map a flat bit vector (length divisible by n_bits) to symbols."""
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, self.n_bits)
        idx = bits @ (1 << np.arange(self.n_bits - 1, -1, -1))
        lut = np.empty(1 << self.n_bits, dtype=np.complex128)
        lut[self.bit_map @ (1 << np.arange(self.n_bits - 1, -1, -1))] = self.points
        return lut[idx]


@dataclass
class SoftSymbolStats:
    """Prior symbol means and variances, any broadcastable shape."""

    s_bar: np.ndarray
    var: np.ndarray


@dataclass
class DetectorOutput:
    """Output of one local detector for one UE at one AP."""

    s_tilde: np.ndarray
    mu: np.ndarray
    sigma2_h: np.ndarray
    detector_kind: str = "mmse-pic"


def soft_symbol_stats(prior_llrs, constellation: Constellation) -> SoftSymbolStats:
    """Per-symbol prior mean and variance from bit LLRs.

    ``prior_llrs`` has shape (..., n_bits); the trailing axis holds the LLRs
    of the bits mapped onto one symbol.  Symbol probabilities come from the
    product of per-bit sigmoid terms, so for a full Gray alphabet they are
    normalized by construction.
    """
    priors = np.clip(np.asarray(prior_llrs, dtype=np.float64),
                     -LLR_CLAMP, LLR_CLAMP)
    levels = constellation.levels                         # (A, B)
    # log P(point) = -sum_b log(1 + exp(-level * llr))
    logp = -np.logaddexp(0.0, -levels * priors[..., None, :]).sum(axis=-1)
    p = np.exp(logp)                                      # (..., A)
    s_bar = p @ constellation.points
    var = np.sum(p * np.abs(constellation.points - s_bar[..., None]) ** 2,
                 axis=-1)
    return SoftSymbolStats(s_bar=s_bar, var=var)


def _sel_mask(D, n_ant: int) -> np.ndarray:
    """Accept an (N,N) 0/1 diagonal matrix or an (N,) mask/vector."""
    D = np.asarray(D)
    if D.ndim == 2:
        D = np.diagonal(D)
    return D.astype(bool) if D.shape == (n_ant,) else np.broadcast_to(
        bool(D), (n_ant,)).copy()


def rmf_detect(y, g_hat_kl, D) -> np.ndarray:
    """Matched-filter output (D g)^H D y; no inversion involved.

    y broadcasts over a leading symbol axis: shape (..., N).
    """
    y = np.asarray(y)
    mask = _sel_mask(D, y.shape[-1])
    w = np.where(mask, np.asarray(g_hat_kl), 0.0)
    return y[..., mask] @ np.conj(w[mask])


def _cov_terms(g_hat_l, C_l, var, sigma2, k, es, mask):
    """Selected-subspace covariance of everything except the desired term.

    var is the per-UE prior variance, shape (..., K); entry k is ignored.
    The estimation-error block is weighted by the symbol second moment,
    which equals es for a constant-modulus alphabet.
    """
    g = np.asarray(g_hat_l)[mask, :]                      # (Nsel, K)
    v = np.array(var, dtype=np.float64, copy=True)
    v[..., k] = 0.0
    A = np.einsum("...k,nk,mk->...nm", v, g, np.conj(g))
    C_sum = es * np.asarray(C_l).sum(axis=0)[np.ix_(mask, mask)]
    A = A + C_sum + sigma2 * np.eye(mask.sum())
    return A, g


def mmse_filter(g_hat_l, C_l, D, sigma2, k, rho_k=1.0, es=1.0) -> np.ndarray:
    """Linear MMSE receive filter under uninformative symbol priors."""
    zero_var = np.full(np.asarray(g_hat_l).shape[1], es)
    return mmse_pic_filter(g_hat_l, C_l,
                           SoftSymbolStats(s_bar=np.zeros_like(zero_var),
                                           var=zero_var),
                           D, sigma2, rho_k, k, es=es)


def mmse_pic_filter(g_hat_l, C_l, stats: SoftSymbolStats, D, sigma2,
                    rho_k, k, es=1.0) -> np.ndarray:
    """Soft-interference-cancellation MMSE filter for UE k at one AP.

    Solves (on the selected antenna subspace)

        (rho_k g_k g_k^H + sum_{i != k} var_i g_i g_i^H
         + es * sum_m C_m + sigma2 I) w = rho_k g_k

    where var_i are the prior symbol variances.  ``stats.var`` may carry a
    leading symbol axis, giving one filter per channel use.  The returned
    filter has zeros on unselected antennas.
    """
    g_full = np.asarray(g_hat_l)
    n_ant = g_full.shape[0]
    mask = _sel_mask(D, n_ant)
    if not mask.any():
        var = np.asarray(stats.var)
        return np.zeros(var.shape[:-1] + (n_ant,), dtype=np.complex128)

    A, g = _cov_terms(g_full, C_l, stats.var, sigma2, k, es, mask)
    gk = g[:, k]
    A = A + rho_k * np.einsum("n,m->nm", gk, np.conj(gk))
    try:
        w_sel = rho_k * np.linalg.solve(A, np.broadcast_to(
            gk, A.shape[:-1]).copy()[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"ill-conditioned receive filter solve: {exc}")

    w = np.zeros(w_sel.shape[:-1] + (n_ant,), dtype=np.complex128)
    w[..., mask] = w_sel
    return w


def mmse_pic_detect(y, g_hat_l, s_bar, w, D, k) -> np.ndarray:
    """Filter the observation after subtracting the soft interference means.

    With all-zero priors the subtraction vanishes and the output reduces to
    plain linear MMSE detection.
    """
    y = np.asarray(y)
    mask = _sel_mask(D, y.shape[-1])
    g = np.asarray(g_hat_l)[mask, :]
    sb = np.array(s_bar, dtype=np.complex128, copy=True)
    sb[..., k] = 0.0
    y_canc = y[..., mask] - np.einsum("...k,nk->...n", sb, g)
    return np.einsum("...n,...n->...", y_canc, np.conj(w[..., mask]))


def gaussian_params(detector_kind, w, g_hat_l, C_l, stats, D, sigma2, k,
                    es=1.0, rho_k=1.0, rmf_unit_power_model=False):
    """Effective gain and residual variance of a detector output.

    Models the output as mu * s_k + noise.  For the matched filter the gain
    is the selected channel energy; its variance either follows the
    unit-power network-wide approximation (``rmf_unit_power_model``, valid
    when every AP serves every UE over unit-average-power channels) or the
    exact quadratic form of the filter, which is also used for the MMSE and
    PIC filters.  Non-positive variances are floored and reported.
    """
    g_full = np.asarray(g_hat_l)
    n_ant, n_ue = g_full.shape
    mask = _sel_mask(D, n_ant)
    gk = np.where(mask, g_full[:, k], 0.0)

    if detector_kind == "rmf":
        mu = np.sum(np.abs(gk[mask]) ** 2)
        if rmf_unit_power_model:
            tr_C = np.trace(np.asarray(C_l).sum(axis=0)).real
            sigma2_h = n_ant * (es * (n_ue - 1) + es * tr_C + sigma2)
            return mu, float(sigma2_h)
        w_eff = gk
    else:
        w_eff = np.asarray(w)
        mu = np.einsum("...n,n->...", np.conj(w_eff[..., mask]), gk[mask])

    A, g = _cov_terms(g_full, C_l, stats.var, sigma2, k, es, mask)
    ws = w_eff[..., mask]
    sigma2_h = np.einsum("...n,...nm,...m->...", np.conj(ws), A, ws).real

    floor = 1e-12 * es
    if np.any(sigma2_h <= 0.0):
        warnings.warn("non-positive residual variance floored", RuntimeWarning)
        sigma2_h = np.maximum(sigma2_h, floor)
    return mu, sigma2_h


def demap_llr(s_tilde, mu, sigma2_h, prior_llrs, constellation: Constellation,
              clamp=LLR_CLAMP) -> np.ndarray:
    """Extrinsic bit LLRs via the full prior-weighted hypothesis sum.

    The prior of the bit under test is subtracted, so the result carries
    only channel evidence plus the priors of the other bits.  Output shape
    (n_symbols, n_bits), clamped.
    """
    s_tilde = np.atleast_1d(np.asarray(s_tilde, dtype=np.complex128))
    n = s_tilde.shape[0]
    priors = np.clip(np.asarray(prior_llrs, dtype=np.float64),
                     -clamp, clamp).reshape(n, constellation.n_bits)
    return demap_exact(s_tilde, mu, sigma2_h, priors,
                       constellation.points, constellation.levels, clamp)


# ---------------------------------------------------------------------------
# complexity model
# ---------------------------------------------------------------------------

def flop_count(detector_kind: str, K: int, N: int, L: int, M_c: int) -> int:
    """Multiplication count of one network-wide detection pass."""
    if min(K, N, L, M_c) < 1:
        raise ValueError("flop_count arguments must be positive")
    two_mc = 1 << M_c
    if detector_kind == "rmf":
        return 2 * K**2 * L + 4 * K * N * L + 4 * K * L * M_c * two_mc \
            + 4 * K * L * two_mc
    if detector_kind == "mmse":
        return 2 * N**2 * L * K + 2 * K**2 * N * L + 8 * K * N * L \
            + 4 * K * L * two_mc + 2 * M_c * K * L * two_mc + K * L
    if detector_kind == "mmse-pic":
        return 4 * N**2 * L * K + 3 * K**2 * N * L + 8 * K * N * L \
            + 9 * K * L * two_mc + 4 * M_c * K * L * two_mc + K * L
    raise ValueError(f"unknown detector kind: {detector_kind}")
