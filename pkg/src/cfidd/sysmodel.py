"""Network geometry, large-scale fading, spatial correlation, and channel
realizations.

Everything is a pure function of an explicit random generator, so trial
workers can run concurrently on disjoint seeded substreams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelState",
    "drop_geometry",
    "large_scale_fading",
    "spatial_correlation",
    "realize_channel",
    "pathloss_db",
]

# Urban-microcell pathloss at distance d (meters): -30.5 - 36.7 log10(d),
# with lognormal shadowing of 4 dB standard deviation on top.
PL_INTERCEPT_DB = -30.5
PL_SLOPE_DB = 36.7
SHADOW_STD_DB = 4.0


@dataclass
class Positions:
    ap: np.ndarray   # (L, 3) coordinates, meters
    ue: np.ndarray   # (K, 3)

    @property
    def distances(self) -> np.ndarray:
        """3-D AP-UE distances, shape (K, L)."""
        diff = self.ue[:, None, :] - self.ap[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=-1))


@dataclass
class ChannelState:
    positions: Positions
    beta: np.ndarray                    # (K, L) linear large-scale gains
    omega: np.ndarray                   # (K, L, N, N) correlation matrices
    G: np.ndarray = field(default=None)  # (L, N, K) channel matrices


def drop_geometry(config, rng) -> Positions:
    """Drop APs and UEs independently and uniformly in the service square.

    APs sit ``ap_height`` meters above the UE plane, so even collocated
    planar positions keep a strictly positive 3-D distance.
    """
    ap_xy = rng.uniform(0.0, config.area_side, size=(config.L, 2))
    ue_xy = rng.uniform(0.0, config.area_side, size=(config.K, 2))
    ap = np.column_stack([ap_xy, np.full(config.L, config.ap_height)])
    ue = np.column_stack([ue_xy, np.zeros(config.K)])
    return Positions(ap=ap, ue=ue)


def pathloss_db(d: np.ndarray) -> np.ndarray:
    """Distance-driven part of the large-scale gain, in dB (d in meters)."""
    return PL_INTERCEPT_DB - PL_SLOPE_DB * np.log10(d)


def large_scale_fading(positions: Positions, rng) -> np.ndarray:
    """Large-scale channel gains (linear), pathloss plus i.i.d. shadowing."""
    d = positions.distances
    if np.any(d <= 0.0):
        raise ValueError("AP-UE distances must be strictly positive")
    shadow = rng.normal(0.0, SHADOW_STD_DB, size=d.shape)
    return 10.0 ** ((pathloss_db(d) + shadow) / 10.0)


def spatial_correlation(beta: np.ndarray, n_ant: int, r: float = 0.0) -> np.ndarray:
    """Per-link antenna correlation matrices, trace-normalized to N*beta.

    Default is uncorrelated antennas (scaled identity).  ``r`` in [0, 1)
    switches on exponential correlation across the array for robustness
    experiments.
    """
    if not 0.0 <= r < 1.0:
        raise ValueError("correlation coefficient must lie in [0, 1)")
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(beta <= 0.0):
        raise ValueError("large-scale gains must be positive")
    idx = np.arange(n_ant)
    R = r ** np.abs(idx[:, None] - idx[None, :])
    return beta[..., None, None] * R


def realize_channel(omega: np.ndarray, rng) -> np.ndarray:
    """Draw circularly-symmetric Gaussian channels with the given covariances.

    omega has shape (K, L, N, N); the result is (L, N, K) with column k of
    slice l holding the channel of UE k at AP l.  Draws are independent
    across links.
    """
    K, L, N, _ = omega.shape
    z = (rng.normal(size=(K, L, N)) + 1j * rng.normal(size=(K, L, N))) \
        / np.sqrt(2.0)
    sqrt_omega = _psd_sqrt(omega)
    g = np.einsum("klnm,klm->kln", sqrt_omega, z)
    return np.ascontiguousarray(g.transpose(1, 2, 0))


def _psd_sqrt(mats: np.ndarray) -> np.ndarray:
    """Hermitian PSD matrix square root; tiny negative eigenvalues are
    treated as zero, anything worse flags a broken covariance upstream."""
    # fast path: scaled identities (the default correlation mode)
    n = mats.shape[-1]
    diag = np.einsum("...ii->...i", mats)
    off_mass = np.abs(mats).sum(axis=(-2, -1)) - np.abs(diag).sum(axis=-1)
    if np.all(off_mass == 0.0):
        if np.any(diag.real < 0.0):
            raise ValueError("covariance has negative diagonal entries")
        out = np.zeros_like(mats)
        np.einsum("...ii->...i", out)[...] = np.sqrt(diag.real)
        return out

    vals, vecs = np.linalg.eigh(mats)
    scale = np.abs(vals).max(axis=-1, keepdims=True)
    if np.any(vals < -1e-10 * np.maximum(scale, 1e-300)):
        raise ValueError("covariance is not positive semidefinite")
    vals = np.maximum(vals, 0.0)
    return np.einsum("...ij,...j,...kj->...ik", vecs, np.sqrt(vals),
                     np.conj(vecs))
