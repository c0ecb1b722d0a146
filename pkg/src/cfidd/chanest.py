"""Pilot assignment, pilot-phase observation, and per-AP MMSE channel
estimation with its exact error covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

__all__ = [
    "PilotPlan",
    "ChannelEstimate",
    "assign_pilots",
    "pilot_observation",
    "mmse_estimate",
]


@dataclass
class PilotPlan:
    t: np.ndarray            # (K,) pilot index of each UE, in 0..tau_p-1
    co_pilot_sets: list      # per UE, array of UEs sharing its pilot (self incl.)
    pilots: np.ndarray       # (tau_p, tau_p) sequences, ||psi||^2 = tau_p

    @property
    def tau_p(self) -> int:
        return self.pilots.shape[0]


@dataclass
class ChannelEstimate:
    g_hat: np.ndarray        # (K, L, N) estimated channels
    C: np.ndarray            # (K, L, N, N) error covariances
    Psi: np.ndarray          # (tau_p, L, N, N) pilot Gram matrices


def assign_pilots(K: int, tau_p: int, rng=None) -> PilotPlan:
    """Round-robin pilot assignment over scaled DFT sequences.

    Deterministic: UE k gets pilot k mod tau_p, which is fully orthogonal
    whenever K <= tau_p.  The rng argument is accepted for interface
    uniformity with the other generators but is not consumed.
    """
    t = np.arange(K) % tau_p
    co = [np.flatnonzero(t == t[k]) for k in range(K)]
    # columns of the DFT matrix have squared norm tau_p already
    n = np.arange(tau_p)
    pilots = np.exp(-2j * np.pi * np.outer(n, n) / tau_p)
    return PilotPlan(t=t, co_pilot_sets=co, pilots=pilots)


def pilot_observation(G, plan: PilotPlan, eta, sigma2, rng) -> np.ndarray:
    """Received pilot blocks, one (N, tau_p) slab per AP.

    Y_l = sum_j sqrt(eta_j) g_jl psi_{t_j}^T + noise, noise entries i.i.d.
    circularly-symmetric Gaussian with variance sigma2.
    """
    G = np.asarray(G)            # (L, N, K)
    L, N, K = G.shape
    eta = np.broadcast_to(eta, (K,))
    tau_p = plan.tau_p
    seq = plan.pilots[plan.t]    # (K, tau_p)
    Y = np.einsum("lnk,k,kt->lnt", G, np.sqrt(eta), seq)
    noise = (rng.normal(size=(L, N, tau_p))
             + 1j * rng.normal(size=(L, N, tau_p))) * np.sqrt(sigma2 / 2.0)
    return Y + noise


def mmse_estimate(Y, plan: PilotPlan, omega, eta, sigma2) -> ChannelEstimate:
    """Linear MMSE channel estimates and their error covariances.

    Despreads each pilot and applies the per-link Bayesian filter
    sqrt(eta_k) Omega_kl Psi_{t_k l}^{-1}, where Psi collects the co-pilot
    covariances plus noise.  The error covariance
    C_kl = Omega_kl - eta_k tau_p Omega_kl Psi^{-1} Omega_kl never exceeds
    Omega_kl in the positive-semidefinite order.
    """
    Y = np.asarray(Y)
    omega = np.asarray(omega)            # (K, L, N, N)
    K, L, N, _ = omega.shape
    eta = np.broadcast_to(eta, (K,)).astype(np.float64)
    tau_p = plan.tau_p

    Psi = np.empty((tau_p, L, N, N), dtype=np.complex128)
    eye = np.eye(N)
    for t in range(tau_p):
        users = np.flatnonzero(plan.t == t)
        acc = np.zeros((L, N, N), dtype=np.complex128)
        for i in users:
            acc += eta[i] * tau_p * omega[i]
        Psi[t] = acc + sigma2 * eye

    g_hat = np.empty((K, L, N), dtype=np.complex128)
    C = np.empty((K, L, N, N), dtype=np.complex128)
    for k in range(K):
        t = plan.t[k]
        despread = np.einsum("lnt,t->ln", Y, np.conj(plan.pilots[t]))
        for l in range(L):
            try:
                filt = np.sqrt(eta[k]) * omega[k, l] @ np.linalg.inv(Psi[t, l])
            except np.linalg.LinAlgError as exc:
                raise NumericalError(
                    f"ill-conditioned pilot Gram matrix (t={t}, l={l}): {exc}")
            g_hat[k, l] = filt @ despread[l]
            C_kl = omega[k, l] - np.sqrt(eta[k]) * tau_p * filt @ omega[k, l]
            C[k, l] = 0.5 * (C_kl + C_kl.conj().T)
    return ChannelEstimate(g_hat=g_hat, C=C, Psi=Psi)
