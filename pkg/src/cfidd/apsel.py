"""Serving-cluster formation: which APs detect which UEs.

Selection is driven purely by large-scale gains.  Each UE always keeps its
strongest AP (the master); additional APs join its cluster when their gain
is within a threshold of the master's, measured in dB, so the map is
invariant to any common scaling of the gains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SelectionMap", "select_aps"]


@dataclass
class SelectionMap:
    served: np.ndarray    # (K, L) bool, True where AP l serves UE k
    masters: np.ndarray   # (K,) master AP per UE

    @property
    def M_k(self) -> list:
        """Serving APs per UE, master first, remaining in ascending order."""
        out = []
        for k in range(self.served.shape[0]):
            aps = np.flatnonzero(self.served[k])
            m = self.masters[k]
            out.append(np.concatenate(([m], aps[aps != m])))
        return out

    @property
    def D_l(self) -> list:
        """Served UEs per AP, ascending."""
        return [np.flatnonzero(self.served[:, l])
                for l in range(self.served.shape[1])]

    def selection_matrix(self, k: int, l: int, n_ant: int) -> np.ndarray:
        """The N x N selection matrix: identity if l serves k, else zero."""
        if self.served[k, l]:
            return np.eye(n_ant)
        return np.zeros((n_ant, n_ant))

    def as_matrix(self) -> np.ndarray:
        """0/1 service map for result logs, shape (K, L)."""
        return self.served.astype(np.uint8)


def select_aps(beta, beta_th_db: float, mode: str = "full") -> SelectionMap:
    """Build the serving map from the K x L large-scale gain matrix.

    mode 'full': every AP serves every UE.  mode 'scalable': UE k keeps its
    strongest AP (ties to the lowest index) plus every AP whose gain in dB
    is at least the master's plus ``beta_th_db`` (inclusive boundary;
    beta_th_db is non-positive).
    """
    beta = np.asarray(beta, dtype=np.float64)
    K, L = beta.shape
    masters = np.argmax(beta, axis=1)

    if mode == "full":
        served = np.ones((K, L), dtype=bool)
    elif mode == "scalable":
        if beta_th_db > 0:
            raise ValueError("beta_th_db must be non-positive")
        beta_db = 10.0 * np.log10(beta)
        cutoff = beta_db[np.arange(K), masters] + beta_th_db
        served = beta_db >= cutoff[:, None]
        served[np.arange(K), masters] = True
    else:
        raise ValueError(f"unknown selection mode: {mode}")
    return SelectionMap(served=served, masters=masters)
