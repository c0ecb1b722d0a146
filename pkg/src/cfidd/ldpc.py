"""Rate-1/2 LDPC code: construction, systematic encoding, and soft decoding.

The parity-check matrix is grown edge by edge (progressive edge growth with
regular column degree 3), keeping the local girth as large as possible.  The
decoder is a flooding sum-product pass whose check-node update is the exact
pairwise combine, see _kernels; it exposes extrinsic LLRs so a detector can
iterate against it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._kernels import LLR_CLAMP, decode_flood
from .errors import ConstructionError

__all__ = [
    "LLR_CLAMP",
    "LlrFrame",
    "ParityCheck",
    "TannerGraph",
    "build_parity_check",
    "encode",
    "decode_boxplus",
    "to_alist",
    "from_alist",
]

COLUMN_DEGREE = 3
MAX_CONSTRUCTION_RETRIES = 64


class TannerGraph(NamedTuple):
    """Edge-list layout of H consumed by the decoding kernels."""

    chk_ptr: np.ndarray      # (M+1,) int32
    chk_var: np.ndarray      # (E,)   int32, variable of each edge, check order
    var_ptr: np.ndarray      # (C+1,) int32
    var_edge: np.ndarray     # (E,)   int32, edge ids grouped by variable
    chk_edge_mat: np.ndarray  # (M, dmax) int64, padded edge ids per check
    chk_mask: np.ndarray     # (M, dmax) bool


@dataclass
class LlrFrame:
    """One codeword-length vector of LLRs for one UE at one AP.

    Sign convention everywhere in this package: positive LLR means coded
    bit 0, i.e. modulation level +1.  ``ap`` is None for frames formed at
    the CPU.  ``mu_abs`` is the mean absolute LLR used by the censoring
    strategy.
    """

    values: np.ndarray
    ue: int = 0
    ap: int | None = None
    mu_abs: float = field(default=0.0)

    @classmethod
    def make(cls, values, ue=0, ap=None, clamp=LLR_CLAMP):
        vals = np.clip(np.asarray(values, dtype=np.float64), -clamp, clamp)
        return cls(values=vals, ue=ue, ap=ap, mu_abs=float(np.mean(np.abs(vals))))


@dataclass
class ParityCheck:
    """Parity-check matrix with cached encoder and graph structures."""

    H: np.ndarray                  # (M, C) uint8
    seed: int
    chk_adj: list = field(repr=False, default_factory=list)
    var_adj: list = field(repr=False, default_factory=list)
    msg_cols: np.ndarray = None    # systematic (message) positions
    par_cols: np.ndarray = None    # parity positions (pivot columns)
    _encode_mat: np.ndarray = field(repr=False, default=None)
    graph: TannerGraph = field(repr=False, default=None)

    @property
    def n_checks(self) -> int:
        return self.H.shape[0]

    @property
    def n_bits(self) -> int:
        return self.H.shape[1]

    @property
    def n_message_bits(self) -> int:
        return self.H.shape[1] - self.H.shape[0]

    @property
    def G_sys(self) -> np.ndarray:
        """Systematic generator, one row per message bit; G_sys @ H.T = 0."""
        k = self.n_message_bits
        G = np.zeros((k, self.n_bits), dtype=np.uint8)
        G[np.arange(k), self.msg_cols] = 1
        G[:, self.par_cols] = self._encode_mat.T
        return G

    def girth(self) -> int:
        """Length of the shortest cycle of the Tanner graph (BFS search)."""
        return _girth(self.var_adj, self.chk_adj)


def build_parity_check(c_leng: int, m: int, seed: int = 0) -> ParityCheck:
    """Grow a full-rank (m x c_leng) parity-check matrix, column degree 3.

    Deterministic for a fixed seed.  If a draw comes out rank deficient the
    internal seed is bumped and construction retried a bounded number of
    times before giving up.
    """
    if c_leng <= m:
        raise ConstructionError("need more code bits than parity checks")
    if COLUMN_DEGREE > m:
        raise ConstructionError("column degree exceeds the check count")

    for attempt in range(MAX_CONSTRUCTION_RETRIES):
        rng = np.random.default_rng(seed + attempt)
        chk_adj, var_adj = _peg_grow(m, c_leng, COLUMN_DEGREE, rng)
        H = np.zeros((m, c_leng), dtype=np.uint8)
        for c, vs in enumerate(chk_adj):
            H[c, vs] = 1
        rank, piv, reduced = _gf2_reduce(H)
        if rank == m:
            pc = ParityCheck(H=H, seed=seed, chk_adj=chk_adj, var_adj=var_adj)
            _finalize(pc, piv, reduced)
            return pc
    raise ConstructionError(
        f"no full-rank matrix after {MAX_CONSTRUCTION_RETRIES} attempts")


def encode(pc: ParityCheck, msg) -> np.ndarray:
    """Systematic encoding; message bits land on pc.msg_cols."""
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape != (pc.n_message_bits,):
        raise ValueError(f"message must have {pc.n_message_bits} bits")
    cw = np.zeros(pc.n_bits, dtype=np.uint8)
    cw[pc.msg_cols] = msg
    cw[pc.par_cols] = (pc._encode_mat @ msg) % 2
    return cw


def decode_boxplus(pc: ParityCheck, llr_in, max_iter: int, prior=None):
    """Flooding sum-product decode; returns (extrinsic frame, bits, converged).

    ``llr_in`` is an LlrFrame (or plain array) of detector LLRs; ``prior``
    is an optional additional LLR frame added to the input, whose
    contribution is likewise excluded from the returned extrinsic.  The
    extrinsic is the total output minus the total input, clamped; hard bits
    come from the sign of the total LLR (negative means bit 1).
    """
    if isinstance(llr_in, LlrFrame):
        vals, ue, ap = llr_in.values, llr_in.ue, llr_in.ap
    else:
        vals, ue, ap = np.asarray(llr_in, dtype=np.float64), 0, None
    total_in = np.clip(vals, -LLR_CLAMP, LLR_CLAMP)
    if prior is not None:
        pvals = prior.values if isinstance(prior, LlrFrame) else np.asarray(prior)
        total_in = np.clip(total_in + pvals, -LLR_CLAMP, LLR_CLAMP)

    posterior, _, converged = decode_flood(total_in, pc.graph, max_iter,
                                           clamp=LLR_CLAMP)
    hard = (posterior < 0).astype(np.uint8)
    ext = LlrFrame.make(posterior - total_in, ue=ue, ap=ap)
    return ext, hard, bool(converged)


# ---------------------------------------------------------------------------
# construction internals
# ---------------------------------------------------------------------------


def _peg_grow(m, n, dv, rng):
    """Edge-by-edge growth; each new edge lands on the most distant,
    least-loaded check reachable from the variable under construction."""
    chk_adj = [[] for _ in range(m)]
    var_adj = [[] for _ in range(n)]
    chk_deg = np.zeros(m, dtype=np.int64)

    for v in range(n):
        for t in range(dv):
            if t == 0:
                cand = np.flatnonzero(chk_deg == chk_deg.min())
            else:
                dist = _check_distances(v, var_adj, chk_adj, m)
                unreached = np.flatnonzero(dist < 0)
                if unreached.size:
                    pool = unreached
                else:
                    connected = np.zeros(m, dtype=bool)
                    connected[var_adj[v]] = True
                    far = dist.copy()
                    far[connected] = -1
                    pool = np.flatnonzero(far == far.max())
                cand = pool[chk_deg[pool] == chk_deg[pool].min()]
            pick = int(cand[rng.integers(cand.size)])
            var_adj[v].append(pick)
            chk_adj[pick].append(v)
            chk_deg[pick] += 1
    return chk_adj, var_adj


def _check_distances(v0, var_adj, chk_adj, m):
    """BFS distances from variable v0 to every check; -1 if unreachable."""
    dist = np.full(m, -1, dtype=np.int64)
    seen_var = {v0}
    frontier = [v0]
    d = 1
    while frontier:
        next_checks = []
        for v in frontier:
            for c in var_adj[v]:
                if dist[c] < 0:
                    dist[c] = d
                    next_checks.append(c)
        frontier = []
        for c in next_checks:
            for v in chk_adj[c]:
                if v not in seen_var:
                    seen_var.add(v)
                    frontier.append(v)
        d += 2
    return dist


def _gf2_reduce(H):
    """Row-reduce over GF(2); returns (rank, pivot columns, reduced matrix)."""
    R = H.copy()
    m, n = R.shape
    piv = []
    r = 0
    for col in range(n):
        hits = np.flatnonzero(R[r:, col])
        if hits.size == 0:
            continue
        pr = hits[0] + r
        if pr != r:
            R[[r, pr]] = R[[pr, r]]
        others = np.flatnonzero(R[:, col])
        others = others[others != r]
        R[others] ^= R[r]
        piv.append(col)
        r += 1
        if r == m:
            break
    return r, np.asarray(piv, dtype=np.int64), R


def _finalize(pc, piv, reduced):
    n = pc.n_bits
    msg_cols = np.setdiff1d(np.arange(n), piv)
    pc.msg_cols = msg_cols
    pc.par_cols = piv
    pc._encode_mat = reduced[:, msg_cols].astype(np.uint8)
    pc.graph = _build_graph(pc.H)


def _build_graph(H):
    m, n = H.shape
    chk_idx, var_idx = np.nonzero(H)          # row-major: grouped by check
    chk_var = var_idx.astype(np.int32)
    row_deg = np.bincount(chk_idx, minlength=m)
    chk_ptr = np.zeros(m + 1, dtype=np.int32)
    np.cumsum(row_deg, out=chk_ptr[1:])

    order = np.argsort(chk_var, kind="stable")
    var_edge = order.astype(np.int32)
    col_deg = np.bincount(chk_var, minlength=n)
    var_ptr = np.zeros(n + 1, dtype=np.int32)
    np.cumsum(col_deg, out=var_ptr[1:])

    dmax = int(row_deg.max())
    chk_edge_mat = np.zeros((m, dmax), dtype=np.int64)
    chk_mask = np.zeros((m, dmax), dtype=bool)
    for c in range(m):
        d = row_deg[c]
        chk_edge_mat[c, :d] = np.arange(chk_ptr[c], chk_ptr[c] + d)
        chk_mask[c, :d] = True
    return TannerGraph(chk_ptr, chk_var, var_ptr, var_edge,
                       chk_edge_mat, chk_mask)


def _girth(var_adj, chk_adj, cap=4):
    """Shortest cycle via BFS from every variable node.

    Node ids: variables 0..n-1, checks n..n+m-1.  Returns 0 for an acyclic
    graph.  Stops early once a cycle of length ``cap`` (the bipartite
    minimum) is found.
    """
    n = len(var_adj)
    m = len(chk_adj)
    adj = [[] for _ in range(n + m)]
    for v, cs in enumerate(var_adj):
        for c in cs:
            adj[v].append(n + c)
            adj[n + c].append(v)

    best = 0
    for s in range(n):
        dist = np.full(n + m, -1, dtype=np.int64)
        parent = np.full(n + m, -1, dtype=np.int64)
        dist[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    q.append(w)
                elif w != parent[u]:
                    cyc = int(dist[u] + dist[w] + 1)
                    if best == 0 or cyc < best:
                        best = cyc
        if best == cap:
            break
    return best


# ---------------------------------------------------------------------------
# alist interchange
# ---------------------------------------------------------------------------


def to_alist(pc: ParityCheck) -> str:
    """Serialize H in the standard sparse Tanner-graph text format."""
    m, n = pc.H.shape
    col_deg = [len(a) for a in pc.var_adj]
    row_deg = [len(a) for a in pc.chk_adj]
    lines = [f"{n} {m}",
             f"{max(col_deg)} {max(row_deg)}",
             " ".join(str(d) for d in col_deg),
             " ".join(str(d) for d in row_deg)]
    for v in range(n):
        lines.append(" ".join(str(c + 1) for c in sorted(pc.var_adj[v])))
    for c in range(m):
        lines.append(" ".join(str(v + 1) for v in sorted(pc.chk_adj[c])))
    return "\n".join(lines) + "\n"


def from_alist(text: str) -> ParityCheck:
    """Parse an alist document (padded zero entries tolerated)."""
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    n, m = int(rows[0][0]), int(rows[0][1])
    H = np.zeros((m, n), dtype=np.uint8)
    var_lines = rows[4:4 + n]
    for v, entries in enumerate(var_lines):
        for tok in entries:
            c = int(tok)
            if c > 0:
                H[c - 1, v] = 1
    rank, piv, reduced = _gf2_reduce(H)
    if rank != m:
        raise ConstructionError("imported matrix is rank deficient")
    chk_adj = [list(np.flatnonzero(H[c]).astype(int)) for c in range(m)]
    var_adj = [list(np.flatnonzero(H[:, v]).astype(int)) for v in range(n)]
    pc = ParityCheck(H=H, seed=-1, chk_adj=chk_adj, var_adj=var_adj)
    _finalize(pc, piv, reduced)
    return pc
