"""CPU-side processing of the per-AP LLR streams for one UE.

Three strategies: decode every AP's stream independently (standard), keep
only the stream with the largest mean absolute LLR (censoring), or sum the
streams elementwise under an independence assumption (combining).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ldpc import LLR_CLAMP, LlrFrame, decode_boxplus

__all__ = ["STRATEGIES", "LlrBundle", "refine_standard", "censor_llrs",
           "combine_llrs"]

STRATEGIES = ("standard", "censoring", "combining")


@dataclass
class LlrBundle:
    """The LLR frames one UE's serving APs forwarded to the CPU."""

    frames: list

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a bundle needs at least one frame")
        ue = self.frames[0].ue
        n = self.frames[0].values.shape[0]
        for f in self.frames:
            if f.ue != ue or f.values.shape[0] != n:
                raise ValueError("bundle frames must share UE and length")

    @property
    def ue(self) -> int:
        return self.frames[0].ue


def refine_standard(bundle: LlrBundle, pc, max_iter: int = 10):
    """Decode each AP's stream on its own; returns the per-AP hard bits."""
    out = []
    for frame in bundle.frames:
        _, hard, _ = decode_boxplus(pc, frame, max_iter)
        out.append(hard)
    return out


def censor_llrs(bundle: LlrBundle) -> LlrFrame:
    """Keep the most reliable stream: the largest mean absolute LLR wins,
    ties broken toward the earliest frame (lowest AP index)."""
    mu = np.array([f.mu_abs for f in bundle.frames])
    return bundle.frames[int(np.argmax(mu))]


def combine_llrs(bundle: LlrBundle) -> LlrFrame:
    """Elementwise sum of all streams, clamped; opposite saturated beliefs
    cancel, aligned ones reinforce."""
    total = np.sum([f.values for f in bundle.frames], axis=0)
    return LlrFrame.make(total, ue=bundle.ue, ap=None, clamp=LLR_CLAMP)
