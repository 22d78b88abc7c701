"""Synthetic annotators that flip the true preference with a Bernoulli draw."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import AnnotationSet, InvalidInput, PairIndex, uniform_draws
from .vrjam import ClusterModel, membership


@dataclass(frozen=True)
class CrowdSpec:
    """Either per-annotator rates ``b`` (uniform mode) or a K x D table ``B``
    over the regions of ``clusters`` (region mode). ``alpha`` scales every
    rate; scaled rates are capped at 0.5."""

    mode: str = "uniform"
    b: Optional[tuple] = None
    B: Optional[np.ndarray] = None
    clusters: Optional[ClusterModel] = None
    alpha: float = 1.0
    seed: int = 0
    annotator_ids: Optional[tuple] = None

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidInput("alpha must be >= 0")
        if self.mode == "uniform":
            if self.b is None or len(self.b) < 1:
                raise InvalidInput("uniform mode needs at least one rate in b")
            rates = np.asarray(self.b, dtype=float)
        elif self.mode == "region":
            if self.B is None or self.clusters is None:
                raise InvalidInput("region mode needs B and clusters")
            rates = np.asarray(self.B, dtype=float)
            if rates.ndim != 2 or rates.shape[1] != self.clusters.D:
                raise InvalidInput(
                    f"B has {rates.shape[-1]} columns but the cluster model has D={self.clusters.D}")
        else:
            raise InvalidInput(f"unknown crowd mode {self.mode!r}")
        if np.any(rates < 0) or np.any(rates > 0.5):
            raise InvalidInput("flip rates must lie in [0, 0.5]")
        if self.annotator_ids is not None and len(self.annotator_ids) != self.K:
            raise InvalidInput("one annotator id per rate row required")

    @property
    def K(self) -> int:
        return len(self.b) if self.mode == "uniform" else np.asarray(self.B).shape[0]

    def ids(self) -> tuple:
        return self.annotator_ids or tuple(f"a{k + 1}" for k in range(self.K))

    def flip_probabilities(self, diffs=None, n_pairs: Optional[int] = None) -> np.ndarray:
        """K x P matrix of effective flip probabilities."""
        if self.mode == "uniform":
            if n_pairs is None:
                n_pairs = np.asarray(diffs).shape[0]
            base = np.repeat(np.asarray(self.b, dtype=float)[:, None], n_pairs, axis=1)
        else:
            if diffs is None:
                raise InvalidInput("region mode needs pair differences")
            m = membership(self.clusters, diffs)
            base = np.asarray(self.B, dtype=float)[:, m]
        return np.minimum(self.alpha * base, 0.5)


def uniform_rates(K: int, alpha: float = 1.0) -> tuple:
    """b_k = alpha * k / 20 for k = 1..K."""
    return tuple(alpha * k / 20 for k in range(1, K + 1))


def generate_crowd(truth, spec: CrowdSpec, pair_index: Optional[PairIndex] = None,
                   diffs=None) -> AnnotationSet:
    """Flip each true label independently; annotator k on pair p uses draw p
    of stream ``(seed, crowd, k)``."""
    truth = np.asarray(truth, dtype=np.uint8)
    P = truth.shape[0]
    if pair_index is not None and len(pair_index) != P:
        raise InvalidInput("truth and pair index differ in length")
    if diffs is not None and np.asarray(diffs).shape[0] != P:
        raise InvalidInput("truth and differences differ in length")
    probs = spec.flip_probabilities(diffs, P)
    Z = np.empty((spec.K, P), dtype=np.uint8)
    for k in range(spec.K):
        flips = uniform_draws(spec.seed, "crowd", P, index=k) < probs[k]
        Z[k] = truth ^ flips.astype(np.uint8)
    return AnnotationSet(Z, spec.ids())
