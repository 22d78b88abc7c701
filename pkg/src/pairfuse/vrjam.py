"""Variable-reliability EM fusion: flip probabilities that depend on the region of
difference space a pair falls in."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import AnnotationSet, InvalidInput, ItemTable, PairIndex, pair_differences, rng_stream
from .jam import (EmConfig, EmDiagnostics, PosteriorTable, e_step, expected_disagreement,
                  init_parameters, map_labels, run_em)
from .ranker import RankerWeights

KMEANS_MAX_ITER = 100


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray
    threshold_used: float = float("nan")
    inertia_history: tuple = field(default=(), compare=False)
    labels: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        c = np.array(self.centroids, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise InvalidInput("centroids must be a non-empty 2-D array")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def D(self) -> int:
        return self.centroids.shape[0]

    def to_dict(self) -> dict:
        return {"centroids": self.centroids.tolist(), "D": self.D,
                "threshold_used": None if np.isnan(self.threshold_used) else self.threshold_used}


def _sq_distances(points, centroids) -> np.ndarray:
    # Exact (x - c)^2 sums; the expanded form loses exact ties.
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(points, D, rng) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, D):
        total = closest.sum()
        if total <= 0:
            raise InvalidInput(f"fewer than {D} distinct points")
        nxt = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
        nxt = min(nxt, n - 1)
        chosen.append(nxt)
        closest = np.minimum(closest, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def kmeans_fit(points, D: int, seed: int = 0, max_iter: int = KMEANS_MAX_ITER) -> ClusterModel:
    """Lloyd's algorithm from k-means++ starts drawn on stream ``(seed, kmeans, D)``.

    Stops when assignments repeat or after ``max_iter`` sweeps. A cluster
    that empties is re-seeded with the point farthest from its centroid.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise InvalidInput("points must be 2-D")
    if D < 1:
        raise InvalidInput("D must be >= 1")
    if D > points.shape[0]:
        raise InvalidInput(f"D={D} exceeds the {points.shape[0]} available points")
    rng = rng_stream(seed, "kmeans", D)
    centroids = _kmeanspp(points, D, rng)
    labels = None
    history = []
    for _ in range(max_iter):
        dist = _sq_distances(points, centroids)
        new_labels = dist.argmin(axis=1)
        history.append(float(dist[np.arange(len(points)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=D)
        for d in np.flatnonzero(counts == 0):
            own = dist[np.arange(len(points)), labels]
            far = int(own.argmax())
            labels[far] = d
            dist[far] = 0.0
            counts = np.bincount(labels, minlength=D)
        for d in range(D):
            centroids[d] = points[labels == d].mean(axis=0)
    return ClusterModel(centroids, inertia_history=tuple(history), labels=labels)


def inertia(points, clusters: ClusterModel) -> float:
    return float(_sq_distances(np.asarray(points, float), clusters.centroids).min(axis=1).sum())


def select_num_clusters(points, threshold_ratio: float = 0.5, D_max: int = 8, seed: int = 0) -> int:
    """Grow D from 2 until the closest centroid pair is nearer than
    ``threshold_ratio`` times the median centroid distance; return the last D
    that passed (capped at ``D_max``)."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 0:
        raise InvalidInput("no points")
    if not 0 < threshold_ratio < 1:
        raise InvalidInput("threshold_ratio must lie in (0, 1)")
    if D_max <= 1:
        return 1
    for D in range(2, D_max + 1):
        if D > points.shape[0]:
            return D - 1
        try:
            c = kmeans_fit(points, D, seed).centroids
        except InvalidInput:
            return D - 1
        gaps = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(axis=2))[np.triu_indices(D, 1)]
        if gaps.min() < threshold_ratio * np.median(gaps):
            return D - 1
    return D_max


def membership(clusters: ClusterModel, diff) -> Union[int, np.ndarray]:
    """Nearest centroid index (lowest index on ties); vectorized over rows."""
    diff = np.asarray(diff, dtype=float)
    single = diff.ndim == 1
    pts = diff[None, :] if single else diff
    idx = _sq_distances(pts, clusters.centroids).argmin(axis=1)
    return int(idx[0]) if single else idx


def _flip_from_table(R, memberships) -> np.ndarray:
    return R[:, memberships]


def vrjam_e_step(w, R, annotations: AnnotationSet, diffs, memberships) -> PosteriorTable:
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != annotations.K:
        raise InvalidInput("R must be K x D")
    if np.any(R <= 0) or np.any(R >= 1):
        raise InvalidInput("flip probabilities must lie in (0, 1)")
    return e_step(w, _flip_from_table(R, np.asarray(memberships)), annotations.Z, diffs)


def vrjam_m_step_R(q, annotations: AnnotationSet, memberships, R_prev=None,
                   r_floor: float = 1e-4, D: Optional[int] = None) -> np.ndarray:
    """Per-cluster expected disagreement rates; empty clusters keep ``R_prev``."""
    q1 = q.q1 if isinstance(q, PosteriorTable) else np.asarray(q, dtype=float)
    memberships = np.asarray(memberships)
    if D is None:
        D = R_prev.shape[1] if R_prev is not None else int(memberships.max()) + 1
    R = (np.full((annotations.K, D), 0.5) if R_prev is None
         else np.array(R_prev, dtype=float, copy=True))
    dis = expected_disagreement(q1, annotations.Z)
    for d in range(D):
        mask = memberships == d
        count = int(mask.sum())
        if count:
            # contiguous copy so the summation order matches the single-cluster path
            R[:, d] = np.ascontiguousarray(dis[:, mask]).sum(axis=1) / float(count)
    return np.clip(R, r_floor, 1.0 - r_floor)


@dataclass
class VrjamModel:
    w: RankerWeights
    R: np.ndarray
    clusters: ClusterModel
    iterations: int
    converged: bool
    diagnostics: EmDiagnostics
    seed: int = 0

    def to_dict(self) -> dict:
        return {"w": self.w.w.tolist(), "R": np.asarray(self.R).tolist(),
                "centroids": self.clusters.centroids.tolist(), "D": self.clusters.D,
                "iterations": int(self.iterations), "converged": bool(self.converged)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, seed: int = 0) -> "VrjamModel":
        return cls(RankerWeights(d["w"]), np.asarray(d["R"], dtype=float),
                   ClusterModel(np.asarray(d["centroids"], dtype=float)),
                   int(d["iterations"]), bool(d["converged"]), EmDiagnostics(), seed)

    def mean_reliability(self) -> np.ndarray:
        return np.asarray(self.R).mean(axis=1)


def fit_clusters(diffs, n_clusters="auto", seed: int = 0, threshold_ratio: float = 0.5,
                 D_max: int = 8) -> ClusterModel:
    if n_clusters == "auto":
        D = select_num_clusters(diffs, threshold_ratio, D_max, seed)
        threshold = threshold_ratio
    else:
        D = int(n_clusters)
        threshold = float("nan")
    fitted = kmeans_fit(diffs, D, seed)
    return ClusterModel(fitted.centroids, threshold, fitted.inertia_history, fitted.labels)


def vrjam_fit(annotations: AnnotationSet, items: Optional[ItemTable], pair_index: PairIndex,
              config: EmConfig = EmConfig(), seed: int = 0, n_clusters="auto",
              threshold_ratio: float = 0.5, D_max: int = 8, diffs=None,
              clusters: Optional[ClusterModel] = None) -> VrjamModel:
    """Cluster the pair differences once, then run EM with a K x D flip table."""
    if annotations.n_pairs != len(pair_index):
        raise InvalidInput("annotations and pair index differ in length")
    if diffs is None:
        diffs = pair_differences(items, pair_index)
    diffs = np.asarray(diffs, dtype=float)
    if clusters is None:
        clusters = fit_clusters(diffs, n_clusters, seed, threshold_ratio, D_max)
    m = membership(clusters, diffs)
    K, D = annotations.K, clusters.D
    w0, R0 = init_parameters(seed, diffs.shape[1], (K, D))
    floor = config.r_floor
    result = run_em(
        diffs, annotations.Z, w0, R0,
        flip_of=lambda R: _flip_from_table(R, m),
        update_rel=lambda q1, R: vrjam_m_step_R(q1, annotations, m, R, floor),
        config=config,
    )
    return VrjamModel(result.w, result.reliability, clusters, result.iterations,
                      result.converged, result.diagnostics, seed)


def vrjam_posterior(model: VrjamModel, annotations: AnnotationSet, diffs) -> PosteriorTable:
    return vrjam_e_step(model.w, model.R, annotations, diffs, membership(model.clusters, diffs))


def vrjam_infer(model: VrjamModel, annotations: AnnotationSet, diffs) -> np.ndarray:
    return map_labels(vrjam_posterior(model, annotations, diffs).q1, model.seed)
