"""EM fusion with one flip probability per annotator (joint annotator model)."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (AnnotationSet, InvalidInput, ItemTable, PairIndex, pair_differences,
                   rng_stream, uniform_draws)
from .ranker import RankerWeights, TrainConfig, train_ranker

logger = logging.getLogger(__name__)

R_FLOOR = 1e-4


@dataclass(frozen=True)
class EmConfig:
    train: TrainConfig = TrainConfig()
    max_iterations: int = 200
    tolerance: float = 1e-5
    r_floor: float = R_FLOOR

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InvalidInput("tolerance must be > 0")
        if not 0 < self.r_floor < 0.5:
            raise InvalidInput("r_floor must lie in (0, 0.5)")


@dataclass(frozen=True)
class PosteriorTable:
    q1: np.ndarray

    @property
    def q0(self) -> np.ndarray:
        return 1.0 - self.q1


@dataclass
class EmRecord:
    iteration: int
    L: float
    M: float
    H: float
    delta: float

    @property
    def KL(self) -> float:
        return self.L - self.M


@dataclass
class EmDiagnostics:
    records: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["iteration", "L", "M", "H", "delta"])
            for rec in self.records:
                out.writerow([rec.iteration, repr(rec.L), repr(rec.M), repr(rec.H), repr(rec.delta)])

    @property
    def L(self) -> np.ndarray:
        return np.array([r.L for r in self.records])


# ---------------------------------------------------------------------------
# Probabilities
# ---------------------------------------------------------------------------


def log_sigmoid(a):
    """log(1 / (1 + exp(-a))) without overflow."""
    return -np.logaddexp(0.0, -np.asarray(a, dtype=float))


def logistic_pref_prob(w, diff) -> float:
    """P(item i above item j) from a logistic fit on the ranker margin."""
    wv = w.w if isinstance(w, RankerWeights) else np.asarray(w, dtype=float)
    diff = np.asarray(diff, dtype=float)
    if diff.shape[-1] != wv.shape[0]:
        raise InvalidInput("dimension mismatch")
    a = diff @ wv
    out = np.exp(log_sigmoid(a))
    return float(out) if np.ndim(out) == 0 else out


def joint_log_terms(margins, flip, Z):
    """Per-pair log p(z*, z^1..z^K) for z* = 1 and z* = 0.

    ``flip[k, p]`` is annotator k's flip probability on pair p.
    """
    log_r = np.log(flip)
    log_keep = np.log1p(-flip)
    Zf = Z.astype(float)
    agree_with_1 = ((1.0 - Zf) * log_r + Zf * log_keep).sum(axis=0)
    agree_with_0 = (Zf * log_r + (1.0 - Zf) * log_keep).sum(axis=0)
    l1 = log_sigmoid(margins) + agree_with_1
    l0 = log_sigmoid(-margins) + agree_with_0
    return l1, l0


def posterior_from_terms(l1, l0) -> np.ndarray:
    m = np.maximum(l1, l0)
    e1 = np.exp(l1 - m)
    e0 = np.exp(l0 - m)
    return e1 / (e1 + e0)


def e_step(w, flip, Z, diffs) -> PosteriorTable:
    wv = w.w if isinstance(w, RankerWeights) else np.asarray(w, dtype=float)
    l1, l0 = joint_log_terms(np.asarray(diffs) @ wv, flip, Z)
    return PosteriorTable(posterior_from_terms(l1, l0))


def _flip_matrix(r, n_pairs) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.broadcast_to(r[:, None], (r.shape[0], n_pairs))


def jam_e_step(w, r, annotations: AnnotationSet, diffs) -> PosteriorTable:
    r = np.asarray(r, dtype=float)
    if r.shape != (annotations.K,):
        raise InvalidInput("one flip probability per annotator required")
    if np.any(r <= 0) or np.any(r >= 1):
        raise InvalidInput("flip probabilities must lie in (0, 1)")
    return e_step(w, _flip_matrix(r, annotations.n_pairs), annotations.Z, diffs)


def expected_disagreement(q1, Z) -> np.ndarray:
    """K x P matrix of q(z*=1)(1 - z^k) + q(z*=0) z^k."""
    Zf = Z.astype(float)
    return q1 * (1.0 - Zf) + (1.0 - q1) * Zf


def jam_m_step_r(q, annotations: AnnotationSet, r_floor: float = R_FLOOR) -> np.ndarray:
    """Closed-form flip probabilities: each annotator's expected disagreement rate."""
    q1 = q.q1 if isinstance(q, PosteriorTable) else np.asarray(q, dtype=float)
    P = q1.shape[0]
    if P < 1:
        raise InvalidInput("need at least one pair")
    r = expected_disagreement(q1, annotations.Z).sum(axis=1) / float(P)
    return np.clip(r, r_floor, 1.0 - r_floor)


def jam_m_step_w(q, diffs, config: TrainConfig = TrainConfig(), init=None) -> RankerWeights:
    q1 = q.q1 if isinstance(q, PosteriorTable) else np.asarray(q, dtype=float)
    return train_ranker(diffs, q1, 1.0 - q1, config, init=init)


def flip_log_likelihood(r, q1, z) -> float:
    """The r-dependent part of the surrogate objective for one annotator (or cell)."""
    dis = expected_disagreement(np.asarray(q1, dtype=float), np.asarray(z)[None, :])[0]
    return float(np.sum(dis * np.log(r) + (1.0 - dis) * np.log1p(-r)))


def _entropy(q1) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(q1 > 0, q1 * np.log(q1), 0.0) + np.where(q1 < 1, (1 - q1) * np.log1p(-q1), 0.0))
    return float(h.sum())


def em_objectives(margins, flip, Z, q1):
    """(L, M, H): observed log-likelihood, surrogate with entropy, entropy of q."""
    l1, l0 = joint_log_terms(margins, flip, Z)
    L = float(np.logaddexp(l1, l0).sum())
    H = _entropy(q1)
    M = float((q1 * l1 + (1.0 - q1) * l0).sum()) + H
    return L, M, H


# ---------------------------------------------------------------------------
# EM loop shared with the variable-reliability model
# ---------------------------------------------------------------------------


@dataclass
class EmResult:
    w: RankerWeights
    reliability: np.ndarray
    iterations: int
    converged: bool
    diagnostics: EmDiagnostics


def run_em(diffs, Z, w0, rel0, flip_of: Callable, update_rel: Callable,
           config: EmConfig) -> EmResult:
    """Alternate E and M steps until parameters stop moving.

    ``flip_of(rel)`` maps the reliability parameters to a K x P flip matrix;
    ``update_rel(q1, rel)`` is the closed-form M-step for them.
    """
    w = RankerWeights(w0)
    rel = np.array(rel0, dtype=float)
    diag = EmDiagnostics()
    best = None
    converged = False
    prev_L = None
    iterations = 0
    for t in range(1, config.max_iterations + 1):
        q1 = e_step(w, flip_of(rel), Z, diffs).q1
        w_new = train_ranker(diffs, q1, 1.0 - q1, config.train, init=w)
        rel_new = update_rel(q1, rel)
        delta = max(float(np.max(np.abs(w_new.w - w.w))), float(np.max(np.abs(rel_new - rel))))
        w, rel = w_new, rel_new
        iterations = t
        L, M, H = em_objectives(diffs @ w.w, flip_of(rel), Z, q1)
        diag.records.append(EmRecord(t, L, M, H, delta))
        if prev_L is not None and L < prev_L - 1e-3:
            logger.warning("observed log-likelihood fell from %.6f to %.6f at iteration %d", prev_L, L, t)
        prev_L = L
        if best is None or L > best[0]:
            best = (L, w, rel.copy())
        if delta < config.tolerance:
            converged = True
            break
    if not converged:
        logger.warning("EM stopped after %d iterations without converging", iterations)
        _, w, rel = best
    return EmResult(w, rel, iterations, converged, diag)


def init_parameters(seed: int, dim: int, shape) -> tuple:
    """Seeded start: w uniform on [-0.01, 0.01], flip probabilities uniform on [0.05, 0.45]."""
    rng = rng_stream(seed, "em_init")
    w0 = rng.uniform(-0.01, 0.01, size=dim)
    rel0 = rng.uniform(0.05, 0.45, size=int(np.prod(shape))).reshape(shape)
    return w0, rel0


def map_labels(q1, seed: int) -> np.ndarray:
    """1 where q(z*=1) > 0.5; exact halves take draw p of the ``infer_tie`` stream."""
    q1 = np.asarray(q1, dtype=float)
    out = (q1 > 0.5).astype(np.uint8)
    tied = q1 == 0.5
    if tied.any():
        coin = uniform_draws(seed, "infer_tie", q1.shape[0]) < 0.5
        out[tied] = coin[tied]
    return out


# ---------------------------------------------------------------------------
# Public model
# ---------------------------------------------------------------------------


@dataclass
class JamModel:
    w: RankerWeights
    r: np.ndarray
    iterations: int
    converged: bool
    diagnostics: EmDiagnostics
    seed: int = 0

    def to_dict(self) -> dict:
        return {"w": self.w.w.tolist(), "r": np.asarray(self.r).tolist(),
                "iterations": int(self.iterations), "converged": bool(self.converged)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, seed: int = 0) -> "JamModel":
        return cls(RankerWeights(d["w"]), np.asarray(d["r"], dtype=float), int(d["iterations"]),
                   bool(d["converged"]), EmDiagnostics(), seed)


def jam_fit(annotations: AnnotationSet, items: Optional[ItemTable], pair_index: PairIndex,
            config: EmConfig = EmConfig(), seed: int = 0, diffs=None) -> JamModel:
    if annotations.n_pairs != len(pair_index):
        raise InvalidInput("annotations and pair index differ in length")
    if diffs is None:
        diffs = pair_differences(items, pair_index)
    diffs = np.asarray(diffs, dtype=float)
    K, P = annotations.K, annotations.n_pairs
    w0, r0 = init_parameters(seed, diffs.shape[1], (K,))
    floor = config.r_floor
    result = run_em(
        diffs, annotations.Z, w0, r0,
        flip_of=lambda r: _flip_matrix(r, P),
        update_rel=lambda q1, r: jam_m_step_r(q1, annotations, floor),
        config=config,
    )
    return JamModel(result.w, result.reliability, result.iterations, result.converged,
                    result.diagnostics, seed)


def jam_posterior(model: JamModel, annotations: AnnotationSet, diffs) -> PosteriorTable:
    return jam_e_step(model.w, model.r, annotations, diffs)


def jam_infer(model: JamModel, annotations: AnnotationSet, diffs) -> np.ndarray:
    return map_labels(jam_posterior(model, annotations, diffs).q1, model.seed)
