"""Metrics, significance testing and the experiment sweeps."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import iam_fuse, iam_train, majority_vote
from .core import (InvalidInput, ItemTable, build_pair_index, ground_truth_labels, pair_differences,
                   standardize_features)
from .crowd import CrowdSpec, generate_crowd, uniform_rates
from .jam import EmConfig, jam_fit, jam_infer, log_sigmoid
from .ranker import smooth_hinge
from .vrjam import ClusterModel, fit_clusters, vrjam_fit, vrjam_infer

METHODS = ("MV", "IAM", "JAM", "VRJAM")
MCNEMAR_CRITICAL_5PCT = 3.841


def pairwise_accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise InvalidInput(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise InvalidInput("no pairs")
    return float(np.mean(pred == truth))


def mcnemar_test(pred_a, pred_b, truth):
    """Continuity-corrected McNemar statistic and significance at 5%.

    b counts pairs A gets right and B wrong, c the reverse.
    """
    truth = np.asarray(truth)
    a_ok = np.asarray(pred_a) == truth
    b_ok = np.asarray(pred_b) == truth
    b = int(np.sum(a_ok & ~b_ok))
    c = int(np.sum(~a_ok & b_ok))
    if b + c == 0:
        return 0.0, False
    stat = (abs(b - c) - 1) ** 2 / (b + c)
    return stat, stat > MCNEMAR_CRITICAL_5PCT


def loss_comparison_grid(inputs) -> dict:
    """Negative smooth hinge against log-logistic on the given margins."""
    m = np.asarray(inputs, dtype=float)
    if m.ndim != 1 or m.size == 0 or not np.all(np.isfinite(m)):
        raise InvalidInput("grid must be a non-empty finite 1-D array")
    neg_hinge = -smooth_hinge(m)[0]
    log_logistic = log_sigmoid(m)
    return {"input": m, "neg_hinge": neg_hinge, "log_logistic": log_logistic,
            "max_abs_diff": float(np.max(np.abs(neg_hinge - log_logistic)))}


def loss_grid_inputs(lo: float = -6.0, hi: float = 6.0, step: float = 0.01) -> np.ndarray:
    if not (np.isfinite(lo) and np.isfinite(hi) and np.isfinite(step)) or step <= 0 or lo > hi:
        raise InvalidInput("need finite min <= max and step > 0")
    n = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(n)


def write_loss_grid(grid: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["input", "neg_hinge", "log_logistic"])
        for row in zip(grid["input"], grid["neg_hinge"], grid["log_logistic"]):
            out.writerow([f"{v:.12g}" for v in row])


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    em: EmConfig = EmConfig()
    n_clusters: object = "auto"
    threshold_ratio: float = 0.5
    D_max: int = 8
    standardize: bool = True
    methods: tuple = METHODS


@dataclass
class SweepResult:
    param_name: str
    rows: list = field(default_factory=list)  # (param, method, rep, accuracy)

    def params(self) -> list:
        seen = []
        for p, *_ in self.rows:
            if p not in seen:
                seen.append(p)
        return seen

    def accuracies(self, param, method) -> np.ndarray:
        return np.array([a for p, m, _, a in self.rows if p == param and m == method])

    def mean(self, param, method) -> float:
        return float(self.accuracies(param, method).mean())

    def summary(self) -> list:
        out = []
        methods = list(dict.fromkeys(m for _, m, _, _ in self.rows))
        for p in self.params():
            for m in methods:
                acc = self.accuracies(p, m)
                std = float(acc.std(ddof=1)) if acc.size > 1 else 0.0
                out.append((p, m, int(acc.size), float(acc.mean()), std))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["param", "method", "rep", "accuracy"])
            for p, m, r, a in self.rows:
                out.writerow([p, m, r, f"{a:.10f}"])

    def summary_to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["param", "method", "reps", "mean", "std"])
            for p, m, n, mean, std in self.summary():
                out.writerow([p, m, n, f"{mean:.10f}", f"{std:.10f}"])


@dataclass
class Experiment:
    """Items, canonical pairs, truth and differences shared by every repetition."""

    items: ItemTable
    pair_index: object
    truth: np.ndarray
    diffs: np.ndarray

    @classmethod
    def from_scores(cls, items: ItemTable, scores, standardize: bool = True) -> "Experiment":
        if standardize:
            items = standardize_features(items)[0]
        pair_index = build_pair_index(items, scores)
        truth = ground_truth_labels(pair_index, scores)
        return cls(items, pair_index, truth, pair_differences(items, pair_index))


def evaluate_methods(exp: Experiment, annotations, seed: int, config: SweepConfig = SweepConfig(),
                     clusters: Optional[ClusterModel] = None) -> dict:
    """Accuracy of each fusion method on one annotation draw."""
    acc = {}
    if "MV" in config.methods:
        acc["MV"] = pairwise_accuracy(majority_vote(annotations, seed), exp.truth)
    if "IAM" in config.methods:
        model = iam_train(annotations, exp.items, exp.pair_index, config.em.train, diffs=exp.diffs)
        acc["IAM"] = pairwise_accuracy(iam_fuse(model, exp.items, exp.pair_index), exp.truth)
    if "JAM" in config.methods:
        model = jam_fit(annotations, exp.items, exp.pair_index, config.em, seed, diffs=exp.diffs)
        acc["JAM"] = pairwise_accuracy(jam_infer(model, annotations, exp.diffs), exp.truth)
    if "VRJAM" in config.methods:
        model = vrjam_fit(annotations, exp.items, exp.pair_index, config.em, seed,
                          n_clusters=config.n_clusters, threshold_ratio=config.threshold_ratio,
                          D_max=config.D_max, diffs=exp.diffs, clusters=clusters)
        acc["VRJAM"] = pairwise_accuracy(vrjam_infer(model, annotations, exp.diffs), exp.truth)
    return acc


def _sweep(exp: Experiment, grid, spec_for, reps: int, seed: int, config: SweepConfig,
           param_name: str) -> SweepResult:
    clusters = None
    if "VRJAM" in config.methods:
        clusters = fit_clusters(exp.diffs, config.n_clusters, seed, config.threshold_ratio, config.D_max)
    result = SweepResult(param_name)
    for value in grid:
        for rep in range(reps):
            rep_seed = seed + rep
            annotations = generate_crowd(exp.truth, spec_for(value, rep_seed), exp.pair_index)
            for method, a in evaluate_methods(exp, annotations, rep_seed, config, clusters).items():
                result.rows.append((value, method, rep, a))
    return result


def run_noise_sweep(items: ItemTable, quality, base_b: Sequence[float], alpha_grid: Sequence[float],
                    reps: int = 5, seed: int = 0, config: SweepConfig = SweepConfig()) -> SweepResult:
    """Scale every annotator's flip rate by alpha; fresh crowd per repetition (seed + rep)."""
    if len(alpha_grid) == 0 or any(a < 0 for a in alpha_grid):
        raise InvalidInput("alpha grid must be non-empty and non-negative")
    exp = Experiment.from_scores(items, quality, config.standardize)
    base_b = tuple(float(b) for b in base_b)
    return _sweep(exp, list(alpha_grid),
                  lambda alpha, s: CrowdSpec(b=base_b, alpha=float(alpha), seed=s),
                  reps, seed, config, "alpha")


def run_annotator_sweep(items: ItemTable, quality, K_grid: Sequence[int] = range(3, 10),
                        reps: int = 5, seed: int = 0, config: SweepConfig = SweepConfig()) -> SweepResult:
    """Vary the crowd size with b_k = k/20."""
    if len(K_grid) == 0 or any(int(k) < 1 or int(k) > 10 for k in K_grid):
        raise InvalidInput("K grid must hold counts in 1..10 (b_k = k/20 must stay <= 0.5)")
    exp = Experiment.from_scores(items, quality, config.standardize)
    return _sweep(exp, [int(k) for k in K_grid],
                  lambda K, s: CrowdSpec(b=uniform_rates(K), seed=s),
                  reps, seed, config, "K")
