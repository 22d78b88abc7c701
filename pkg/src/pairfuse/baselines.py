"""Majority vote and independent annotator modeling (per-annotator rankers, score-sum fusion)."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import AnnotationSet, InvalidInput, ItemTable, PairIndex, pair_differences, uniform_draws
from .ranker import RankerWeights, TrainConfig, train_ranker


def majority_vote(annotations: AnnotationSet, seed: int = 0) -> np.ndarray:
    """1 where more than half the annotators say 1.

    Exact ties (even K only) take a seeded coin: pair p uses draw p of the
    ``mv_tie`` stream, so the outcome is independent of evaluation order.
    """
    Z = annotations.Z
    K = Z.shape[0]
    ones = Z.sum(axis=0, dtype=np.int64)
    out = (2 * ones > K).astype(np.uint8)
    if K % 2 == 0:
        tied = 2 * ones == K
        if tied.any():
            coin = uniform_draws(seed, "mv_tie", Z.shape[1]) < 0.5
            out[tied] = coin[tied]
    return out


@dataclass(frozen=True)
class IamModel:
    per_annotator_weights: tuple
    annotator_ids: tuple

    def __post_init__(self):
        if len(self.per_annotator_weights) < 1:
            raise InvalidInput("IAM needs at least one ranker")
        if len(self.per_annotator_weights) != len(self.annotator_ids):
            raise InvalidInput("one ranker per annotator id")
        dims = {rw.w.shape[0] for rw in self.per_annotator_weights}
        if len(dims) != 1:
            raise InvalidInput("all rankers must share one dimension")

    @property
    def summed_weights(self) -> np.ndarray:
        return np.sum([rw.w for rw in self.per_annotator_weights], axis=0)

    def to_dict(self) -> dict:
        return {str(a): rw.to_dict() for a, rw in zip(self.annotator_ids, self.per_annotator_weights)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "IamModel":
        return cls(tuple(RankerWeights.from_dict(v) for v in d.values()), tuple(d.keys()))


def iam_train(annotations: AnnotationSet, items: ItemTable, pair_index: PairIndex,
              config: TrainConfig = TrainConfig(), diffs=None) -> IamModel:
    """One ranker per annotator, each fit to that annotator's binary labels."""
    if annotations.n_pairs != len(pair_index):
        raise InvalidInput("annotations and pair index differ in length")
    if diffs is None:
        diffs = pair_differences(items, pair_index)
    rankers = []
    for z in annotations.Z:
        z = z.astype(float)
        rankers.append(train_ranker(diffs, z, 1.0 - z, config))
    return IamModel(tuple(rankers), annotations.annotator_ids)


def iam_fuse(model: IamModel, items: ItemTable, pair_index: PairIndex) -> np.ndarray:
    """1 iff the summed scores put item i strictly above item j; equality gives 0."""
    w = model.summed_weights
    if w.shape[0] != items.dim:
        raise InvalidInput("model and item dimensions differ")
    # Compare the sums directly rather than through the difference vector so
    # that exact ties stay exact.
    per_item = np.sum([items.X @ rw.w for rw in model.per_annotator_weights], axis=0)
    return (per_item[pair_index.i] > per_item[pair_index.j]).astype(np.uint8)
