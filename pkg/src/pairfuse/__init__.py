"""Latent ranking inference from noisy pairwise comparisons by several annotators."""

from .baselines import IamModel, iam_fuse, iam_train, majority_vote
from .core import (AnnotationSet, IncompleteAnnotation, InvalidInput, ItemTable, PairIndex, ParseError,
                   build_pair_index, difference_vector, ground_truth_labels, pair_differences,
                   standardize_features)
from .crowd import CrowdSpec, generate_crowd, uniform_rates
from .jam import EmConfig, JamModel, PosteriorTable, jam_e_step, jam_fit, jam_infer
from .ranker import RankerWeights, TrainConfig, smooth_hinge, train_ranker
from .vrjam import ClusterModel, VrjamModel, kmeans_fit, vrjam_e_step, vrjam_fit, vrjam_infer

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet", "ClusterModel", "CrowdSpec", "EmConfig", "IamModel", "IncompleteAnnotation",
    "InvalidInput", "ItemTable", "JamModel", "PairIndex", "ParseError", "PosteriorTable",
    "RankerWeights", "TrainConfig", "VrjamModel", "build_pair_index", "difference_vector",
    "generate_crowd", "ground_truth_labels", "iam_fuse", "iam_train", "jam_e_step", "jam_fit",
    "jam_infer", "kmeans_fit", "majority_vote", "pair_differences", "smooth_hinge",
    "standardize_features", "train_ranker", "uniform_rates", "vrjam_e_step", "vrjam_fit",
    "vrjam_infer",
]
