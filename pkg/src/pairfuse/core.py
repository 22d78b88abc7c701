"""Shared data model: items, canonical pairs, preference columns, and the RNG contract."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class InvalidInput(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IncompleteAnnotation(ValueError):
    def __init__(self, missing: dict):
        self.missing = dict(missing)
        detail = ", ".join(f"{a}: {n} missing" for a, n in self.missing.items())
        super().__init__(f"incomplete annotation ({detail})")


# ---------------------------------------------------------------------------
# Counter-based random streams
# ---------------------------------------------------------------------------

RNG_NAME = "philox4x64-10/v1"

# Stream domains. Never renumber: the codes are part of the reproducibility contract.
STREAMS = {
    "mv_tie": 1,
    "infer_tie": 2,
    "crowd": 3,
    "em_init": 4,
    "kmeans": 5,
    "subsample": 6,
    "surrogate": 7,
}

_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, domain: str, index: int = 0) -> np.random.Generator:
    """Generator for stream ``(seed, domain, index)``.

    Philox key word 0 is the seed, word 1 packs the domain code in the high
    32 bits and the sub-stream index in the low 32. The n-th draw of a stream
    never depends on which other streams were consumed.
    """
    if domain not in STREAMS:
        raise InvalidInput(f"unknown rng domain {domain!r}")
    if not 0 <= index < (1 << 32):
        raise InvalidInput("stream index must fit in 32 bits")
    key = np.array([seed & _MASK64, (STREAMS[domain] << 32) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniform_draws(seed: int, domain: str, n: int, index: int = 0) -> np.ndarray:
    """First ``n`` uniforms in [0, 1) of a stream; draw p belongs to position p."""
    return rng_stream(seed, domain, index).random(n)


# ---------------------------------------------------------------------------
# Items and pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ItemTable:
    ids: tuple
    X: np.ndarray
    feature_names: tuple = ()
    constant_mask: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise InvalidInput("attributes must be a 2-D array (items x features)")
        if X.shape[1] < 1:
            raise InvalidInput("attribute dimension must be >= 1")
        ids = tuple(self.ids)
        if len(ids) != X.shape[0]:
            raise InvalidInput("one id per attribute row required")
        if len(set(ids)) != len(ids):
            raise InvalidInput("item ids must be unique")
        names = tuple(self.feature_names) or tuple(f"f{k + 1}" for k in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InvalidInput("feature_names length must equal attribute dimension")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, ItemTable):
            return NotImplemented
        return (self.ids == other.ids and self.feature_names == other.feature_names
                and np.array_equal(self.X, other.X))

    __hash__ = None

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def index_of(self) -> dict:
        return {item_id: k for k, item_id in enumerate(self.ids)}

    def subset(self, rows: Sequence[int]) -> "ItemTable":
        rows = np.asarray(rows, dtype=int)
        return ItemTable(tuple(self.ids[r] for r in rows), self.X[rows], self.feature_names)


@dataclass(frozen=True, eq=False)
class PairIndex:
    """Canonical pairs (i < j), stored as two parallel index arrays."""

    i: np.ndarray
    j: np.ndarray
    n_items: int

    def __post_init__(self):
        i = np.array(self.i, dtype=np.int64).reshape(-1)
        j = np.array(self.j, dtype=np.int64).reshape(-1)
        if i.shape != j.shape:
            raise InvalidInput("pair index arrays differ in length")
        if len(i) and (np.any(i >= j) or i.min() < 0 or j.max() >= self.n_items):
            raise InvalidInput("pairs must satisfy 0 <= i < j < n_items")
        codes = i * self.n_items + j
        if len(np.unique(codes)) != len(codes):
            raise InvalidInput("duplicate pair in index")
        i.setflags(write=False)
        j.setflags(write=False)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)

    def __len__(self) -> int:
        return len(self.i)

    def __eq__(self, other):
        if not isinstance(other, PairIndex):
            return NotImplemented
        return (self.n_items == other.n_items and np.array_equal(self.i, other.i)
                and np.array_equal(self.j, other.j))

    __hash__ = None

    def take(self, positions) -> "PairIndex":
        positions = np.asarray(positions, dtype=np.int64)
        return PairIndex(self.i[positions], self.j[positions], self.n_items)

    def positions(self) -> dict:
        return {(int(a), int(b)): p for p, (a, b) in enumerate(zip(self.i, self.j))}


@dataclass(frozen=True, eq=False)
class AnnotationSet:
    """K complete label columns over one PairIndex; ``Z[k, p]`` is annotator k on pair p."""

    Z: np.ndarray
    annotator_ids: tuple

    def __post_init__(self):
        Z = np.array(self.Z, dtype=np.uint8)
        if Z.ndim == 1:
            Z = Z[None, :]
        if Z.ndim != 2 or Z.shape[0] < 1:
            raise InvalidInput("need at least one annotator column")
        if np.any(Z > 1):
            raise InvalidInput("labels must be 0/1")
        ids = tuple(self.annotator_ids)
        if len(ids) != Z.shape[0]:
            raise InvalidInput("one annotator id per column required")
        if len(set(ids)) != len(ids):
            raise InvalidInput("annotator ids must be unique")
        Z.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "annotator_ids", ids)

    @property
    def K(self) -> int:
        return self.Z.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.Z.shape[1]

    def __eq__(self, other):
        if not isinstance(other, AnnotationSet):
            return NotImplemented
        return self.annotator_ids == other.annotator_ids and np.array_equal(self.Z, other.Z)

    __hash__ = None

    def permuted(self, order: Sequence[int]) -> "AnnotationSet":
        order = list(order)
        return AnnotationSet(self.Z[order], tuple(self.annotator_ids[k] for k in order))


def build_pair_index(items: ItemTable, ground_scores=None) -> PairIndex:
    """All pairs i < j in lexicographic order, dropping tied-score pairs when scores are given."""
    n = len(items)
    if n == 0:
        raise InvalidInput("empty item table")
    i, j = np.triu_indices(n, k=1)
    if ground_scores is not None:
        s = np.asarray(ground_scores, dtype=float)
        if s.shape != (n,):
            raise InvalidInput(f"expected {n} scores, got shape {s.shape}")
        keep = s[i] != s[j]
        i, j = i[keep], j[keep]
    return PairIndex(i, j, n)


def subsample_pairs(pair_index: PairIndex, n_pairs: int, seed: int) -> PairIndex:
    """Seeded uniform subsample without replacement; keeps lexicographic order."""
    if n_pairs >= len(pair_index):
        return pair_index
    rng = rng_stream(seed, "subsample")
    chosen = np.sort(rng.choice(len(pair_index), size=n_pairs, replace=False))
    return pair_index.take(chosen)


def ground_truth_labels(pair_index: PairIndex, ground_scores) -> np.ndarray:
    s = np.asarray(ground_scores, dtype=float)
    a, b = s[pair_index.i], s[pair_index.j]
    if np.any(a == b):
        raise InvalidInput("tied scores inside the pair index")
    return (a > b).astype(np.uint8)


def difference_vector(x_i, x_j) -> np.ndarray:
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape:
        raise InvalidInput(f"dimension mismatch: {x_i.shape} vs {x_j.shape}")
    return x_i - x_j


def pair_differences(items: ItemTable, pair_index: PairIndex) -> np.ndarray:
    """Row p is x_i - x_j for pair p."""
    return items.X[pair_index.i] - items.X[pair_index.j]


def canonicalize(i: int, j: int, pref: int) -> tuple:
    """Map an (i, j, pref) triple to i < j orientation."""
    if i == j:
        raise InvalidInput("self-comparison")
    if i < j:
        return i, j, int(pref)
    return j, i, 1 - int(pref)


def standardize_features(items: ItemTable):
    """Z-score each column with the sample (n-1) std.

    Returns ``(table, mean, scale)``. Constant columns become 0, get scale 1
    and are flagged in ``table.constant_mask``.
    """
    X = items.X
    if X.shape[0] < 2:
        raise InvalidInput("standardization needs at least 2 items")
    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    constant = scale == 0
    scale = np.where(constant, 1.0, scale)
    Xs = (X - mean) / scale
    Xs[:, constant] = 0.0
    out = ItemTable(items.ids, Xs, items.feature_names, constant_mask=constant)
    return out, mean, scale
