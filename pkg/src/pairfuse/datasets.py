"""File formats and data sources.

Items CSV        ``id,f1,...,fd``
Annotations CSV  ``annotator,item_i,item_j,pref`` (either orientation; canonicalized on load)
Labels CSV       ``item_i,item_j,pref``
Wine CSV         UCI wine-quality format: ``;``-separated, quoted header, ``quality`` column.

The UCI files are not shipped. Download ``winequality-red.csv`` from
https://archive.ics.uci.edu/ml/datasets/wine+quality and point
``PAIRFUSE_RED_WINE`` at it. Without it, :func:`desk_wine` falls back to
:func:`surrogate_wine`, a seeded stand-in with the same shape.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .core import (AnnotationSet, IncompleteAnnotation, InvalidInput, ItemTable, PairIndex,
                   ParseError, canonicalize, rng_stream)

WINE_FEATURES = (
    "fixed acidity", "volatile acidity", "citric acid", "residual sugar", "chlorides",
    "free sulfur dioxide", "total sulfur dioxide", "density", "pH", "sulphates", "alcohol",
)
RED_WINE_ENV = "PAIRFUSE_RED_WINE"


def _float(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line) from None


# ---------------------------------------------------------------------------
# Items
# ---------------------------------------------------------------------------


def load_items_csv(path, score_column=None):
    """Read an items table. With ``score_column``, that column is split off and
    returned as scores: ``(items, scores)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if len(header) < 2 or header[0] != "id":
            raise ParseError("header must start with 'id' followed by feature columns", 1)
        score_pos = None
        if score_column is not None:
            if score_column not in header[1:]:
                raise ParseError(f"no column named {score_column!r}", 1)
            score_pos = header.index(score_column)
        feat_pos = [c for c in range(1, len(header)) if c != score_pos]
        ids, rows, scores, seen = [], [], [], {}
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            item_id = row[0].strip()
            if item_id in seen:
                raise ParseError(f"duplicate id {item_id!r} (first on line {seen[item_id]})", line)
            seen[item_id] = line
            ids.append(item_id)
            rows.append([_float(row[c], line) for c in feat_pos])
            if score_pos is not None:
                scores.append(_float(row[score_pos], line))
    if not ids:
        raise ParseError("no item rows", 2)
    items = ItemTable(tuple(ids), np.array(rows), tuple(header[c] for c in feat_pos))
    if score_column is not None:
        return items, np.array(scores)
    return items


def save_items_csv(items: ItemTable, path, scores=None, score_column="score") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", *items.feature_names] + ([score_column] if scores is not None else []))
        for k, item_id in enumerate(items.ids):
            row = [item_id, *(repr(float(v)) for v in items.X[k])]
            if scores is not None:
                row.append(repr(float(scores[k])))
            out.writerow(row)


def load_scores_csv(path, items: ItemTable) -> np.ndarray:
    """``id,score`` file aligned to the item table."""
    index = items.index_of()
    scores = np.full(len(items), np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["id", "score"]:
            raise ParseError("header must be 'id,score'", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if row[0] not in index:
                raise ParseError(f"unknown item id {row[0]!r}", line)
            scores[index[row[0]]] = _float(row[1], line)
    if np.isnan(scores).any():
        raise ParseError("scores missing for some items")
    return scores


def load_wine_csv(path):
    """UCI wine-quality file -> ``(items, quality)``; ids are 0-based row numbers."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=";")
        try:
            header = [h.strip().strip('"') for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if "quality" not in header:
            raise ParseError("no 'quality' column", 1)
        q_pos = header.index("quality")
        feat_pos = [c for c in range(len(header)) if c != q_pos]
        rows, quality = [], []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            rows.append([_float(row[c], line) for c in feat_pos])
            quality.append(_float(row[q_pos], line))
    if not rows:
        raise ParseError("no data rows", 2)
    ids = tuple(str(k) for k in range(len(rows)))
    return ItemTable(ids, np.array(rows), tuple(header[c] for c in feat_pos)), np.array(quality)


def looks_like_wine_csv(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return ";" in first and "quality" in first


# ---------------------------------------------------------------------------
# Annotations and labels
# ---------------------------------------------------------------------------


def load_annotations_csv(path, items: ItemTable):
    """Read ``annotator,item_i,item_j,pref`` rows into ``(AnnotationSet, PairIndex)``.

    Rows may use either orientation. Every annotator must label the same
    pair set exactly once.
    """
    index = items.index_of()
    order, cells = [], {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["annotator", "item_i", "item_j", "pref"]:
            raise ParseError("header must be 'annotator,item_i,item_j,pref'", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line)
            ann, a, b, pref = (x.strip() for x in row)
            for item_id in (a, b):
                if item_id not in index:
                    raise ParseError(f"unknown item id {item_id!r}", line)
            if pref not in ("0", "1"):
                raise ParseError(f"pref must be 0 or 1, got {pref!r}", line)
            try:
                i, j, z = canonicalize(index[a], index[b], int(pref))
            except InvalidInput as exc:
                raise ParseError(str(exc), line) from None
            if ann not in cells:
                cells[ann] = {}
                order.append(ann)
            if (i, j) in cells[ann]:
                raise ParseError(f"annotator {ann!r} labels pair ({a}, {b}) twice", line)
            cells[ann][(i, j)] = z
    if not order:
        raise ParseError("no annotation rows", 2)
    all_pairs = sorted(set().union(*(c.keys() for c in cells.values())))
    missing = {a: len(all_pairs) - len(cells[a]) for a in order if len(cells[a]) < len(all_pairs)}
    if missing:
        raise IncompleteAnnotation(missing)
    pairs = PairIndex(np.array([p[0] for p in all_pairs], dtype=np.int64),
                      np.array([p[1] for p in all_pairs], dtype=np.int64), len(items))
    Z = np.array([[cells[a][p] for p in all_pairs] for a in order], dtype=np.uint8)
    return AnnotationSet(Z, tuple(order)), pairs


def save_annotations_csv(annotations: AnnotationSet, pair_index: PairIndex, items: ItemTable,
                         path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["annotator", "item_i", "item_j", "pref"])
        for ann, col in zip(annotations.annotator_ids, annotations.Z):
            for i, j, z in zip(pair_index.i, pair_index.j, col):
                out.writerow([ann, items.ids[i], items.ids[j], int(z)])


def save_labels_csv(labels, pair_index: PairIndex, items: ItemTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["item_i", "item_j", "pref"])
        for i, j, z in zip(pair_index.i, pair_index.j, labels):
            out.writerow([items.ids[i], items.ids[j], int(z)])


def load_labels_csv(path, items: ItemTable, pair_index: PairIndex) -> np.ndarray:
    index = items.index_of()
    positions = pair_index.positions()
    labels = np.full(len(pair_index), 255, dtype=np.uint8)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["item_i", "item_j", "pref"]:
            raise ParseError("header must be 'item_i,item_j,pref'", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            a, b, pref = (x.strip() for x in row)
            if a not in index or b not in index:
                raise ParseError("unknown item id", line)
            i, j, z = canonicalize(index[a], index[b], int(pref))
            if (i, j) not in positions:
                raise ParseError(f"pair ({a}, {b}) not in the pair index", line)
            labels[positions[(i, j)]] = z
    if np.any(labels == 255):
        raise ParseError("labels missing for some pairs")
    return labels


# ---------------------------------------------------------------------------
# Wine data: real file or surrogate
# ---------------------------------------------------------------------------

# Column means and standard deviations of the UCI red-wine attributes.
_RED_MEAN = np.array([8.32, 0.528, 0.271, 2.54, 0.0875, 15.9, 46.5, 0.99675, 3.31, 0.658, 10.42])
_RED_STD = np.array([1.74, 0.179, 0.195, 1.41, 0.0471, 10.5, 32.9, 0.00189, 0.154, 0.170, 1.07])
# Share of quality grades 3..8 in the red-wine file.
_RED_QUALITY_COUNTS = {3: 10, 4: 53, 5: 681, 6: 638, 7: 199, 8: 18}
# Loadings of the latent quality on standardized attributes.
_QUALITY_LOADINGS = np.array([0.06, -0.30, 0.05, 0.01, -0.08, 0.04, -0.12, -0.05, -0.05, 0.20, 0.45])
_QUALITY_NOISE = 0.65


def _surrogate_correlation() -> np.ndarray:
    names = {n: k for k, n in enumerate(WINE_FEATURES)}
    C = np.eye(len(WINE_FEATURES))
    pairs = {
        ("fixed acidity", "citric acid"): 0.67, ("fixed acidity", "density"): 0.67,
        ("fixed acidity", "pH"): -0.68, ("volatile acidity", "citric acid"): -0.55,
        ("free sulfur dioxide", "total sulfur dioxide"): 0.67, ("density", "alcohol"): -0.50,
        ("citric acid", "pH"): -0.54, ("chlorides", "sulphates"): 0.37,
        ("residual sugar", "density"): 0.36,
    }
    for (a, b), rho in pairs.items():
        C[names[a], names[b]] = C[names[b], names[a]] = rho
    # Nearest PD matrix by eigenvalue clipping, rescaled to unit diagonal.
    vals, vecs = np.linalg.eigh(C)
    C = vecs @ np.diag(np.clip(vals, 0.05, None)) @ vecs.T
    d = np.sqrt(np.diag(C))
    return C / np.outer(d, d)


def surrogate_wine(n_items: int = 1599, seed: int = 0):
    """Seeded stand-in for the red-wine file: 11 correlated attributes on the
    published scales and integer quality grades in the published proportions,
    driven by a noisy linear latent. Not real data."""
    rng = rng_stream(seed, "surrogate")
    L = np.linalg.cholesky(_surrogate_correlation())
    Zs = rng.standard_normal((n_items, len(WINE_FEATURES))) @ L.T
    X = np.maximum(_RED_MEAN + _RED_STD * Zs, 1e-3 * _RED_MEAN)
    latent = Zs @ _QUALITY_LOADINGS + _QUALITY_NOISE * rng.standard_normal(n_items)
    grades = np.array(sorted(_RED_QUALITY_COUNTS))
    shares = np.array([_RED_QUALITY_COUNTS[g] for g in grades], dtype=float)
    cuts = np.quantile(latent, np.cumsum(shares)[:-1] / shares.sum())
    quality = grades[np.searchsorted(cuts, latent, side="right")].astype(float)
    ids = tuple(str(k) for k in range(n_items))
    return ItemTable(ids, X, WINE_FEATURES), quality


def subset_items(items: ItemTable, scores, n_items: int, seed: int = 0):
    """Seeded uniform subset of rows, kept in file order."""
    if n_items >= len(items):
        return items, np.asarray(scores, dtype=float)
    rng = rng_stream(seed, "subsample", 1)
    rows = np.sort(rng.choice(len(items), size=n_items, replace=False))
    return items.subset(rows), np.asarray(scores, dtype=float)[rows]


def desk_wine(n_items: int = 200, seed: int = 0, path=None):
    """``(items, quality, source)`` for a desk-scale red-wine subset.

    Uses ``path`` or ``$PAIRFUSE_RED_WINE`` when available, otherwise the
    surrogate; ``source`` says which.
    """
    path = path or os.environ.get(RED_WINE_ENV)
    if path and Path(path).exists():
        items, quality = load_wine_csv(path)
        source = f"uci:{Path(path).name}"
    else:
        items, quality = surrogate_wine(seed=0)
        source = "surrogate"
    items, quality = subset_items(items, quality, n_items, seed)
    return items, quality, source
