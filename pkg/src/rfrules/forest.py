"""Random forest over categorical attributes with binary level-subset splits.

Trees are grown CART-style: at every node ``mtry`` attributes are sampled
(without replacement, constants included) and the best Gini split among
them is taken.  A node becomes a leaf only when it is pure, too small, or
no sampled attribute admits a valid split; zero-gain splits are taken, which
matters for parity-style targets where no single attribute shows any
marginal signal.
"""

from __future__ import annotations

import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .seeding import derive_rng

FOREST_FORMAT = "rfrules-forest/1"

# Attributes with more levels than this get the sorted-by-class-probability
# prefix heuristic instead of the exhaustive subset scan.
EXHAUSTIVE_LEVEL_LIMIT = 10

_GAIN_TIE = 1e-12


@dataclass(frozen=True)
class Leaf:
    class_index: int
    counts: tuple[int, ...]


@dataclass(frozen=True)
class Split:
    attribute: int
    left_levels: tuple[int, ...]
    left: int
    right: int


@dataclass
class Tree:
    """Flattened tree; ``nodes[root]`` is the entry point."""

    nodes: list
    root: int = 0
    bootstrap: np.ndarray | None = None

    def leaf_count(self) -> int:
        return sum(isinstance(nd, Leaf) for nd in self.nodes)


@dataclass
class Forest:
    trees: list[Tree]
    n_trees: int
    seed: int
    mtry: int
    min_leaf: int
    attributes: tuple[tuple[str, tuple[str, ...]], ...]
    class_levels: tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return len(self.class_levels)


def _gini_sum(counts: np.ndarray) -> np.ndarray:
    """Weighted Gini impurity n * (1 - sum p^2) for each row of class counts."""
    totals = counts.sum(axis=-1)
    safe = np.where(totals > 0, totals, 1)
    return totals - (counts * counts).sum(axis=-1) / safe


def _subset_masks(k: int) -> np.ndarray:
    """All proper bipartitions of k items, anchored so column 0 stays right."""
    m = np.arange(1, 2 ** (k - 1))
    bits = (m[:, None] >> np.arange(k - 1)) & 1
    return np.concatenate([np.zeros((len(m), 1), dtype=np.int64), bits], axis=1)


def best_split(values: np.ndarray, labels: np.ndarray, n_levels: int, n_classes: int,
               min_leaf: int = 1):
    """Best binary level-subset split of one attribute, or None.

    Returns (gain, left_levels) where left_levels is a sorted tuple of level
    indices.  Subsets never contain the lowest level present in the node, so
    each bipartition is scored exactly once and orientation is deterministic.
    """
    counts = np.zeros((n_levels, n_classes), dtype=np.int64)
    np.add.at(counts, (values, labels), 1)
    present = np.flatnonzero(counts.sum(axis=1) > 0)
    k = len(present)
    if k < 2:
        return None
    sub = counts[present]

    if k <= EXHAUSTIVE_LEVEL_LIMIT:
        masks = _subset_masks(k)
    else:
        major = int(np.argmax(sub.sum(axis=0)))
        frac = sub[:, major] / sub.sum(axis=1)
        order = np.argsort(frac, kind="stable")
        masks = np.zeros((k - 1, k), dtype=np.int64)
        for i in range(k - 1):
            masks[i, order[: i + 1]] = 1
        # re-anchor: the lowest present level must stay on the right
        flip = masks[:, 0] == 1
        masks[flip] = 1 - masks[flip]

    left = masks @ sub
    right = sub.sum(axis=0) - left
    nl = left.sum(axis=1)
    nr = right.sum(axis=1)
    parent = _gini_sum(sub.sum(axis=0))
    gains = (parent - _gini_sum(left) - _gini_sum(right)) / max(len(values), 1)
    gains[(nl < min_leaf) | (nr < min_leaf)] = -np.inf

    best_i = int(np.argmax(gains))
    best_gain = gains[best_i]
    if not np.isfinite(best_gain):
        return None
    tied = np.flatnonzero(gains >= best_gain - _GAIN_TIE)
    subset = min(tuple(int(v) for v in sorted(present[masks[i] == 1])) for i in tied)
    return float(best_gain), subset


def _grow(rows: np.ndarray, labels: np.ndarray, level_counts, n_classes: int,
          mtry: int, min_leaf: int, rng: np.random.Generator, nodes: list) -> int:
    counts = np.bincount(labels, minlength=n_classes)
    if (counts > 0).sum() <= 1 or len(labels) < 2 * min_leaf:
        nodes.append(Leaf(int(np.argmax(counts)), tuple(int(c) for c in counts)))
        return len(nodes) - 1

    # candidates are attributes that still vary here; a constant draw could
    # otherwise dead-end the node while valid splits exist elsewhere
    varying = np.flatnonzero(rows.min(axis=0) != rows.max(axis=0))
    if varying.size == 0:
        nodes.append(Leaf(int(np.argmax(counts)), tuple(int(c) for c in counts)))
        return len(nodes) - 1
    sampled = rng.choice(varying, size=min(mtry, varying.size), replace=False)
    best = None  # (gain, attribute, subset)
    for a in sorted(int(a) for a in sampled):
        found = best_split(rows[:, a], labels, level_counts[a], n_classes, min_leaf)
        if found is None:
            continue
        gain, subset = found
        if best is None or gain > best[0] + _GAIN_TIE or (
            gain >= best[0] - _GAIN_TIE and (a, subset) < (best[1], best[2])
        ):
            best = (gain, a, subset)

    if best is None:
        nodes.append(Leaf(int(np.argmax(counts)), tuple(int(c) for c in counts)))
        return len(nodes) - 1

    _, attr, subset = best
    lut = np.zeros(level_counts[attr], dtype=bool)
    lut[list(subset)] = True
    go_left = lut[rows[:, attr]]
    placeholder = len(nodes)
    nodes.append(None)
    left = _grow(rows[go_left], labels[go_left], level_counts, n_classes,
                 mtry, min_leaf, rng, nodes)
    right = _grow(rows[~go_left], labels[~go_left], level_counts, n_classes,
                  mtry, min_leaf, rng, nodes)
    nodes[placeholder] = Split(attr, subset, left, right)
    return placeholder


def train_forest(train: Dataset, n_trees: int = 100, mtry: int | None = None,
                 seed: int = 0, min_leaf: int = 1) -> Forest:
    """Grow a forest of ``n_trees`` bootstrap trees on categorical data."""
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if min_leaf < 1:
        raise ValueError("min_leaf must be at least 1")
    if mtry is None:
        mtry = max(1, int(math.isqrt(train.p)))
    if not 1 <= mtry <= train.p:
        raise ValueError(f"mtry must lie in [1, {train.p}]")
    if int((train.class_counts() > 0).sum()) < 2:
        warnings.warn("training data has a single class; forest will be all leaves")

    # chain splits can reach depth ~n with min_leaf=1
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * train.n + 1000))
    level_counts = train.level_counts
    trees = []
    for t in range(n_trees):
        rng = derive_rng(seed, "tree", t)
        boot = rng.integers(0, train.n, train.n)
        nodes: list = []
        root = _grow(train.rows[boot], train.labels[boot], level_counts,
                     train.n_classes, mtry, min_leaf, rng, nodes)
        trees.append(Tree(nodes=nodes, root=root, bootstrap=boot))
    return Forest(
        trees=trees,
        n_trees=n_trees,
        seed=seed,
        mtry=mtry,
        min_leaf=min_leaf,
        attributes=train.attributes,
        class_levels=train.class_levels,
    )


def predict_tree(tree: Tree, rows: np.ndarray, level_counts) -> np.ndarray:
    """Class index per row.  Levels outside a split's left subset go right."""
    out = np.empty(rows.shape[0], dtype=np.int64)
    stack = [(tree.root, np.arange(rows.shape[0]))]
    while stack:
        node_i, idx = stack.pop()
        if idx.size == 0:
            continue
        node = tree.nodes[node_i]
        if isinstance(node, Leaf):
            out[idx] = node.class_index
            continue
        lut = np.zeros(level_counts[node.attribute], dtype=bool)
        lut[list(node.left_levels)] = True
        go_left = lut[rows[idx, node.attribute]]
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out


def predict_forest(forest: Forest, ds: Dataset) -> np.ndarray:
    """Majority vote over trees; vote ties resolve to the lowest class index."""
    if ds.attributes != forest.attributes or ds.class_levels != forest.class_levels:
        raise ValueError("dataset schema does not match the forest's training schema")
    level_counts = tuple(len(levels) for _, levels in forest.attributes)
    votes = np.zeros((ds.n, forest.n_classes), dtype=np.int64)
    rows_idx = np.arange(ds.n)
    for tree in forest.trees:
        pred = predict_tree(tree, ds.rows, level_counts)
        votes[rows_idx, pred] += 1
    return np.argmax(votes, axis=1)


def forest_error(forest: Forest, ds: Dataset) -> float:
    """Misclassification rate of the forest on ``ds``."""
    return float(np.mean(predict_forest(forest, ds) != ds.labels))


def forest_to_dict(forest: Forest) -> dict:
    trees = []
    for tree in forest.trees:
        nodes = []
        for node in tree.nodes:
            if isinstance(node, Leaf):
                nodes.append({"class": node.class_index, "counts": list(node.counts)})
            else:
                nodes.append({
                    "attribute": node.attribute,
                    "left_levels": sorted(node.left_levels),
                    "left": node.left,
                    "right": node.right,
                })
        trees.append({"root": tree.root, "nodes": nodes})
    return {
        "format": FOREST_FORMAT,
        "seed": forest.seed,
        "n_trees": forest.n_trees,
        "mtry": forest.mtry,
        "min_leaf": forest.min_leaf,
        "attributes": [{"name": n, "levels": list(lv)} for n, lv in forest.attributes],
        "class_levels": list(forest.class_levels),
        "trees": trees,
    }


def forest_from_dict(doc: dict) -> Forest:
    if doc.get("format") != FOREST_FORMAT:
        raise ValueError(f"unsupported forest format {doc.get('format')!r}")
    trees = []
    for tdoc in doc["trees"]:
        nodes: list = []
        for ndoc in tdoc["nodes"]:
            if "class" in ndoc:
                nodes.append(Leaf(int(ndoc["class"]), tuple(int(c) for c in ndoc["counts"])))
            else:
                nodes.append(Split(int(ndoc["attribute"]), tuple(int(v) for v in ndoc["left_levels"]),
                                   int(ndoc["left"]), int(ndoc["right"])))
        trees.append(Tree(nodes=nodes, root=int(tdoc["root"])))
    return Forest(
        trees=trees,
        n_trees=int(doc["n_trees"]),
        seed=int(doc["seed"]),
        mtry=int(doc["mtry"]),
        min_leaf=int(doc["min_leaf"]),
        attributes=tuple((a["name"], tuple(a["levels"])) for a in doc["attributes"]),
        class_levels=tuple(doc["class_levels"]),
    )


def save_forest(forest: Forest, path) -> None:
    Path(path).write_text(json.dumps(forest_to_dict(forest), indent=1))


def load_forest(path) -> Forest:
    return forest_from_dict(json.loads(Path(path).read_text()))
