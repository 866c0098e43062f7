"""Categorical dataset container plus loaders, generators, and splitters.

Rows hold level indices (ints), never level strings; the attribute schema
maps indices back to names.  Everything downstream (trees, rules, coverage)
works on the integer representation.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import derive_rng


@dataclass(frozen=True)
class Dataset:
    """Immutable categorical table with a single class column.

    attributes: tuple of (name, levels) pairs; level order fixes the index
        encoding used in ``rows``.
    class_name / class_levels: schema of the target column.
    rows: (n, p) int array of level indices.
    labels: (n,) int array of class level indices.
    """

    attributes: tuple[tuple[str, tuple[str, ...]], ...]
    class_name: str
    class_levels: tuple[str, ...]
    rows: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.int64))
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        if rows.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        if len(self.attributes) < 1:
            raise ValueError("dataset needs at least one attribute")
        if rows.shape[1] != len(self.attributes):
            raise ValueError("row width does not match attribute count")
        if labels.shape != (rows.shape[0],):
            raise ValueError("labels length does not match row count")
        if len(self.class_levels) < 2:
            raise ValueError("class needs at least two levels")
        if len(set(self.class_levels)) != len(self.class_levels):
            raise ValueError("duplicate class levels")
        seen = set()
        for name, levels in self.attributes:
            if name in seen:
                raise ValueError(f"duplicate attribute name {name!r}")
            seen.add(name)
            if not levels:
                raise ValueError(f"attribute {name!r} has an empty vocabulary")
            if len(set(levels)) != len(levels):
                raise ValueError(f"attribute {name!r} has duplicate levels")
        for j, (name, levels) in enumerate(self.attributes):
            col = rows[:, j]
            if col.min() < 0 or col.max() >= len(levels):
                raise ValueError(f"level index out of range for attribute {name!r}")
        if labels.min() < 0 or labels.max() >= len(self.class_levels):
            raise ValueError("class label index out of range")
        rows.setflags(write=False)
        labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_levels)

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    def levels(self, j: int) -> tuple[str, ...]:
        return self.attributes[j][1]

    def n_levels(self, j: int) -> int:
        return len(self.attributes[j][1])

    @property
    def level_counts(self) -> tuple[int, ...]:
        return tuple(len(levels) for _, levels in self.attributes)

    @property
    def total_levels(self) -> int:
        """Sum of attribute vocabulary sizes (class column excluded)."""
        return sum(self.level_counts)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            attributes=self.attributes,
            class_name=self.class_name,
            class_levels=self.class_levels,
            rows=self.rows[idx].copy(),
            labels=self.labels[idx].copy(),
        )

    def same_schema(self, other: "Dataset") -> bool:
        return (
            self.attributes == other.attributes
            and self.class_name == other.class_name
            and self.class_levels == other.class_levels
        )


def load_csv(path, target: str = "last") -> Dataset:
    """Load a categorical CSV with a header row.

    All columns are read as categorical; level vocabularies follow first
    appearance order.  ``target`` names the class column, or "last".
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        records = list(reader)
    if len(header) < 2:
        raise ValueError(f"{path}: need at least one attribute column plus a class column")
    if not records:
        raise ValueError(f"{path}: no data rows")
    for i, rec in enumerate(records):
        if len(rec) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(rec)} fields, expected {len(header)}")
        for j, cell in enumerate(rec):
            if cell == "":
                raise ValueError(f"{path}: empty cell at row {i + 2}, column {header[j]!r}")
    if target == "last":
        t = len(header) - 1
    else:
        if target not in header:
            raise ValueError(f"{path}: target column {target!r} not found")
        t = header.index(target)

    vocabs: list[dict[str, int]] = [{} for _ in header]
    coded = np.empty((len(records), len(header)), dtype=np.int64)
    for i, rec in enumerate(records):
        for j, cell in enumerate(rec):
            code = vocabs[j].setdefault(cell, len(vocabs[j]))
            coded[i, j] = code

    attr_cols = [j for j in range(len(header)) if j != t]
    attributes = tuple((header[j], tuple(vocabs[j])) for j in attr_cols)
    return Dataset(
        attributes=attributes,
        class_name=header[t],
        class_levels=tuple(vocabs[t]),
        rows=coded[:, attr_cols],
        labels=coded[:, t],
    )


def load_csv_like(path, schema: Dataset, target: str | None = None) -> Dataset:
    """Load a CSV and encode it with an existing dataset's vocabularies.

    Columns are matched by header name (order may differ), the class column
    by ``schema.class_name`` unless ``target`` overrides it.  A level string
    absent from the schema is an error: new data must be expressible in the
    training encoding.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        records = list(reader)
    if not records:
        raise ValueError(f"{path}: no data rows")
    target = schema.class_name if target is None or target == "last" else target
    positions = {}
    for name in (*schema.attribute_names, target):
        if name not in header:
            raise ValueError(f"{path}: column {name!r} not found")
        positions[name] = header.index(name)

    vocab = {name: {lev: i for i, lev in enumerate(levels)} for name, levels in schema.attributes}
    class_vocab = {lev: i for i, lev in enumerate(schema.class_levels)}
    rows = np.empty((len(records), schema.p), dtype=np.int64)
    labels = np.empty(len(records), dtype=np.int64)
    for i, rec in enumerate(records):
        if len(rec) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(rec)} fields, expected {len(header)}")
        for j, name in enumerate(schema.attribute_names):
            cell = rec[positions[name]]
            if cell not in vocab[name]:
                raise ValueError(f"{path}: row {i + 2}: unknown level {cell!r} for {name!r}")
            rows[i, j] = vocab[name][cell]
        cell = rec[positions[target]]
        if cell not in class_vocab:
            raise ValueError(f"{path}: row {i + 2}: unknown class level {cell!r}")
        labels[i] = class_vocab[cell]
    return Dataset(
        attributes=schema.attributes,
        class_name=schema.class_name,
        class_levels=schema.class_levels,
        rows=rows,
        labels=labels,
    )


def save_csv(ds: Dataset, path) -> None:
    """Write the dataset back to CSV (attribute columns, then the class)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.attribute_names) + [ds.class_name])
        for i in range(ds.n):
            rec = [ds.levels(j)[ds.rows[i, j]] for j in range(ds.p)]
            rec.append(ds.class_levels[ds.labels[i]])
            writer.writerow(rec)


def generate_xor(seed: int = 0, n: int = 840) -> Dataset:
    """Two-attribute categorical xor with a correlated distractor.

    A and B have four levels each; the class is '1' exactly when A and B
    fall in matching halves (A1/A3 with B1/B3, A2/A4 with B2/B4).  C is a
    two-level attribute fully determined by (A, B): C1 on the A3/A4 x B3/B4
    block, C2 elsewhere.  Cell sizes are near uniform (n/16, remainder
    spread at random) and row order is shuffled.
    """
    if n < 16:
        raise ValueError("need at least one instance per (A, B) cell")
    rng = derive_rng(seed, "xor")
    base, rem = divmod(n, 16)
    counts = np.full(16, base, dtype=np.int64)
    counts[rng.permutation(16)[:rem]] += 1

    a_col, b_col = [], []
    for cell in range(16):
        a, b = divmod(cell, 4)
        a_col.extend([a] * counts[cell])
        b_col.extend([b] * counts[cell])
    a_arr = np.array(a_col, dtype=np.int64)
    b_arr = np.array(b_col, dtype=np.int64)
    # A1/A3 (indices 0, 2) pair with B1/B3, A2/A4 with B2/B4.
    y = ((a_arr + b_arr) % 2 == 0).astype(np.int64)
    c_arr = np.where((a_arr >= 2) & (b_arr >= 2), 0, 1)

    order = rng.permutation(n)
    rows = np.stack([a_arr, b_arr, c_arr], axis=1)[order]
    y = y[order]
    return Dataset(
        attributes=(
            ("A", ("A1", "A2", "A3", "A4")),
            ("B", ("B1", "B2", "B3", "B4")),
            ("C", ("C1", "C2")),
        ),
        class_name="Y",
        class_levels=("0", "1"),
        rows=rows,
        labels=y,
    )


def stratified_split(ds: Dataset, train_ratio: float = 0.7, seed: int = 0):
    """Split into (train, test) keeping per-class proportions within one row.

    Per-class train counts use largest-remainder rounding so the total train
    size equals round(train_ratio * n) and every class stays within +-1 of
    its exact share.
    """
    if not 0.0 < train_ratio < 1.0:
        raise ValueError("train_ratio must lie strictly between 0 and 1")
    counts = ds.class_counts()
    for k, c in enumerate(counts):
        if c < 2:
            raise ValueError(
                f"class {ds.class_levels[k]!r} has {int(c)} instance(s); need at least 2 to split"
            )
    exact = train_ratio * counts
    take = np.floor(exact).astype(np.int64)
    leftover = int(round(train_ratio * ds.n)) - int(take.sum())
    if leftover > 0:
        frac = exact - take
        order = sorted(range(ds.n_classes), key=lambda k: (-frac[k], k))
        for k in order[:leftover]:
            take[k] += 1
    # keep every class represented on both sides when possible
    take = np.clip(take, 1, counts - 1)

    rng = derive_rng(seed, "split")
    train_idx, test_idx = [], []
    for k in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == k)
        members = members[rng.permutation(len(members))]
        train_idx.extend(members[: take[k]])
        test_idx.extend(members[take[k]:])
    train_idx = np.sort(np.array(train_idx, dtype=np.int64))
    test_idx = np.sort(np.array(test_idx, dtype=np.int64))
    return ds.subset(train_idx), ds.subset(test_idx)


def quantile_discretize(X, y, bins: int = 4, attribute_names=None, class_name: str = "class") -> Dataset:
    """Bin numeric columns at empirical quantiles and return a Dataset.

    X is a 2-d numeric array-like, y a sequence of class level strings.
    Each column gets up to ``bins`` half-open intervals labelled like
    "(-inf,2.5]"; duplicate cut points collapse, and a constant column
    degrades to a single interval with a warning.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty 2-d numeric table")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    if bins < 2:
        raise ValueError("bins must be at least 2")
    y = [str(v) for v in y]
    if len(y) != X.shape[0]:
        raise ValueError("y length does not match X")
    if attribute_names is None:
        attribute_names = [f"V{j + 1}" for j in range(X.shape[1])]
    if len(attribute_names) != X.shape[1]:
        raise ValueError("attribute_names length does not match X")

    attributes = []
    cols = []
    for j in range(X.shape[1]):
        col = X[:, j]
        qs = np.quantile(col, [i / bins for i in range(1, bins)])
        cuts = np.unique(qs)
        cuts = cuts[cuts < col.max()]
        if len(cuts) == 0:
            warnings.warn(
                f"column {attribute_names[j]!r} has no usable quantile cuts; using a single level"
            )
            levels = ("(-inf,inf)",)
            coded = np.zeros(len(col), dtype=np.int64)
        else:
            edges = ["-inf"] + [f"{c:g}" for c in cuts] + ["inf"]
            levels = []
            for i in range(len(edges) - 1):
                left = "(" + edges[i]
                right = edges[i + 1] + ("]" if i < len(edges) - 2 else ")")
                levels.append(f"{left},{right}")
            levels = tuple(levels)
            coded = np.searchsorted(cuts, col, side="left").astype(np.int64)
        attributes.append((attribute_names[j], levels))
        cols.append(coded)

    class_vocab: dict[str, int] = {}
    labels = np.array([class_vocab.setdefault(v, len(class_vocab)) for v in y], dtype=np.int64)
    return Dataset(
        attributes=tuple(attributes),
        class_name=class_name,
        class_levels=tuple(class_vocab),
        rows=np.stack(cols, axis=1),
        labels=labels,
    )
