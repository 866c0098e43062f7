"""Rules extracted from tree paths, their quality metrics, and coverage.

A condition is a conjunction of per-attribute level-subset memberships.
Walking a path from root to leaf intersects every edge's constraint, so a
repeatedly split attribute collapses into a single subset term.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .forest import Forest, Leaf


@dataclass(frozen=True)
class Condition:
    """Conjunction of (attribute index, sorted level-index subset) terms."""

    terms: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self):
        attrs = [a for a, _ in self.terms]
        if attrs != sorted(set(attrs)):
            raise ValueError("terms must be sorted by attribute and unique")
        for a, levels in self.terms:
            if not levels:
                raise ValueError("term with empty level subset")
            if list(levels) != sorted(set(levels)):
                raise ValueError("term levels must be sorted and unique")

    @property
    def attribute_indices(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.terms)

    @property
    def att_nbr(self) -> int:
        return len(self.terms)

    @property
    def lev_nbr(self) -> int:
        return sum(len(levels) for _, levels in self.terms)

    def covers(self, ds: Dataset) -> np.ndarray:
        """Boolean mask of instances satisfying every term."""
        mask = np.ones(ds.n, dtype=bool)
        for a, levels in self.terms:
            lut = np.zeros(ds.n_levels(a), dtype=bool)
            lut[list(levels)] = True
            mask &= lut[ds.rows[:, a]]
        return mask


def make_condition(subsets: dict[int, set[int]], level_counts) -> Condition | None:
    """Normalize attribute->levels constraints into a Condition.

    Terms covering an attribute's full vocabulary are dropped; an empty
    subset makes the whole conjunction unsatisfiable, signalled as None.
    """
    terms = []
    for a in sorted(subsets):
        levels = subsets[a]
        if not levels:
            return None
        if len(levels) == level_counts[a]:
            continue
        terms.append((a, tuple(sorted(int(v) for v in levels))))
    return Condition(tuple(terms))


@dataclass(frozen=True)
class Rule:
    id: int
    condition: Condition
    ypred: int


@dataclass(frozen=True)
class RuleMetrics:
    """Per-rule quality numbers computed against one dataset."""

    confidence: float
    coverage: float
    class_coverage: float
    att_nbr: int
    lev_nbr: int
    att_nbr_s: float
    lev_nbr_s: float
    attributes: tuple[int, ...]


@dataclass
class CoverageMatrices:
    """Instance-by-rule coverage, split by agreement with the true class."""

    cov_ok: np.ndarray
    cov_nok: np.ndarray

    def __post_init__(self):
        ok = np.asarray(self.cov_ok, dtype=bool)
        nok = np.asarray(self.cov_nok, dtype=bool)
        if ok.shape != nok.shape or ok.ndim != 2:
            raise ValueError("cov_ok and cov_nok must share a 2-d shape")
        if np.any(ok & nok):
            raise ValueError("cov_ok and cov_nok overlap")
        self.cov_ok = ok
        self.cov_nok = nok

    @property
    def cover(self) -> np.ndarray:
        return self.cov_ok | self.cov_nok

    @property
    def n(self) -> int:
        return self.cov_ok.shape[0]

    @property
    def m(self) -> int:
        return self.cov_ok.shape[1]

    def select_columns(self, cols) -> "CoverageMatrices":
        idx = np.asarray(cols, dtype=np.int64)
        return CoverageMatrices(self.cov_ok[:, idx].copy(), self.cov_nok[:, idx].copy())


def extract_rules(forest: Forest) -> list[Rule]:
    """One rule per leaf of every tree, ids sequential from 1.

    Left edges constrain the attribute to the split subset, right edges to
    the vocabulary minus the subset, and constraints along a path intersect.
    Paths whose intersection empties (impossible conditions) are dropped.
    """
    level_counts = tuple(len(levels) for _, levels in forest.attributes)
    vocabs = [set(range(k)) for k in level_counts]
    rules: list[Rule] = []
    next_id = 1

    for tree in forest.trees:
        stack = [(tree.root, {})]
        while stack:
            node_i, subsets = stack.pop()
            node = tree.nodes[node_i]
            if isinstance(node, Leaf):
                cond = make_condition(subsets, level_counts)
                if cond is not None:
                    rules.append(Rule(next_id, cond, node.class_index))
                    next_id += 1
                continue
            a = node.attribute
            left_set = set(node.left_levels)
            cur = subsets.get(a, vocabs[a])
            left_sub = dict(subsets)
            left_sub[a] = cur & left_set
            right_sub = dict(subsets)
            right_sub[a] = cur - left_set
            stack.append((node.right, right_sub))
            stack.append((node.left, left_sub))
    return rules


def evaluate_rule(rule: Rule, ds: Dataset) -> RuleMetrics:
    """Confidence, coverage, and size metrics of one rule on ``ds``."""
    mask = rule.condition.covers(ds)
    ncov = int(mask.sum())
    hits = int((mask & (ds.labels == rule.ypred)).sum())
    n_class = int((ds.labels == rule.ypred).sum())
    if n_class == 0:
        warnings.warn(
            f"rule {rule.id}: predicted class {rule.ypred} absent from the dataset"
        )
        class_coverage = 0.0
    else:
        class_coverage = ncov / n_class
    return RuleMetrics(
        confidence=hits / ncov if ncov else 0.0,
        coverage=ncov / ds.n,
        class_coverage=class_coverage,
        att_nbr=rule.condition.att_nbr,
        lev_nbr=rule.condition.lev_nbr,
        att_nbr_s=rule.condition.att_nbr / ds.p,
        lev_nbr_s=rule.condition.lev_nbr / ds.total_levels,
        attributes=rule.condition.attribute_indices,
    )


def build_coverage(rules: list[Rule], ds: Dataset) -> CoverageMatrices:
    """cov_ok[i, j]: rule j covers instance i and predicts its class."""
    ok = np.zeros((ds.n, len(rules)), dtype=bool)
    nok = np.zeros((ds.n, len(rules)), dtype=bool)
    for j, rule in enumerate(rules):
        mask = rule.condition.covers(ds)
        agree = ds.labels == rule.ypred
        ok[:, j] = mask & agree
        nok[:, j] = mask & ~agree
    return CoverageMatrices(ok, nok)


def jaccard_similarity(a, b) -> float:
    """|A & B| / |A | B| over instance sets or boolean masks; empty vs empty is 1."""
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        a = np.asarray(a, dtype=bool)
        b = np.asarray(b, dtype=bool)
        if a.shape != b.shape:
            raise ValueError("masks must share a shape")
        union = int(np.sum(a | b))
        if union == 0:
            return 1.0
        return float(np.sum(a & b) / union)
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def pairwise_jaccard(cover: np.ndarray) -> np.ndarray:
    """Jaccard similarity matrix between the columns of a boolean matrix."""
    c = np.asarray(cover, dtype=bool)
    inter = c.T.astype(np.int64) @ c.astype(np.int64)
    sizes = np.diag(inter)
    union = sizes[:, None] + sizes[None, :] - inter
    with np.errstate(invalid="ignore"):
        sim = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return sim


def render_condition(cond: Condition, ds: Dataset) -> str:
    """Printable form like ``X[,1] in {A1,A3} & X[,2] in {B1,B3}``."""
    parts = []
    for a, levels in cond.terms:
        names = ",".join(ds.levels(a)[v] for v in levels)
        parts.append(f"X[,{a + 1}] in {{{names}}}")
    return " & ".join(parts)


_TERM_RE = re.compile(r"^X\[,(\d+)\] in \{(.*)\}$")


def _match_levels(text: str, vocab: tuple[str, ...]) -> list[int]:
    # Level names may themselves contain commas (interval labels), so pieces
    # are greedily re-joined until they hit a known level.
    index = {name: i for i, name in enumerate(vocab)}
    out = []
    buf = None
    for piece in text.split(","):
        buf = piece if buf is None else buf + "," + piece
        if buf in index:
            out.append(index[buf])
            buf = None
    if buf is not None:
        raise ValueError(f"unknown level text {buf!r}")
    return out


def parse_condition(text: str, ds: Dataset) -> Condition:
    """Inverse of render_condition for the same dataset schema."""
    text = text.strip()
    if not text:
        return Condition(())
    subsets: dict[int, set[int]] = {}
    for part in text.split(" & "):
        m = _TERM_RE.match(part.strip())
        if m is None:
            raise ValueError(f"cannot parse condition term {part!r}")
        a = int(m.group(1)) - 1
        if not 0 <= a < ds.p:
            raise ValueError(f"attribute index out of range in {part!r}")
        if a in subsets:
            raise ValueError(f"duplicate attribute in condition {text!r}")
        subsets[a] = set(_match_levels(m.group(2), ds.levels(a)))
    cond = make_condition(subsets, ds.level_counts)
    if cond is None:
        raise ValueError(f"condition {text!r} is unsatisfiable")
    return cond


RULES_CSV_HEADER = ["id", "Conf.", "Cov.", "Att. nbr", "Lev. nbr",
                    "Att. nbr_S", "Lev. nbr_S", "Att.", "Ypred", "Condition"]


def rules_to_csv(rules: list[Rule], metrics: list[RuleMetrics], ds: Dataset, path) -> None:
    """Write rules plus metrics in the standard rule-table layout."""
    if len(rules) != len(metrics):
        raise ValueError("rules and metrics lengths differ")
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RULES_CSV_HEADER)
        for rule, m in zip(rules, metrics):
            att = ",".join(f"V{a + 1}" for a in rule.condition.attribute_indices)
            writer.writerow([
                rule.id,
                repr(float(m.confidence)),
                repr(float(m.coverage)),
                m.att_nbr,
                m.lev_nbr,
                repr(float(m.att_nbr_s)),
                repr(float(m.lev_nbr_s)),
                att,
                ds.class_levels[rule.ypred],
                render_condition(rule.condition, ds),
            ])


def rules_from_csv(path, ds: Dataset) -> list[Rule]:
    """Read back rule ids, conditions, and predicted classes."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RULES_CSV_HEADER:
            raise ValueError(f"{path}: unexpected rule CSV header")
        rules = []
        class_index = {name: k for k, name in enumerate(ds.class_levels)}
        for rec in reader:
            if len(rec) != len(RULES_CSV_HEADER):
                raise ValueError(f"{path}: ragged rule row {rec!r}")
            ypred = rec[8]
            if ypred not in class_index:
                raise ValueError(f"{path}: unknown class level {ypred!r}")
            rules.append(Rule(int(rec[0]), parse_condition(rec[9], ds), class_index[ypred]))
    return rules
