"""Metarule mining: find rules that habitually co-fire with selected rules.

Each training instance becomes a transaction holding the ids of every
pool rule covering it.  Association pairs antecedent -> consequent are
scored only toward selected consequents; a high-confidence pair whose
antecedent brings in new attributes is a complementary description of the
same instances, worth reporting next to the selected rule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .rules import Rule, RuleMetrics, render_condition


@dataclass
class EnrichParams:
    min_support: float = 0.025
    min_confidence: float = 0.98

    def validate(self) -> None:
        if not 0.0 < self.min_support <= 1.0:
            raise ValueError("min_support must lie in (0, 1]")
        if not 0.0 < self.min_confidence <= 1.0:
            raise ValueError("min_confidence must lie in (0, 1]")


@dataclass
class MetaTransactions:
    """Instance-by-rule cover matrix with the owning rule ids."""

    rule_ids: tuple[int, ...]
    cover: np.ndarray

    def __post_init__(self):
        self.cover = np.asarray(self.cover, dtype=bool)
        if self.cover.ndim != 2 or self.cover.shape[1] != len(self.rule_ids):
            raise ValueError("cover must be (n instances, n rules)")
        if len(set(self.rule_ids)) != len(self.rule_ids):
            raise ValueError("duplicate rule ids")

    @property
    def n(self) -> int:
        return self.cover.shape[0]

    def transactions(self) -> list[tuple[int, ...]]:
        """Covering rule ids per instance, the classic transaction view."""
        ids = np.asarray(self.rule_ids)
        return [tuple(int(v) for v in ids[row]) for row in self.cover]


@dataclass(frozen=True)
class Metarule:
    """Directed co-coverage pattern antecedent -> consequent (rule ids)."""

    antecedent: int
    consequent: int
    support: float
    confidence: float
    intersect: float


def build_transactions(rules: list[Rule], ds: Dataset) -> MetaTransactions:
    """Cover matrix of the rule pool over ``ds`` (correctness ignored)."""
    if not rules:
        raise ValueError("no rules to build transactions from")
    cover = np.zeros((ds.n, len(rules)), dtype=bool)
    for j, rule in enumerate(rules):
        cover[:, j] = rule.condition.covers(ds)
    return MetaTransactions(tuple(r.id for r in rules), cover)


def mine_metarules(trans: MetaTransactions, selected_ids, params: EnrichParams | None = None) -> list[Metarule]:
    """Size-two association pairs whose consequent is a selected rule.

    support    = |cov(ant) & cov(cons)| / n
    confidence = |cov(ant) & cov(cons)| / |cov(ant)|
    intersect  = |cov(ant) & cov(cons)| / |cov(cons)|
    """
    if params is None:
        params = EnrichParams()
    params.validate()
    selected = [int(s) for s in selected_ids]
    col = {rid: j for j, rid in enumerate(trans.rule_ids)}
    for s in selected:
        if s not in col:
            raise ValueError(f"selected rule {s} is not part of the transaction pool")
    sizes = trans.cover.sum(axis=0)
    out: list[Metarule] = []
    for cons in selected:
        jc = col[cons]
        if sizes[jc] == 0:
            continue
        inter = (trans.cover & trans.cover[:, jc][:, None]).sum(axis=0)
        for ant in trans.rule_ids:
            ja = col[ant]
            if ant == cons or sizes[ja] == 0:
                continue
            support = inter[ja] / trans.n
            confidence = inter[ja] / sizes[ja]
            if support >= params.min_support and confidence >= params.min_confidence:
                out.append(Metarule(
                    antecedent=ant,
                    consequent=cons,
                    support=float(support),
                    confidence=float(confidence),
                    intersect=float(inter[ja] / sizes[jc]),
                ))
    return out


@dataclass(frozen=True)
class EnrichedRow:
    base_id: int
    rule_id: int
    intersect: float


def select_complementary(metarules: list[Metarule], rules_by_id: dict[int, Rule],
                         metrics_by_id: dict[int, RuleMetrics], selected_ids) -> list[EnrichedRow]:
    """Per selected rule: its own row plus one champion per attribute set.

    Antecedents sharing the base rule's attribute set are redundant wording,
    not new information, and are dropped.  Within an attribute-set group the
    winner maximizes intersect, then rule confidence, then coverage, then
    has fewer attributes, then the lowest id.
    """
    rows: list[EnrichedRow] = []
    for base in sorted(int(s) for s in selected_ids):
        if base not in rules_by_id:
            raise ValueError(f"selected rule {base} missing from the rule pool")
        base_attrs = set(rules_by_id[base].condition.attribute_indices)
        rows.append(EnrichedRow(base_id=base, rule_id=base, intersect=1.0))

        groups: dict[frozenset, list[Metarule]] = {}
        for mr in metarules:
            if mr.consequent != base:
                continue
            attrs = frozenset(rules_by_id[mr.antecedent].condition.attribute_indices)
            if attrs == frozenset(base_attrs):
                continue
            groups.setdefault(attrs, []).append(mr)

        champions = []
        for members in groups.values():
            def key(mr: Metarule):
                m = metrics_by_id[mr.antecedent]
                return (-mr.intersect, -m.confidence, -m.coverage, m.att_nbr, mr.antecedent)
            champions.append(min(members, key=key))
        champions.sort(key=lambda mr: (-mr.intersect, mr.antecedent))
        rows.extend(EnrichedRow(base_id=base, rule_id=mr.antecedent, intersect=mr.intersect)
                    for mr in champions)
    return rows


ENRICHED_CSV_HEADER = ["ID SR", "ID Rule", "Condition", "Ypred", "Intersect",
                       "Att.", "Att. nbr", "Lev. nbr", "Conf.", "Cov."]


def enriched_to_csv(rows: list[EnrichedRow], rules_by_id: dict[int, Rule],
                    metrics_by_id: dict[int, RuleMetrics], ds: Dataset, path) -> None:
    """Write the enriched-rule table (base rows carry intersect 1.0)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ENRICHED_CSV_HEADER)
        for row in rows:
            rule = rules_by_id[row.rule_id]
            m = metrics_by_id[row.rule_id]
            writer.writerow([
                row.base_id,
                row.rule_id,
                render_condition(rule.condition, ds),
                ds.class_levels[rule.ypred],
                repr(float(row.intersect)),
                ",".join(f"V{a + 1}" for a in rule.condition.attribute_indices),
                m.att_nbr,
                m.lev_nbr,
                repr(float(m.confidence)),
                repr(float(m.coverage)),
            ])
