"""Preselection: shrink the raw rule pool to strong, mutually unlike rules.

Order of operations: drop exact duplicates, cap rule length, apply quality
thresholds, then collapse groups of near-identical cover sets keeping one
champion per group.  Rules removed at the similarity stage are kept aside:
they are still legitimate rules and feed metarule mining later.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .rules import (CoverageMatrices, Rule, RuleMetrics, build_coverage,
                    evaluate_rule, pairwise_jaccard)


@dataclass
class PreselectParams:
    min_conf: float = 0.51
    min_class_cov: float = 0.025
    max_len: int = 6
    max_simil: float = 0.95

    def validate(self) -> None:
        if not 0.0 <= self.min_conf <= 1.0:
            raise ValueError("min_conf must lie in [0, 1]")
        if not 0.0 <= self.min_class_cov <= 1.0:
            raise ValueError("min_class_cov must lie in [0, 1]")
        if self.max_len < 1:
            raise ValueError("max_len must be at least 1")
        if not 0.0 < self.max_simil <= 1.0:
            raise ValueError("max_simil must lie in (0, 1]")


@dataclass
class PreselectResult:
    """Kept rules (with metrics and coverage) plus the similar castoffs."""

    kept: list[Rule]
    kept_metrics: list[RuleMetrics]
    coverage: CoverageMatrices
    removed_similar: list[Rule]
    removed_metrics: list[RuleMetrics]

    @property
    def pool(self) -> list[Rule]:
        """Kept plus removed-similar rules, the metarule mining universe."""
        return self.kept + self.removed_similar

    @property
    def pool_metrics(self) -> list[RuleMetrics]:
        return self.kept_metrics + self.removed_metrics


def remove_redundant(rules: list[Rule]) -> list[Rule]:
    """Drop rules whose (condition, ypred) duplicates an earlier rule.

    The survivor of each duplicate group is the lowest id.
    """
    best: dict = {}
    for rule in rules:
        key = (rule.condition, rule.ypred)
        if key not in best or rule.id < best[key].id:
            best[key] = rule
    return sorted(best.values(), key=lambda r: r.id)


def _champion(indices, metrics) -> int:
    """Group tie-break: confidence, coverage, fewer attributes, fewer levels, id."""
    def key(i):
        m = metrics[i]
        return (-m.confidence, -m.coverage, m.att_nbr, m.lev_nbr, i)
    return min(indices, key=key)


def preselect(rules: list[Rule], train: Dataset, params: PreselectParams | None = None) -> PreselectResult:
    """Run the full preselection pipeline against the training data."""
    if params is None:
        params = PreselectParams()
    params.validate()
    if not rules:
        raise ValueError("empty preselection: no rules were supplied")

    rules = remove_redundant(rules)
    rules = [r for r in rules if r.condition.att_nbr <= params.max_len]
    if not rules:
        raise ValueError(
            f"empty preselection: no rule has at most max_len={params.max_len} attributes"
        )

    metrics = [evaluate_rule(r, train) for r in rules]
    pass_conf = [m.confidence >= params.min_conf for m in metrics]
    pass_ccov = [m.class_coverage >= params.min_class_cov for m in metrics]
    keep = [c and v for c, v in zip(pass_conf, pass_ccov)]
    if not any(keep):
        binding = []
        if not any(pass_conf):
            binding.append(f"min_conf={params.min_conf}")
        if not any(pass_ccov):
            binding.append(f"min_class_cov={params.min_class_cov}")
        if not binding:
            binding.append(f"min_conf={params.min_conf} combined with min_class_cov={params.min_class_cov}")
        raise ValueError("empty preselection: every rule fails " + " and ".join(binding))
    rules = [r for r, k in zip(rules, keep) if k]
    metrics = [m for m, k in zip(metrics, keep) if k]

    cov = build_coverage(rules, train)
    sim = pairwise_jaccard(cov.cover)
    removed = np.zeros(len(rules), dtype=bool)
    dropped_at_simil: list[int] = []
    # Row scan in ascending id order; rules already dropped neither anchor a
    # group nor get re-considered inside later groups.
    for i in range(len(rules)):
        if removed[i]:
            continue
        group = [j for j in range(len(rules)) if not removed[j] and sim[i, j] >= params.max_simil]
        if len(group) <= 1:
            continue
        winner = _champion(group, metrics)
        for j in group:
            if j != winner:
                removed[j] = True
                dropped_at_simil.append(j)

    kept_idx = [i for i in range(len(rules)) if not removed[i]]
    dropped_at_simil.sort()
    return PreselectResult(
        kept=[rules[i] for i in kept_idx],
        kept_metrics=[metrics[i] for i in kept_idx],
        coverage=cov.select_columns(kept_idx),
        removed_similar=[rules[i] for i in dropped_at_simil],
        removed_metrics=[metrics[i] for i in dropped_at_simil],
    )
