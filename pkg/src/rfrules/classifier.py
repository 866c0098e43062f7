"""Turn a rule set into a classifier and score it.

Two reading modes: an unordered decision set (covering rules vote, ties
break toward the most confident covering rule) and an ordered list (first
matching rule wins).  Either way instances no rule covers fall back to a
default class learned from the uncovered training residue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .rules import Rule, RuleMetrics


@dataclass
class RuleClassifier:
    rules: list[Rule]
    confidences: tuple[float, ...]
    default: int
    n_classes: int
    mode: str = "decision_set"  # or "ordered_list"

    def __post_init__(self):
        if self.mode not in ("decision_set", "ordered_list"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.confidences) != len(self.rules):
            raise ValueError("confidences length does not match rules")


def default_class(rules: list[Rule], train: Dataset) -> int:
    """Majority class of training instances no rule covers.

    Falls back to the global majority when everything is covered; class
    index order breaks ties either way.
    """
    covered = np.zeros(train.n, dtype=bool)
    for rule in rules:
        covered |= rule.condition.covers(train)
    residue = train.labels[~covered]
    pool = residue if residue.size else train.labels
    return int(np.argmax(np.bincount(pool, minlength=train.n_classes)))


def build_classifier(rules: list[Rule], metrics: list[RuleMetrics], train: Dataset) -> RuleClassifier:
    """Decision-set classifier with the default learned from ``train``."""
    return RuleClassifier(
        rules=list(rules),
        confidences=tuple(m.confidence for m in metrics),
        default=default_class(rules, train),
        n_classes=train.n_classes,
    )


def predict(clf: RuleClassifier, ds: Dataset):
    """Predict ``ds``; returns (labels, covered mask).

    Decision set: plurality vote of covering rules, ties broken by the
    highest single covering-rule confidence, then the lowest rule id.
    Ordered list: first covering rule in list order wins.
    """
    covers = [rule.condition.covers(ds) for rule in clf.rules]
    covered = np.zeros(ds.n, dtype=bool)
    for mask in covers:
        covered |= mask
    pred = np.full(ds.n, clf.default, dtype=np.int64)

    if clf.mode == "ordered_list":
        assigned = np.zeros(ds.n, dtype=bool)
        for rule, mask in zip(clf.rules, covers):
            take = mask & ~assigned
            pred[take] = rule.ypred
            assigned |= take
        return pred, covered

    votes = np.zeros((ds.n, clf.n_classes), dtype=np.int64)
    for rule, mask in zip(clf.rules, covers):
        votes[mask, rule.ypred] += 1
    top = votes.max(axis=1)
    for i in np.flatnonzero(covered):
        tied = np.flatnonzero(votes[i] == top[i])
        if len(tied) == 1:
            pred[i] = tied[0]
            continue
        best = None
        for rule, conf, mask in zip(clf.rules, clf.confidences, covers):
            if mask[i] and rule.ypred in tied:
                key = (-conf, rule.id)
                if best is None or key < best[0]:
                    best = (key, rule.ypred)
        pred[i] = best[1]
    return pred, covered


def predict_instance(clf: RuleClassifier, ds: Dataset, i: int) -> int:
    """Class index for a single row of ``ds``."""
    pred, _ = predict(clf, ds.subset([i]))
    return int(pred[0])


def build_ordered_list(rules: list[Rule], metrics: list[RuleMetrics], train: Dataset) -> RuleClassifier:
    """Greedy sequential cover: order rules by error on what is left.

    At each step the rule with the lowest error rate on still-uncovered
    training instances wins; ties prefer the higher fresh-coverage fraction,
    then the lower id.  Rules covering nothing new are skipped, and the
    default class comes from the final uncovered residue.
    """
    remaining = np.ones(train.n, dtype=bool)
    covers = {r.id: r.condition.covers(train) for r in rules}
    by_id = {r.id: (r, m) for r, m in zip(rules, metrics)}
    order: list[int] = []
    pool = [r.id for r in rules]

    while pool and remaining.any():
        scored = []
        for rid in pool:
            fresh = covers[rid] & remaining
            k = int(fresh.sum())
            if k == 0:
                continue
            rule, _ = by_id[rid]
            err = float((train.labels[fresh] != rule.ypred).mean())
            freq = k / train.n
            scored.append((err, -freq, rid))
        if not scored:
            break
        err, _, rid = min(scored)
        order.append(rid)
        pool.remove(rid)
        remaining &= ~covers[rid]

    chosen = [by_id[rid][0] for rid in order]
    confs = tuple(by_id[rid][1].confidence for rid in order)
    residue = train.labels[remaining]
    fallback_pool = residue if residue.size else train.labels
    default = int(np.argmax(np.bincount(fallback_pool, minlength=train.n_classes)))
    return RuleClassifier(
        rules=chosen,
        confidences=confs,
        default=default,
        n_classes=train.n_classes,
        mode="ordered_list",
    )


def confusion_matrix(pred, truth, n_classes: int) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth lengths differ")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (truth, pred), 1)
    return cm


def macro_precision_recall(cm: np.ndarray):
    """Unweighted class means; classes with an empty denominator drop out."""
    pred_totals = cm.sum(axis=0)
    true_totals = cm.sum(axis=1)
    diag = np.diag(cm)
    precisions = [diag[k] / pred_totals[k] for k in range(len(cm)) if pred_totals[k] > 0]
    recalls = [diag[k] / true_totals[k] for k in range(len(cm)) if true_totals[k] > 0]
    precision = float(np.mean(precisions)) if precisions else 0.0
    recall = float(np.mean(recalls)) if recalls else 0.0
    return precision, recall


def cohen_kappa(cm: np.ndarray) -> float:
    """Observed vs chance agreement; degenerate full agreement counts as 1."""
    n = cm.sum()
    if n == 0:
        raise ValueError("empty confusion matrix")
    p_o = np.trace(cm) / n
    p_e = float((cm.sum(axis=0) / n) @ (cm.sum(axis=1) / n))
    if p_e >= 1.0 - 1e-15:
        return 1.0
    return float((p_o - p_e) / (1.0 - p_e))


@dataclass
class EvaluationReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    kappa: float
    coverage: float
    covered_accuracy: float | None
    covered_macro_precision: float | None
    covered_macro_recall: float | None
    covered_kappa: float | None
    fidelity_all: float | None = None
    fidelity_covered: float | None = None
    fidelity_uncovered: float | None = None
    rules_per_class: float | None = None
    atts_per_rule: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def evaluate(pred, truth, covered, n_classes: int) -> EvaluationReport:
    """Accuracy, macro precision/recall, and kappa, overall and on covered."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    covered = np.asarray(covered, dtype=bool)
    if not (pred.shape == truth.shape == covered.shape):
        raise ValueError("pred, truth, and covered must share a shape")
    if pred.size == 0:
        raise ValueError("nothing to evaluate")

    cm = confusion_matrix(pred, truth, n_classes)
    precision, recall = macro_precision_recall(cm)
    report = EvaluationReport(
        accuracy=float((pred == truth).mean()),
        macro_precision=precision,
        macro_recall=recall,
        kappa=cohen_kappa(cm),
        coverage=float(covered.mean()),
        covered_accuracy=None,
        covered_macro_precision=None,
        covered_macro_recall=None,
        covered_kappa=None,
    )
    if covered.any():
        sub = confusion_matrix(pred[covered], truth[covered], n_classes)
        p, r = macro_precision_recall(sub)
        report.covered_accuracy = float((pred[covered] == truth[covered]).mean())
        report.covered_macro_precision = p
        report.covered_macro_recall = r
        report.covered_kappa = cohen_kappa(sub)
    return report


def fidelity(pred, rf_pred, truth, covered) -> dict:
    """Agreement with the forest on all/covered/uncovered instances.

    Each cell is further split by whether the forest itself was right;
    empty denominators yield None.
    """
    pred = np.asarray(pred, dtype=np.int64)
    rf_pred = np.asarray(rf_pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    covered = np.asarray(covered, dtype=bool)

    def rate(mask: np.ndarray):
        if not mask.any():
            return None
        return float((pred[mask] == rf_pred[mask]).mean())

    rf_ok = rf_pred == truth
    out = {}
    for name, mask in (("all", np.ones(len(pred), dtype=bool)),
                       ("covered", covered),
                       ("uncovered", ~covered)):
        out[name] = {
            "all": rate(mask),
            "rf_correct": rate(mask & rf_ok),
            "rf_incorrect": rate(mask & ~rf_ok),
        }
    return out


def complexity(rules: list[Rule], n_classes: int):
    """(rules per class, mean attributes per rule)."""
    if n_classes < 1:
        raise ValueError("need at least one class")
    if not rules:
        return 0.0, 0.0
    atts = float(np.mean([r.condition.att_nbr for r in rules]))
    return len(rules) / n_classes, atts
