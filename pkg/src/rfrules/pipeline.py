"""End-to-end orchestration: forest, rules, selection, enrichment, scoring.

A single run works on one stratified split and drops its artifacts in a
directory; the benchmark repeats that over several Monte-Carlo splits and
aggregates mean and standard error per method, mirroring the usual
rule-ensemble comparison tables.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import numpy as np

from .classifier import (RuleClassifier, build_classifier, build_ordered_list,
                         complexity, evaluate, fidelity, predict)
from .dataset import Dataset, load_csv, stratified_split
from .enrich import (EnrichParams, EnrichedRow, build_transactions, enriched_to_csv,
                     mine_metarules, select_complementary)
from .forest import Forest, forest_error, predict_forest, save_forest, train_forest
from .optimize import (SelectionParams, SelectionProblem, SelectionSolution,
                       build_problem, export_lp, solve_exact, solve_heuristic)
from .preselect import PreselectParams, PreselectResult, preselect
from .rules import Rule, build_coverage, extract_rules, rules_to_csv
from .seeding import derive_seed

log = logging.getLogger("rfrules")

SOLVERS = ("auto", "exact", "heuristic")


@dataclass
class PipelineConfig:
    """Every knob of the pipeline, loadable from a key=value config file."""

    seed: int = 0
    data: str = ""
    target: str = "last"
    # forest
    n_trees: int = 100
    mtry: int | None = None
    min_leaf: int = 1
    # preselection
    min_conf: float = 0.51
    min_class_cov: float = 0.025
    max_len: int = 6
    max_simil: float = 0.95
    # selection
    w0: float = 1.0
    w1: float = 1.0
    w2: float = 0.1
    w3: float = 0.05
    maxcover: int = 3
    maxoverlap: float = 0.5
    alpha: float = 0.01
    beta: float = 0.025
    solver: str = "auto"
    exact_max_rules: int = 20
    node_limit: int = 2_000_000
    time_limit: float = 60.0
    restarts: int = 5
    # enrichment
    min_support: float = 0.025
    min_confidence: float = 0.98
    # evaluation
    splits: int = 10
    train_ratio: float = 0.7
    outdir: str = "out"

    def preselect_params(self) -> PreselectParams:
        return PreselectParams(self.min_conf, self.min_class_cov, self.max_len, self.max_simil)

    def selection_params(self) -> SelectionParams:
        return SelectionParams(self.w0, self.w1, self.w2, self.w3,
                               self.maxcover, self.maxoverlap, self.alpha, self.beta)

    def enrich_params(self) -> EnrichParams:
        return EnrichParams(self.min_support, self.min_confidence)

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be at least 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be at least 1 when given")
        self.preselect_params().validate()
        self.selection_params().validate()
        self.enrich_params().validate()
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.exact_max_rules < 0:
            raise ValueError("exact_max_rules must be non-negative")
        if self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.splits < 1:
            raise ValueError("splits must be at least 1")
        if not 0.0 < self.train_ratio < 1.0:
            raise ValueError("train_ratio must lie strictly between 0 and 1")

    @classmethod
    def from_ini(cls, path) -> "PipelineConfig":
        """Read a flat ``key = value`` file; '#' starts a comment."""
        cfg = cls()
        known = {f.name: f for f in fields(cls)}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
            cfg.set_option(key, value)
        return cfg

    def set_option(self, key: str, value: str) -> None:
        current = getattr(self, key)
        if value.lower() in ("none", "auto") and key == "mtry":
            setattr(self, key, None)
            return
        if key == "mtry":
            setattr(self, key, int(value))
            return
        if isinstance(current, bool):
            setattr(self, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(self, key, int(value))
        elif isinstance(current, float):
            setattr(self, key, float(value))
        else:
            setattr(self, key, value)


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage and the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


class PhaseTimer:
    """Wall-clock breakdown; phases are required to account for the total."""

    def __init__(self):
        self.phases: dict[str, float] = {}
        self._start = time.perf_counter()

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + time.perf_counter() - t0

    def report(self) -> dict:
        total = time.perf_counter() - self._start
        return {"total": total, "phases": dict(self.phases)}


@dataclass
class PipelineResult:
    train: Dataset
    test: Dataset
    forest: Forest
    init_error: float
    extracted: list[Rule]
    pre: PreselectResult
    problem: SelectionProblem
    solution: SelectionSolution
    selected_rules: list[Rule]
    classifier: RuleClassifier
    ordered: RuleClassifier
    enriched: list[EnrichedRow]
    reports: dict
    fidelities: dict
    timing: dict


def _solve(problem: SelectionProblem, config: PipelineConfig, seed: int) -> SelectionSolution:
    solver = config.solver
    if solver == "auto":
        solver = "exact" if problem.m <= config.exact_max_rules else "heuristic"
    if solver == "exact":
        return solve_exact(problem, node_limit=config.node_limit, time_limit=config.time_limit)
    return solve_heuristic(problem, seed=seed, restarts=config.restarts)


def run_pipeline(config: PipelineConfig, data: Dataset | None = None,
                 train: Dataset | None = None, test: Dataset | None = None,
                 round_index: int = 0, write: bool = True) -> PipelineResult:
    """One full pass on one split; optionally writes artifacts to outdir."""
    config.validate()
    timer = PhaseTimer()
    round_seed = derive_seed(config.seed, "round", round_index)

    if train is None:
        with timer.phase("load_data"):
            if data is None:
                if not config.data:
                    raise ValueError("no dataset given; set config.data or pass one in")
                data = load_csv(config.data, config.target)
        with timer.phase("split_data"):
            train, test = stratified_split(data, config.train_ratio, seed=round_seed)
    elif test is None:
        raise ValueError("got train without test")

    with timer.phase("train_forest"):
        forest = train_forest(train, n_trees=config.n_trees, mtry=config.mtry,
                              seed=round_seed, min_leaf=config.min_leaf)
    with timer.phase("extract_rules"):
        extracted = extract_rules(forest)
    with timer.phase("preselect_rules"):
        pre = preselect(extracted, train, config.preselect_params())
    with timer.phase("prepare_opt_inputs"):
        init_error = forest_error(forest, train)
        metrics = pre.kept_metrics
        coverage = pre.coverage
    with timer.phase("build_opt_model"):
        problem = build_problem(metrics, coverage, init_error, config.selection_params(),
                                t_conf=config.min_conf, t_cov=config.min_class_cov)
    with timer.phase("run_opt_model"):
        solution = _solve(problem, config, round_seed)
        if solution.status in ("infeasible", "limit"):
            raise RuntimeError(f"rule selection ended with status {solution.status!r}: "
                               f"{solution.stats}")

    selected_idx = solution.selected_indices
    selected_rules = [pre.kept[i] for i in selected_idx]
    selected_metrics = [pre.kept_metrics[i] for i in selected_idx]

    with timer.phase("enrich_rules"):
        trans = build_transactions(pre.pool, train)
        metarules = mine_metarules(trans, [r.id for r in selected_rules], config.enrich_params())
        rules_by_id = {r.id: r for r in pre.pool}
        metrics_by_id = {r.id: m for r, m in zip(pre.pool, pre.pool_metrics)}
        enriched = select_complementary(metarules, rules_by_id, metrics_by_id,
                                        [r.id for r in selected_rules])

    with timer.phase("evaluate"):
        clf = build_classifier(selected_rules, selected_metrics, train)
        ordered = build_ordered_list(selected_rules, selected_metrics, train)
        pre_clf = build_classifier(pre.kept, pre.kept_metrics, train)
        rf_test = predict_forest(forest, test)
        reports, fidelities = {}, {}
        reports["rf"] = evaluate(rf_test, test.labels, np.ones(test.n, dtype=bool),
                                 test.n_classes).to_dict()
        rfc, ratts = complexity(extracted, train.n_classes)
        reports["rf"].update(total_rules=len(extracted), rules_per_class=rfc, atts_per_rule=ratts)
        for name, model in (("selected", clf), ("selected_ordered", ordered),
                            ("preselected", pre_clf)):
            pred, covered = predict(model, test)
            rep = evaluate(pred, test.labels, covered, test.n_classes)
            fid = fidelity(pred, rf_test, test.labels, covered)
            rep.fidelity_all = fid["all"]["all"]
            rep.fidelity_covered = fid["covered"]["all"]
            rep.fidelity_uncovered = fid["uncovered"]["all"]
            rep.rules_per_class, rep.atts_per_rule = complexity(model.rules, test.n_classes)
            doc = rep.to_dict()
            doc["total_rules"] = len(model.rules)
            reports[name] = doc
            fidelities[name] = fid

    if write:
        with timer.phase("write_artifacts"):
            outdir = Path(config.outdir)
            outdir.mkdir(parents=True, exist_ok=True)
            save_forest(forest, outdir / "forest.json")
            rules_to_csv(pre.kept, pre.kept_metrics, train, outdir / "psr.csv")
            rules_to_csv(pre.removed_similar, pre.removed_metrics, train, outdir / "psrs.csv")
            np.savez_compressed(outdir / "psr_cov.npz",
                                cov_ok=pre.coverage.cov_ok, cov_nok=pre.coverage.cov_nok,
                                rule_ids=np.array([r.id for r in pre.kept]))
            (outdir / "selection.json").write_text(json.dumps({
                "status": solution.status,
                "objective": solution.objective,
                "selected_ids": [r.id for r in selected_rules],
                "rule_ids": [r.id for r in pre.kept],
                "stats": solution.stats,
                "params": asdict(config.selection_params()),
                "init_error": init_error,
            }, indent=1, default=float))
            enriched_to_csv(enriched, rules_by_id, metrics_by_id, train, outdir / "enriched.csv")
            (outdir / "evaluation.json").write_text(json.dumps({
                "reports": reports, "fidelity_detail": fidelities,
            }, indent=1, default=float))

    timing = timer.report()
    if write:
        (Path(config.outdir) / "timing.json").write_text(json.dumps(timing, indent=1))

    return PipelineResult(
        train=train, test=test, forest=forest, init_error=init_error,
        extracted=extracted, pre=pre, problem=problem, solution=solution,
        selected_rules=selected_rules, classifier=clf, ordered=ordered,
        enriched=enriched, reports=reports, fidelities=fidelities, timing=timing,
    )


_SUMMARY_METRICS = ("accuracy", "macro_precision", "macro_recall", "kappa", "coverage",
                    "fidelity_all", "fidelity_covered", "fidelity_uncovered",
                    "total_rules", "rules_per_class", "atts_per_rule")


@dataclass
class BenchmarkReport:
    rounds: list[dict]
    summary: dict

    def round_rows(self) -> list[dict]:
        return self.rounds


def run_benchmark(config: PipelineConfig, datasets: dict[str, Dataset]) -> BenchmarkReport:
    """Monte-Carlo comparison of forest vs rule ensembles on each dataset."""
    config.validate()
    if not datasets:
        raise ValueError("no datasets to benchmark")
    rounds: list[dict] = []
    for name, ds in datasets.items():
        for r in range(config.splits):
            try:
                res = run_pipeline(config, data=ds, round_index=r, write=False)
            except Exception:
                log.exception("benchmark round failed: dataset=%s round=%d", name, r)
                continue
            for method, rep in res.reports.items():
                row = {"dataset": name, "round": r, "method": method}
                for key in _SUMMARY_METRICS:
                    row[key] = rep.get(key)
                rounds.append(row)

    summary: dict = {}
    for (name, method) in sorted({(row["dataset"], row["method"]) for row in rounds}):
        rows = [row for row in rounds if row["dataset"] == name and row["method"] == method]
        entry = {"rounds": len(rows)}
        for key in _SUMMARY_METRICS:
            values = [row[key] for row in rows if row[key] is not None]
            if not values:
                entry[key] = {"mean": None, "se": None}
                continue
            arr = np.asarray(values, dtype=float)
            se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
            entry[key] = {"mean": float(arr.mean()), "se": se}
        summary.setdefault(name, {})[method] = entry
    return BenchmarkReport(rounds=rounds, summary=summary)


def write_benchmark(report: BenchmarkReport, outdir) -> None:
    """rounds CSV (one row per dataset/round/method) plus a summary table."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    round_header = ["dataset", "round", "method", *_SUMMARY_METRICS]
    with (outdir / "benchmark_rounds.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(round_header)
        for row in report.rounds:
            writer.writerow([row.get(k, "") for k in round_header])
    with (outdir / "benchmark_summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["dataset", "method", "rounds"]
        for key in _SUMMARY_METRICS:
            header += [f"{key}_mean", f"{key}_se"]
        writer.writerow(header)
        for name, methods in report.summary.items():
            for method, entry in methods.items():
                row = [name, method, entry["rounds"]]
                for key in _SUMMARY_METRICS:
                    row += [entry[key]["mean"], entry[key]["se"]]
                writer.writerow(row)
    (outdir / "benchmark_summary.json").write_text(json.dumps(report.summary, indent=1))


@dataclass
class UpsetExport:
    """Instance counts per exact combination of covering rules."""

    n: int
    rules: list[dict]
    combinations: list[dict]

    def to_dict(self) -> dict:
        return {"n": self.n, "rules": self.rules, "combinations": self.combinations}


def export_upset(rules: list[Rule], ds: Dataset) -> UpsetExport:
    """Group instances by the exact set of rules covering them.

    The empty combination (the "else" bucket) is always present, so the
    combination counts add up to the dataset size even when no instance
    escapes every rule.
    """
    cover = np.zeros((ds.n, len(rules)), dtype=bool)
    for j, rule in enumerate(rules):
        cover[:, j] = rule.condition.covers(ds)
    groups: dict[tuple, list[int]] = {(): []}
    for i in range(ds.n):
        key = tuple(int(rules[j].id) for j in np.flatnonzero(cover[i]))
        groups.setdefault(key, []).append(i)

    combos = []
    for key, members in groups.items():
        counts = np.bincount(ds.labels[members], minlength=ds.n_classes) if members else \
            np.zeros(ds.n_classes, dtype=np.int64)
        combos.append({
            "rules": list(key),
            "count": len(members),
            "class_counts": {ds.class_levels[k]: int(c) for k, c in enumerate(counts) if c > 0},
        })
    combos.sort(key=lambda c: (-c["count"], c["rules"]))
    rule_rows = [{"id": r.id, "ypred": ds.class_levels[r.ypred],
                  "cover": int(cover[:, j].sum())} for j, r in enumerate(rules)]
    return UpsetExport(n=ds.n, rules=rule_rows, combinations=combos)
