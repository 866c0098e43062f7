"""Command line interface.

Each stage of the pipeline is its own subcommand so intermediate artifacts
(forest JSON, rule CSVs, selection JSON, LP files) can be produced, swapped,
or inspected independently; ``run`` chains everything on one split.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .classifier import (build_classifier, build_ordered_list, evaluate, fidelity,
                         predict)
from .dataset import Dataset, generate_xor, load_csv, load_csv_like, save_csv
from .enrich import (EnrichParams, build_transactions, enriched_to_csv, mine_metarules,
                     select_complementary)
from .forest import forest_error, load_forest, predict_forest, save_forest, train_forest
from .optimize import (SelectionParams, build_problem, export_lp, solve_exact,
                       solve_heuristic)
from .pipeline import (PipelineConfig, run_benchmark, run_pipeline, write_benchmark,
                       export_upset)
from .preselect import PreselectParams, preselect
from .rules import (build_coverage, evaluate_rule, extract_rules, rules_from_csv,
                    rules_to_csv)


def _add_data_args(parser, name="--data"):
    parser.add_argument(name, required=True, help="CSV file with a header row")
    parser.add_argument("--target", default="last",
                        help="class column name (default: last column)")


def _add_preselect_args(parser):
    d = PreselectParams()
    parser.add_argument("--min-conf", type=float, default=d.min_conf)
    parser.add_argument("--min-class-cov", type=float, default=d.min_class_cov)
    parser.add_argument("--max-len", type=int, default=d.max_len)
    parser.add_argument("--max-simil", type=float, default=d.max_simil)


def _add_selection_args(parser):
    d = SelectionParams()
    parser.add_argument("--w0", type=float, default=d.w0)
    parser.add_argument("--w1", type=float, default=d.w1)
    parser.add_argument("--w2", type=float, default=d.w2)
    parser.add_argument("--w3", type=float, default=d.w3)
    parser.add_argument("--maxcover", type=int, default=d.maxcover)
    parser.add_argument("--maxoverlap", type=float, default=d.maxoverlap)
    parser.add_argument("--alpha", type=float, default=d.alpha)
    parser.add_argument("--beta", type=float, default=d.beta)


def _selection_params(args) -> SelectionParams:
    return SelectionParams(args.w0, args.w1, args.w2, args.w3,
                           args.maxcover, args.maxoverlap, args.alpha, args.beta)


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_ini(args.config) if args.config else PipelineConfig()
    for item in args.set or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        try:
            cfg.set_option(key, value)
        except AttributeError:
            raise SystemExit(f"unknown option {key!r}") from None
    return cfg


def _rules_with_metrics(path, train):
    rules = rules_from_csv(path, train)
    metrics = [evaluate_rule(r, train) for r in rules]
    return rules, metrics


def _init_error(args, train) -> float:
    if args.init_error is not None:
        return args.init_error
    if args.forest:
        return forest_error(load_forest(args.forest), train)
    raise SystemExit("give --init-error or --forest to fix the error budget baseline")


def cmd_gen_xor(args) -> int:
    ds = generate_xor(seed=args.seed, n=args.n)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows x {ds.p + 1} columns to {args.out}")
    return 0


def cmd_fit(args) -> int:
    train = load_csv(args.data, args.target)
    forest = train_forest(train, n_trees=args.trees, mtry=args.mtry,
                          seed=args.seed, min_leaf=args.min_leaf)
    save_forest(forest, args.out)
    err = forest_error(forest, train)
    print(f"trained {forest.n_trees} trees on {train.n} rows; "
          f"train error {err:.4f}; saved to {args.out}")
    return 0


def cmd_extract(args) -> int:
    train = load_csv(args.data, args.target)
    forest = load_forest(args.forest)
    rules = extract_rules(forest)
    metrics = [evaluate_rule(r, train) for r in rules]
    rules_to_csv(rules, metrics, train, args.out)
    print(f"extracted {len(rules)} rules to {args.out}")
    return 0


def cmd_preselect(args) -> int:
    train = load_csv(args.data, args.target)
    rules, _ = _rules_with_metrics(args.rules, train)
    params = PreselectParams(args.min_conf, args.min_class_cov, args.max_len, args.max_simil)
    result = preselect(rules, train, params)
    rules_to_csv(result.kept, result.kept_metrics, train, args.out_psr)
    rules_to_csv(result.removed_similar, result.removed_metrics, train, args.out_psrs)
    if args.out_cov:
        np.savez_compressed(args.out_cov, cov_ok=result.coverage.cov_ok,
                            cov_nok=result.coverage.cov_nok,
                            rule_ids=np.array([r.id for r in result.kept]))
    print(f"kept {len(result.kept)} rules ({args.out_psr}); "
          f"{len(result.removed_similar)} similar spares ({args.out_psrs})")
    return 0


def cmd_select(args) -> int:
    train = load_csv(args.data, args.target)
    rules, metrics = _rules_with_metrics(args.rules, train)
    coverage = build_coverage(rules, train)
    init_error = _init_error(args, train)
    problem = build_problem(metrics, coverage, init_error, _selection_params(args))
    if args.solver == "export":
        out = args.lp_out or args.out
        export_lp(problem, out)
        print(f"wrote model with {problem.m} rule variables to {out}")
        return 0
    solver = args.solver
    if solver == "auto":
        solver = "exact" if problem.m <= args.exact_max_rules else "heuristic"
    if solver == "exact":
        solution = solve_exact(problem, node_limit=args.node_limit, time_limit=args.time_limit)
    else:
        solution = solve_heuristic(problem, seed=args.seed, restarts=args.restarts)
    doc = {
        "status": solution.status,
        "objective": solution.objective,
        "selected_ids": [rules[i].id for i in solution.selected_indices],
        "rule_ids": [r.id for r in rules],
        "stats": solution.stats,
        "params": vars(_selection_params(args)),
        "init_error": init_error,
    }
    Path(args.out).write_text(json.dumps(doc, indent=1, default=float))
    print(f"{solution.status}: {len(doc['selected_ids'])} rules, "
          f"objective {solution.objective:.6f} -> {args.out}")
    return 0 if solution.status in ("optimal", "feasible") else 1


def cmd_enrich(args) -> int:
    train = load_csv(args.data, args.target)
    pool, pool_metrics = _rules_with_metrics(args.psr, train)
    if args.psrs:
        spare, spare_metrics = _rules_with_metrics(args.psrs, train)
        pool, pool_metrics = pool + spare, pool_metrics + spare_metrics
    selected_ids = json.loads(Path(args.selection).read_text())["selected_ids"]
    trans = build_transactions(pool, train)
    metarules = mine_metarules(trans, selected_ids,
                               EnrichParams(args.min_support, args.min_confidence))
    rules_by_id = {r.id: r for r in pool}
    metrics_by_id = {r.id: m for r, m in zip(pool, pool_metrics)}
    rows = select_complementary(metarules, rules_by_id, metrics_by_id, selected_ids)
    enriched_to_csv(rows, rules_by_id, metrics_by_id, train, args.out)
    extra = sum(1 for row in rows if row.rule_id != row.base_id)
    print(f"enriched {len(selected_ids)} rules with {extra} complements -> {args.out}")
    return 0


def _build_model(args, train):
    rules, metrics = _rules_with_metrics(args.rules, train)
    if args.selection:
        selected = set(json.loads(Path(args.selection).read_text())["selected_ids"])
        pairs = [(r, m) for r, m in zip(rules, metrics) if r.id in selected]
        missing = selected - {r.id for r, _ in pairs}
        if missing:
            raise SystemExit(f"selection names rule ids missing from the CSV: {sorted(missing)}")
        rules, metrics = [r for r, _ in pairs], [m for _, m in pairs]
    builder = build_ordered_list if getattr(args, "ordered", False) else build_classifier
    return builder(rules, metrics, train)


def cmd_predict(args) -> int:
    train = load_csv(args.train, args.target)
    data = load_csv_like(args.data, train) if args.data != args.train else train
    if args.forest:
        forest = load_forest(args.forest)
        pred = predict_forest(forest, data)
        covered = np.ones(data.n, dtype=bool)
    else:
        if not args.rules:
            raise SystemExit("give --forest or --rules")
        clf = _build_model(args, train)
        pred, covered = predict(clf, data)
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pred", "covered"])
        for k, c in zip(pred, covered):
            writer.writerow([train.class_levels[k], int(c)])
    print(f"predicted {data.n} rows -> {args.out} "
          f"(coverage {covered.mean():.3f})")
    return 0


def _read_pred_csv(path, ds):
    vocab = {lev: i for i, lev in enumerate(ds.class_levels)}
    pred, covered = [], []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["pred"]:
            raise ValueError(f"{path}: expected a 'pred' column first, got {header!r}")
        has_covered = len(header) > 1 and header[1] == "covered"
        for rec in reader:
            if rec[0] not in vocab:
                raise ValueError(f"{path}: unknown class level {rec[0]!r}")
            pred.append(vocab[rec[0]])
            covered.append(bool(int(rec[1])) if has_covered else True)
    return np.array(pred, dtype=np.int64), np.array(covered, dtype=bool)


def cmd_evaluate(args) -> int:
    data = load_csv(args.data, args.target)
    pred, covered = _read_pred_csv(args.pred, data)
    if len(pred) != data.n:
        raise SystemExit(f"{args.pred} has {len(pred)} rows but the data has {data.n}")
    report = evaluate(pred, data.labels, covered, data.n_classes)
    doc = report.to_dict()
    if args.rf_pred:
        rf_pred, _ = _read_pred_csv(args.rf_pred, data)
        fid = fidelity(pred, rf_pred, data.labels, covered)
        doc["fidelity_all"] = fid["all"]["all"]
        doc["fidelity_covered"] = fid["covered"]["all"]
        doc["fidelity_uncovered"] = fid["uncovered"]["all"]
        doc["fidelity_detail"] = fid
    Path(args.out).write_text(json.dumps(doc, indent=1, default=float))
    print(f"accuracy {report.accuracy:.4f}, coverage {report.coverage:.4f}, "
          f"kappa {report.kappa:.4f} -> {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    if args.data:
        cfg.data = args.data
    if args.target:
        cfg.target = args.target
    if args.out:
        cfg.outdir = args.out
    result = run_pipeline(cfg)
    sel = result.reports["selected"]
    print(f"extracted {len(result.extracted)} rules; kept {len(result.pre.kept)}; "
          f"selected {len(result.selected_rules)} "
          f"({result.solution.status}, objective {result.solution.objective:.4f})")
    print(f"test accuracy {sel['accuracy']:.4f}, coverage {sel['coverage']:.4f}; "
          f"artifacts in {cfg.outdir}")
    return 0


def cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    if args.out:
        cfg.outdir = args.out
    datasets = {}
    for path in args.data:
        name = Path(path).stem
        datasets[name] = load_csv(path, args.target)
    report = run_benchmark(cfg, datasets)
    write_benchmark(report, cfg.outdir)
    for name, methods in report.summary.items():
        for method, entry in methods.items():
            acc = entry["accuracy"]
            print(f"{name:>12s} {method:>16s}  acc {acc['mean']:.4f} +- {acc['se']:.4f}  "
                  f"({entry['rounds']} rounds)")
    print(f"tables in {cfg.outdir}")
    return 0


def cmd_export_upset(args) -> int:
    train = load_csv(args.data, args.target)
    rules, metrics = _rules_with_metrics(args.rules, train)
    if args.selection:
        selected = set(json.loads(Path(args.selection).read_text())["selected_ids"])
        rules = [r for r in rules if r.id in selected]
    export = export_upset(rules, train)
    Path(args.out).write_text(json.dumps(export.to_dict(), indent=1))
    print(f"{len(export.combinations)} rule combinations over {export.n} rows -> {args.out}")
    return 0


def cmd_export_lp(args) -> int:
    train = load_csv(args.data, args.target)
    rules, metrics = _rules_with_metrics(args.rules, train)
    coverage = build_coverage(rules, train)
    init_error = _init_error(args, train)
    problem = build_problem(metrics, coverage, init_error, _selection_params(args))
    export_lp(problem, args.out)
    print(f"wrote model with {problem.m} rule variables to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfrules",
        description="Interpretable rule ensembles distilled from random forests.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-xor", help="generate the synthetic xor dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=840)
    p.set_defaults(func=cmd_gen_xor)

    p = sub.add_parser("fit", help="train a random forest")
    _add_data_args(p)
    p.add_argument("--out", required=True, help="forest JSON path")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("extract", help="extract one rule per root-to-leaf path")
    _add_data_args(p)
    p.add_argument("--forest", required=True)
    p.add_argument("--out", required=True, help="rules CSV path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("preselect", help="filter rules and drop near-duplicates")
    _add_data_args(p)
    p.add_argument("--rules", required=True, help="extracted rules CSV")
    p.add_argument("--out-psr", required=True, help="kept rules CSV")
    p.add_argument("--out-psrs", required=True, help="similar spare rules CSV")
    p.add_argument("--out-cov", default=None, help="optional coverage NPZ sidecar")
    _add_preselect_args(p)
    p.set_defaults(func=cmd_preselect)

    p = sub.add_parser("select", help="pick the optimal rule subset")
    _add_data_args(p)
    p.add_argument("--rules", required=True, help="preselected rules CSV")
    p.add_argument("--forest", default=None, help="forest JSON for the error baseline")
    p.add_argument("--init-error", type=float, default=None,
                   help="error baseline override (skips --forest)")
    p.add_argument("--out", required=True, help="selection JSON path")
    p.add_argument("--solver", choices=("auto", "exact", "heuristic", "export"),
                   default="auto")
    p.add_argument("--lp-out", default=None, help="LP path when --solver export")
    p.add_argument("--exact-max-rules", type=int, default=20)
    p.add_argument("--node-limit", type=int, default=2_000_000)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    _add_selection_args(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("enrich", help="attach complementary metarules")
    _add_data_args(p)
    p.add_argument("--psr", required=True, help="kept rules CSV")
    p.add_argument("--psrs", default=None, help="similar spare rules CSV")
    p.add_argument("--selection", required=True, help="selection JSON")
    p.add_argument("--out", required=True, help="enriched CSV path")
    d = EnrichParams()
    p.add_argument("--min-support", type=float, default=d.min_support)
    p.add_argument("--min-confidence", type=float, default=d.min_confidence)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("predict", help="predict with a forest or a rule set")
    _add_data_args(p)
    p.add_argument("--train", required=True, help="training CSV fixing the encoding")
    p.add_argument("--forest", default=None)
    p.add_argument("--rules", default=None, help="rules CSV")
    p.add_argument("--selection", default=None, help="restrict rules to a selection JSON")
    p.add_argument("--ordered", action="store_true",
                   help="use the ordered-list classifier instead of voting")
    p.add_argument("--out", required=True, help="predictions CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a prediction file against labels")
    _add_data_args(p)
    p.add_argument("--pred", required=True, help="predictions CSV")
    p.add_argument("--rf-pred", default=None, help="forest predictions CSV for fidelity")
    p.add_argument("--out", required=True, help="report JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline on one train/test split")
    p.add_argument("--data", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config option")
    p.add_argument("--out", default=None, help="artifact directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("benchmark", help="compare methods over repeated splits")
    p.add_argument("--data", nargs="+", required=True, help="one or more CSV files")
    p.add_argument("--target", default="last")
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-upset", help="coverage combination counts as JSON")
    _add_data_args(p)
    p.add_argument("--rules", required=True)
    p.add_argument("--selection", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_upset)

    p = sub.add_parser("export-lp", help="write the selection model in LP format")
    _add_data_args(p)
    p.add_argument("--rules", required=True, help="preselected rules CSV")
    p.add_argument("--forest", default=None)
    p.add_argument("--init-error", type=float, default=None)
    p.add_argument("--out", required=True)
    _add_selection_args(p)
    p.set_defaults(func=cmd_export_lp)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
