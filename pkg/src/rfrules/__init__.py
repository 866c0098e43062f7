"""Interpretable rule ensembles distilled from random forests.

The pipeline has four stages: extract one rule per root-to-leaf path,
preselect high-quality mutually-dissimilar rules, solve a constrained
selection model for a small ensemble that still covers the data, and
enrich the survivors with complementary rules mined from coverage overlap.
"""

from .dataset import (Dataset, generate_xor, load_csv, load_csv_like,
                      quantile_discretize, save_csv, stratified_split)
from .forest import Forest, forest_error, load_forest, predict_forest, save_forest, train_forest
from .rules import (Condition, CoverageMatrices, Rule, RuleMetrics, build_coverage,
                    evaluate_rule, extract_rules, jaccard_similarity, parse_condition,
                    render_condition, rules_from_csv, rules_to_csv)
from .preselect import PreselectParams, PreselectResult, preselect
from .optimize import (SelectionParams, SelectionProblem, SelectionSolution,
                       build_problem, check_feasible, derive_indicators, export_lp,
                       objective, solve_exact, solve_heuristic)
from .enrich import (EnrichParams, EnrichedRow, Metarule, build_transactions,
                     mine_metarules, select_complementary)
from .classifier import (EvaluationReport, RuleClassifier, build_classifier,
                         build_ordered_list, cohen_kappa, complexity, confusion_matrix,
                         evaluate, fidelity, macro_precision_recall, predict)
from .pipeline import (BenchmarkReport, PipelineConfig, PipelineResult, StageError,
                       UpsetExport, export_upset, run_benchmark, run_pipeline,
                       write_benchmark)
from .seeding import derive_rng, derive_seed

__version__ = "0.1.0"

__all__ = [
    "Dataset", "generate_xor", "load_csv", "load_csv_like", "quantile_discretize",
    "save_csv", "stratified_split",
    "Forest", "train_forest", "predict_forest", "forest_error", "save_forest",
    "load_forest",
    "Condition", "Rule", "RuleMetrics", "CoverageMatrices", "extract_rules",
    "evaluate_rule", "build_coverage", "jaccard_similarity", "render_condition",
    "parse_condition", "rules_to_csv", "rules_from_csv",
    "PreselectParams", "PreselectResult", "preselect",
    "SelectionParams", "SelectionProblem", "SelectionSolution", "build_problem",
    "objective", "derive_indicators", "check_feasible", "solve_exact",
    "solve_heuristic", "export_lp",
    "EnrichParams", "Metarule", "EnrichedRow", "build_transactions", "mine_metarules",
    "select_complementary",
    "RuleClassifier", "build_classifier", "build_ordered_list", "predict",
    "confusion_matrix", "macro_precision_recall", "cohen_kappa", "EvaluationReport",
    "evaluate", "fidelity", "complexity",
    "PipelineConfig", "PipelineResult", "StageError", "run_pipeline",
    "BenchmarkReport", "run_benchmark", "write_benchmark", "UpsetExport",
    "export_upset",
    "derive_rng", "derive_seed",
]
