import json

import numpy as np
import pytest

from conftest import make_dataset
from rfrules.dataset import generate_xor
from rfrules.pipeline import (PhaseTimer, PipelineConfig, StageError,
                              export_upset, run_benchmark, run_pipeline,
                              write_benchmark)
from rfrules.rules import Condition, Rule, rules_from_csv


def fast_config(**overrides) -> PipelineConfig:
    base = dict(seed=0, n_trees=24, solver="heuristic", restarts=2, splits=1)
    base.update(overrides)
    return PipelineConfig(**base)


def coin_flip_dataset():
    """One attribute, every level split 50/50: no rule can clear min_conf."""
    rows = [["l0"]] * 4 + [["l1"]] * 4 + [["l2"]] * 4
    labels = ["c0", "c0", "c1", "c1"] * 3
    return make_dataset([("A", ("l0", "l1", "l2"))], ("c0", "c1"), rows, labels)


# -------------------------------------------------------------------- config

def test_config_defaults_validate():
    cfg = PipelineConfig()
    cfg.validate()
    assert cfg.solver == "auto" and cfg.exact_max_rules == 20
    assert cfg.splits == 10 and cfg.train_ratio == 0.7 and cfg.outdir == "out"


@pytest.mark.parametrize("key,value,msg", [
    ("n_trees", 0, "n_trees"),
    ("min_leaf", 0, "min_leaf"),
    ("mtry", 0, "mtry"),
    ("solver", "cplex", "solver"),
    ("exact_max_rules", -1, "exact_max_rules"),
    ("node_limit", 0, "node_limit"),
    ("time_limit", 0.0, "time_limit"),
    ("restarts", 0, "restarts"),
    ("splits", 0, "splits"),
    ("train_ratio", 1.0, "train_ratio"),
    ("max_simil", 0.0, "max_simil"),
    ("maxoverlap", 1.5, "maxoverlap"),
])
def test_config_validation_errors(key, value, msg):
    cfg = PipelineConfig(**{key: value})
    with pytest.raises(ValueError, match=msg):
        cfg.validate()


def test_config_from_ini(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\n"
        "seed = 7\n"
        "\n"
        "mtry = none  # auto-sized candidate draw\n"
        "max_simil = 0.9\n"
        "n_trees=40\n"
        "solver = heuristic\n"
        "outdir = results/xor\n"
    )
    cfg = PipelineConfig.from_ini(path)
    assert cfg.seed == 7 and cfg.mtry is None and cfg.n_trees == 40
    assert cfg.max_simil == 0.9 and cfg.solver == "heuristic"
    assert cfg.outdir == "results/xor"


def test_config_from_ini_rejects_bad_lines(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("seed = 1\nnot a setting\n")
    with pytest.raises(ValueError, match=rf"{path}:2: expected key = value"):
        PipelineConfig.from_ini(path)
    path.write_text("budget = 3\n")
    with pytest.raises(ValueError, match="unknown option 'budget'"):
        PipelineConfig.from_ini(path)


def test_set_option_coercions():
    cfg = PipelineConfig()
    cfg.set_option("mtry", "none")
    assert cfg.mtry is None
    cfg.set_option("mtry", "5")
    assert cfg.mtry == 5
    cfg.set_option("mtry", "AUTO")
    assert cfg.mtry is None
    cfg.set_option("n_trees", "17")
    assert cfg.n_trees == 17
    cfg.set_option("alpha", "0.2")
    assert cfg.alpha == 0.2
    cfg.set_option("data", "a.csv")
    assert cfg.data == "a.csv"


# -------------------------------------------------------------- stage errors

def test_phase_timer_wraps_and_passes_through():
    timer = PhaseTimer()
    with pytest.raises(StageError, match="stage 'boom' failed: 'bad key'"):
        with timer.phase("boom"):
            raise KeyError("bad key")
    inner = StageError("inner", ValueError("x"))
    with pytest.raises(StageError) as info:
        with timer.phase("outer"):
            raise inner
    assert info.value is inner  # no double wrapping
    assert set(timer.phases) == {"boom", "outer"}


def test_pipeline_stage_error_names_preselection():
    ds = coin_flip_dataset()
    with pytest.raises(StageError, match="stage 'preselect_rules' failed") as info:
        run_pipeline(fast_config(n_trees=8), train=ds, test=ds, write=False)
    assert info.value.stage == "preselect_rules"


def test_pipeline_train_without_test():
    ds = coin_flip_dataset()
    with pytest.raises(ValueError, match="got train without test"):
        run_pipeline(fast_config(), train=ds, write=False)


def test_pipeline_rejects_invalid_config():
    with pytest.raises(ValueError, match="n_trees"):
        run_pipeline(fast_config(n_trees=0), data=coin_flip_dataset(), write=False)


def test_pipeline_needs_some_dataset():
    # raised inside the load_data phase, so it surfaces as a stage failure
    with pytest.raises(StageError, match="no dataset given"):
        run_pipeline(fast_config(), write=False)


# ----------------------------------------------------------------- artifacts

ARTIFACTS = ("forest.json", "psr.csv", "psrs.csv", "psr_cov.npz",
             "selection.json", "enriched.csv", "evaluation.json", "timing.json")


@pytest.fixture(scope="module")
def xor_run(tmp_path_factory, xor840):
    outdir = tmp_path_factory.mktemp("artifacts")
    config = fast_config(outdir=str(outdir))
    result = run_pipeline(config, data=xor840, round_index=0, write=True)
    return config, result, outdir


def test_artifact_files_written(xor_run):
    _, _, outdir = xor_run
    for name in ARTIFACTS:
        assert (outdir / name).exists(), name


def test_artifact_contents_are_consistent(xor_run):
    _, result, outdir = xor_run
    doc = json.loads((outdir / "selection.json").read_text())
    assert doc["status"] in ("optimal", "feasible")
    assert doc["selected_ids"] == [r.id for r in result.selected_rules]
    assert doc["rule_ids"] == [r.id for r in result.pre.kept]
    assert doc["objective"] == pytest.approx(result.solution.objective)
    assert set(doc["params"]) == {"w0", "w1", "w2", "w3", "maxcover",
                                  "maxoverlap", "alpha", "beta"}
    assert 0.0 <= doc["init_error"] <= 1.0

    parsed = rules_from_csv(outdir / "psr.csv", result.train)
    assert [r.id for r in parsed] == doc["rule_ids"]
    assert [r.condition for r in parsed] == [r.condition for r in result.pre.kept]

    npz = np.load(outdir / "psr_cov.npz")
    assert npz["cov_ok"].shape == (result.train.n, len(result.pre.kept))
    assert npz["rule_ids"].tolist() == doc["rule_ids"]
    assert np.array_equal(npz["cov_ok"], result.pre.coverage.cov_ok)
    assert np.array_equal(npz["cov_nok"], result.pre.coverage.cov_nok)

    ev = json.loads((outdir / "evaluation.json").read_text())
    assert set(ev["reports"]) == {"rf", "selected", "selected_ordered", "preselected"}
    assert ev["reports"]["rf"]["total_rules"] == len(result.extracted)


def test_reports_structure(xor_run):
    _, result, _ = xor_run
    for name in ("selected", "selected_ordered", "preselected"):
        rep = result.reports[name]
        for key in ("accuracy", "coverage", "kappa", "fidelity_all",
                    "fidelity_covered", "fidelity_uncovered",
                    "rules_per_class", "atts_per_rule", "total_rules"):
            assert key in rep, (name, key)
    assert result.reports["selected"]["total_rules"] == len(result.selected_rules)
    assert result.reports["preselected"]["total_rules"] == len(result.pre.kept)


def test_timing_breakdown(xor_run):
    _, result, outdir = xor_run
    timing = json.loads((outdir / "timing.json").read_text())
    for phase in ("load_data", "split_data", "train_forest", "extract_rules",
                  "preselect_rules", "prepare_opt_inputs", "build_opt_model",
                  "run_opt_model", "enrich_rules", "evaluate", "write_artifacts"):
        assert phase in timing["phases"], phase
    spent = sum(timing["phases"].values())
    assert spent <= timing["total"] + 1e-9
    assert timing["total"] - spent < 0.05 * timing["total"] + 0.05
    assert timing == result.timing or timing["phases"].keys() == result.timing["phases"].keys()


def test_rerun_is_deterministic(xor_run, tmp_path, xor840):
    config, result, outdir = xor_run
    again = fast_config(outdir=str(tmp_path / "again"))
    res2 = run_pipeline(again, data=xor840, round_index=0, write=True)
    for name in ("forest.json", "psr.csv", "psrs.csv", "enriched.csv",
                 "evaluation.json"):
        assert (outdir / name).read_bytes() == (tmp_path / "again" / name).read_bytes(), name
    # selection.json embeds solver wall time; compare everything but that
    docs = []
    for base in (outdir, tmp_path / "again"):
        doc = json.loads((base / "selection.json").read_text())
        doc["stats"].pop("time", None)
        docs.append(doc)
    assert docs[0] == docs[1]
    assert [r.id for r in res2.selected_rules] == [r.id for r in result.selected_rules]
    npz1 = np.load(outdir / "psr_cov.npz")
    npz2 = np.load(tmp_path / "again" / "psr_cov.npz")
    for key in ("cov_ok", "cov_nok", "rule_ids"):
        assert np.array_equal(npz1[key], npz2[key])


def test_round_index_changes_the_split(xor840):
    r0 = run_pipeline(fast_config(), data=xor840, round_index=0, write=False)
    r1 = run_pipeline(fast_config(), data=xor840, round_index=1, write=False)
    assert not np.array_equal(r0.train.rows, r1.train.rows)


# ----------------------------------------------------------------- benchmark

def test_benchmark_requires_datasets():
    with pytest.raises(ValueError, match="no datasets"):
        run_benchmark(fast_config(), {})


def singleton_class_dataset():
    """A class with one instance cannot be split, so every round fails."""
    return make_dataset([("A", ("l0", "l1"))], ("c0", "c1"),
                        [["l0"], ["l1"], ["l0"], ["l1"], ["l0"]],
                        ["c0", "c0", "c0", "c0", "c1"])


def test_benchmark_single_split_and_failures(caplog):
    xor = generate_xor(seed=3, n=240)
    datasets = {"bad": singleton_class_dataset(), "xor": xor}
    with caplog.at_level("ERROR", logger="rfrules"):
        report = run_benchmark(fast_config(n_trees=12), datasets)
    assert "benchmark round failed: dataset=bad round=0" in caplog.text

    assert {row["dataset"] for row in report.rounds} == {"xor"}
    methods = {row["method"] for row in report.rounds}
    assert methods == {"rf", "selected", "selected_ordered", "preselected"}
    assert len(report.rounds) == 4  # one round, four methods
    assert "bad" not in report.summary
    entry = report.summary["xor"]["selected"]
    assert entry["rounds"] == 1
    row = next(r for r in report.rounds if r["method"] == "selected")
    assert entry["accuracy"]["mean"] == pytest.approx(row["accuracy"])
    assert entry["accuracy"]["se"] == 0.0  # single value has no spread


def test_write_benchmark_files(tmp_path):
    xor = generate_xor(seed=5, n=240)
    report = run_benchmark(fast_config(n_trees=12), {"xor": xor})
    write_benchmark(report, tmp_path)
    rounds = (tmp_path / "benchmark_rounds.csv").read_text().splitlines()
    assert rounds[0].startswith("dataset,round,method,accuracy,")
    assert len(rounds) == 1 + len(report.rounds)
    summary = (tmp_path / "benchmark_summary.csv").read_text().splitlines()
    assert "accuracy_mean" in summary[0] and "accuracy_se" in summary[0]
    assert len(summary) == 1 + 4
    doc = json.loads((tmp_path / "benchmark_summary.json").read_text())
    assert doc == report.summary or doc["xor"].keys() == report.summary["xor"].keys()


# --------------------------------------------------------------- upset export

def test_export_upset_groups_and_orders():
    ds = make_dataset([("A", ("l0", "l1", "l2"))], ("c0", "c1"),
                      [["l0"]] * 3 + [["l1"]] * 2 + [["l2"]],
                      ["c0", "c0", "c1", "c1", "c1", "c0"])
    rules = [Rule(5, Condition(((0, (0,)),)), 0),
             Rule(9, Condition(((0, (0, 1)),)), 1)]
    out = export_upset(rules, ds)
    assert out.n == ds.n
    assert sum(c["count"] for c in out.combinations) == ds.n
    by_key = {tuple(c["rules"]): c for c in out.combinations}
    assert by_key[(5, 9)]["count"] == 3
    assert by_key[(9,)]["count"] == 2
    assert by_key[()]["count"] == 1
    assert by_key[(5, 9)]["class_counts"] == {"c0": 2, "c1": 1}
    assert by_key[()]["class_counts"] == {"c0": 1}
    counts = [c["count"] for c in out.combinations]
    assert counts == sorted(counts, reverse=True)
    assert out.rules == [{"id": 5, "ypred": "c0", "cover": 3},
                         {"id": 9, "ypred": "c1", "cover": 5}]


def test_export_upset_keeps_else_bucket_on_full_coverage():
    ds = make_dataset([("A", ("l0", "l1"))], ("c0", "c1"),
                      [["l0"], ["l1"]], ["c0", "c1"])
    rules = [Rule(1, Condition(((0, (0, 1)),)), 0)]
    out = export_upset(rules, ds)
    by_key = {tuple(c["rules"]): c for c in out.combinations}
    assert by_key[()]["count"] == 0 and by_key[()]["class_counts"] == {}
    assert out.to_dict()["n"] == 2
