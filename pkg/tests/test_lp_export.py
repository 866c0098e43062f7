from pathlib import Path

import numpy as np
import pytest

from conftest import brute_force_solve, feasible_problem
from rfrules.optimize import (SelectionParams, SelectionProblem,
                              check_feasible, derive_indicators, export_lp)


def small_problem():
    """Three rules over five instances; instance 4 is covered by nothing."""
    cov_ok = np.array([
        [1, 0, 0],
        [1, 0, 0],
        [0, 1, 1],
        [0, 0, 1],
        [0, 0, 0],
    ], dtype=bool)
    cov_nok = np.array([
        [0, 0, 0],
        [0, 0, 0],
        [0, 0, 0],
        [0, 1, 0],
        [0, 0, 0],
    ], dtype=bool)
    return SelectionProblem(
        confidence=np.array([1.0, 0.75, 1.0]),
        coverage=np.array([0.4, 0.4, 0.4]),
        att_ratio=np.array([0.5, 0.5, 1.0]),
        levels_ratio=np.array([0.2, 0.4, 0.6]),
        cov_ok=cov_ok,
        cov_nok=cov_nok,
        init_error=0.0,
        params=SelectionParams(maxcover=2, maxoverlap=0.5, alpha=0.1, beta=0.4),
        t_conf=0.51,
        t_cov=0.025,
    )


def _parse_terms(tokens):
    terms = {}
    sign = 1.0
    k = 0
    while k < len(tokens):
        tok = tokens[k]
        if tok in ("+", "-"):
            sign = 1.0 if tok == "+" else -1.0
            k += 1
            continue
        terms[tokens[k + 1]] = terms.get(tokens[k + 1], 0.0) + sign * float(tok)
        sign = 1.0
        k += 2
    return terms


def parse_lp(path):
    lines = Path(path).read_text().splitlines()
    comments = [l for l in lines if l.startswith("\\")]
    i_min = lines.index("Minimize")
    i_st = lines.index("Subject To")
    i_bin = lines.index("Binary")
    i_end = lines.index("End")
    obj_tokens = " ".join(lines[i_min + 1: i_st]).replace("obj:", " ").split()
    constraints = {}
    for line in lines[i_st + 1: i_bin]:
        if line.startswith("\\") or not line.strip():
            continue
        name, rest = line.strip().split(":", 1)
        toks = rest.split()
        op = next(t for t in toks if t in ("<=", ">=", "="))
        cut = toks.index(op)
        constraints[name] = (_parse_terms(toks[:cut]), op, float(toks[cut + 1]))
    names = " ".join(lines[i_bin + 1: i_end]).split()
    return comments, _parse_terms(obj_tokens), constraints, names


def lp_assignment(problem, sel):
    sel = np.asarray(sel, dtype=bool)
    ind = derive_indicators(sel, problem)
    values = {f"sel_{j}": int(sel[j]) for j in range(problem.m)}
    for i in range(problem.n):
        values[f"cov_{i}"] = int(ind.is_covered[i])
        values[f"err_{i}"] = int(ind.is_error[i])
        values[f"ovl_{i}"] = int(ind.is_overlap[i])
    return values


def violated(constraints, values, tol=1e-9):
    out = []
    for name, (terms, op, rhs) in constraints.items():
        lhs = sum(coef * values[var] for var, coef in terms.items())
        ok = lhs <= rhs + tol if op == "<=" else lhs >= rhs - tol
        if not ok:
            out.append(name)
    return out


def test_lp_layout_and_objective(tmp_path):
    problem = small_problem()
    path = export_lp(problem, tmp_path / "model.lp")
    comments, obj, constraints, names = parse_lp(path)

    assert len(comments) >= 9  # 4 header lines + 5 family banners
    assert any("preselection floors" in c for c in comments)
    assert any("maxcover=2" in c for c in comments)

    costs = problem.rule_costs()
    assert sorted(obj) == [f"sel_{j}" for j in range(problem.m)]
    for j in range(problem.m):
        assert obj[f"sel_{j}"] == pytest.approx(costs[j], abs=1e-9)

    m, n = problem.m, problem.n
    assert len(names) == m + 3 * n
    assert set(names) == ({f"sel_{j}" for j in range(m)}
                          | {f"cov_{i}" for i in range(n)}
                          | {f"err_{i}" for i in range(n)}
                          | {f"ovl_{i}" for i in range(n)})

    # instance 4 is covered by no rule: its cap line degenerates to 0 <= 2
    # and must be skipped, everything else present
    assert "cap_4" not in constraints
    for i in range(4):
        assert f"cap_{i}" in constraints
    for stem in ("errhi", "errlo", "covhi", "covlo", "ovlhi", "ovllo"):
        for i in range(n):
            assert f"{stem}_{i}" in constraints
    for name in ("acc", "covmin", "ovlbud"):
        assert name in constraints
    # no constraint line survives with zero terms
    assert all(terms for terms, _, _ in constraints.values())


def test_lp_mirrors_the_feasible_set(tmp_path):
    problem = small_problem()
    _, _, constraints, _ = parse_lp(export_lp(problem, tmp_path / "model.lp"))

    feasible_sel = np.array([True, False, True])
    assert check_feasible(feasible_sel, problem) == []
    assert violated(constraints, lp_assignment(problem, feasible_sel)) == []

    # error-budget breach shows up through the accuracy row
    bad = np.array([True, True, False])
    assert check_feasible(bad, problem)
    assert "acc" in violated(constraints, lp_assignment(problem, bad))

    # coverage-floor breach shows up through covmin
    thin = np.array([True, False, False])
    assert "covmin" in violated(constraints, lp_assignment(problem, thin))


def test_lp_agrees_with_checker_on_random_problems(tmp_path):
    rng = np.random.default_rng(31)
    for seed in range(5):
        problem = feasible_problem(200 + seed, m_max=8, n_max=25)
        _, obj, constraints, _ = parse_lp(export_lp(problem, tmp_path / f"{seed}.lp"))
        costs = problem.rule_costs()
        for j in range(problem.m):
            assert obj[f"sel_{j}"] == pytest.approx(costs[j], abs=1e-9)
        best_obj, best_sel, _ = brute_force_solve(problem)
        assert violated(constraints, lp_assignment(problem, best_sel)) == []
        assert sum(costs[np.flatnonzero(best_sel)]) == pytest.approx(best_obj)
        for _ in range(20):
            sel = rng.random(problem.m) < 0.5
            lp_bad = bool(violated(constraints, lp_assignment(problem, sel)))
            assert lp_bad == bool(check_feasible(sel, problem))
