"""Optimal rule-subset selection as a small mixed-integer program.

Minimize the summed per-rule cost

    cost_j = 1 + w0 (1 - conf_j) + w1 (1 - cov_j) + w2 att_ratio_j + w3 levels_ratio_j

over binary selection variables, subject to per-instance limits built from
the vote score P_i = sum_j sel_j (CovOk_ij - CovNok_ij) and the cover count
C_i = sum_j sel_j (CovOk_ij + CovNok_ij):

    C_i <= maxcover                                      (cover cap)
    is_error_i  = 0  iff  P_i >= 1   (ties are errors)   (error link)
    sum_i (is_error_i - (1 - is_covered_i)) <= (init_error + alpha) sum_i is_covered_i
    is_covered_i = 1  iff  C_i >= 1                      (coverage link)
    sum_i is_covered_i >= n (1 - beta)                   (coverage floor)
    is_overlap_i = 1  iff  C_i >= 2                      (overlap link)
    sum_i is_overlap_i <= maxoverlap sum_i is_covered_i  (overlap budget)

The indicators are fully forced by the selection, so both solvers search
over selection bits only and derive the rest.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rules import CoverageMatrices, RuleMetrics
from .seeding import derive_rng

_TOL = 1e-9


@dataclass
class SelectionParams:
    w0: float = 1.0
    w1: float = 1.0
    w2: float = 0.1
    w3: float = 0.05
    maxcover: int = 3
    maxoverlap: float = 0.5
    alpha: float = 0.01
    beta: float = 0.025

    def validate(self) -> None:
        for name in ("w0", "w1", "w2", "w3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.maxcover < 1:
            raise ValueError("maxcover must be at least 1")
        if not 0.0 <= self.maxoverlap <= 1.0:
            raise ValueError("maxoverlap must lie in [0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")


@dataclass
class SelectionProblem:
    """Frozen optimization inputs for one rule pool on one training set."""

    confidence: np.ndarray
    coverage: np.ndarray
    att_ratio: np.ndarray
    levels_ratio: np.ndarray
    cov_ok: np.ndarray
    cov_nok: np.ndarray
    init_error: float
    params: SelectionParams
    t_conf: float = 0.0
    t_cov: float = 0.0

    def __post_init__(self):
        self.confidence = np.asarray(self.confidence, dtype=float)
        self.coverage = np.asarray(self.coverage, dtype=float)
        self.att_ratio = np.asarray(self.att_ratio, dtype=float)
        self.levels_ratio = np.asarray(self.levels_ratio, dtype=float)
        self.cov_ok = np.asarray(self.cov_ok, dtype=bool)
        self.cov_nok = np.asarray(self.cov_nok, dtype=bool)
        m = len(self.confidence)
        if m < 1:
            raise ValueError("need at least one candidate rule")
        for name in ("coverage", "att_ratio", "levels_ratio"):
            if len(getattr(self, name)) != m:
                raise ValueError(f"{name} length does not match confidence")
        if self.cov_ok.ndim != 2 or self.cov_ok.shape != self.cov_nok.shape:
            raise ValueError("cov_ok and cov_nok must share a 2-d shape")
        if self.cov_ok.shape[1] != m:
            raise ValueError("coverage matrices must have one column per rule")
        if np.any(self.cov_ok & self.cov_nok):
            raise ValueError("cov_ok and cov_nok overlap")
        if not 0.0 <= self.init_error <= 1.0:
            raise ValueError("init_error must lie in [0, 1]")
        self.params.validate()

    @property
    def m(self) -> int:
        return self.cov_ok.shape[1]

    @property
    def n(self) -> int:
        return self.cov_ok.shape[0]

    def rule_costs(self) -> np.ndarray:
        w = self.params
        return (1.0
                + w.w0 * (1.0 - self.confidence)
                + w.w1 * (1.0 - self.coverage)
                + w.w2 * self.att_ratio
                + w.w3 * self.levels_ratio)

    def coverage_floor(self) -> int:
        """Smallest integer count of covered instances satisfying the floor."""
        return int(math.ceil(self.n * (1.0 - self.params.beta) - _TOL))


@dataclass
class IndicatorAssignment:
    p_score: np.ndarray
    c_count: np.ndarray
    is_covered: np.ndarray
    is_error: np.ndarray
    is_overlap: np.ndarray


@dataclass(frozen=True)
class Violation:
    constraint: str
    amount: float
    message: str


@dataclass
class SelectionSolution:
    is_selected: np.ndarray
    objective: float
    status: str
    stats: dict = field(default_factory=dict)
    indicators: IndicatorAssignment | None = None

    @property
    def selected_indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_selected)


def build_problem(metrics: list[RuleMetrics], cov: CoverageMatrices, init_error: float,
                  params: SelectionParams | None = None,
                  t_conf: float = 0.0, t_cov: float = 0.0) -> SelectionProblem:
    """Assemble a SelectionProblem from rule metrics and coverage matrices."""
    if params is None:
        params = SelectionParams()
    if len(metrics) != cov.m:
        raise ValueError("metrics and coverage column counts differ")
    return SelectionProblem(
        confidence=np.array([m.confidence for m in metrics]),
        coverage=np.array([m.coverage for m in metrics]),
        att_ratio=np.array([m.att_nbr_s for m in metrics]),
        levels_ratio=np.array([m.lev_nbr_s for m in metrics]),
        cov_ok=cov.cov_ok.copy(),
        cov_nok=cov.cov_nok.copy(),
        init_error=float(init_error),
        params=params,
        t_conf=t_conf,
        t_cov=t_cov,
    )


def objective(is_selected, problem: SelectionProblem) -> float:
    sel = np.asarray(is_selected, dtype=bool)
    if sel.shape != (problem.m,):
        raise ValueError("selection length does not match the problem")
    return float(problem.rule_costs() @ sel)


def derive_indicators(is_selected, problem: SelectionProblem) -> IndicatorAssignment:
    """The unique indicator assignment forced by a selection."""
    sel = np.asarray(is_selected, dtype=bool)
    if sel.shape != (problem.m,):
        raise ValueError("selection length does not match the problem")
    ok = problem.cov_ok[:, sel].sum(axis=1).astype(np.int64)
    nok = problem.cov_nok[:, sel].sum(axis=1).astype(np.int64)
    p = ok - nok
    c = ok + nok
    return IndicatorAssignment(
        p_score=p,
        c_count=c,
        is_covered=c >= 1,
        is_error=p <= 0,
        is_overlap=c >= 2,
    )


def check_feasible(is_selected, problem: SelectionProblem) -> list[Violation]:
    """All constraint violations of a selection; empty means feasible."""
    ind = derive_indicators(is_selected, problem)
    par = problem.params
    out: list[Violation] = []

    worst = int(ind.c_count.max(initial=0))
    if worst > par.maxcover:
        out.append(Violation(
            "maxcover", float(worst - par.maxcover),
            f"an instance is covered {worst} times, cap is {par.maxcover}"))

    covered = int(ind.is_covered.sum())
    errors = int(ind.is_error.sum()) - int((~ind.is_covered).sum())
    budget = (problem.init_error + par.alpha) * covered
    if errors > budget + _TOL:
        out.append(Violation(
            "error_budget", float(errors - budget),
            f"{errors} voting errors exceed the allowed {budget:.3f}"))

    floor = problem.n * (1.0 - par.beta)
    if covered < floor - _TOL:
        out.append(Violation(
            "coverage_floor", float(floor - covered),
            f"only {covered} of {problem.n} instances covered, floor is {floor:.3f}"))

    overlaps = int(ind.is_overlap.sum())
    allowed = par.maxoverlap * covered
    if overlaps > allowed + _TOL:
        out.append(Violation(
            "overlap_budget", float(overlaps - allowed),
            f"{overlaps} overlapped instances exceed the allowed {allowed:.3f}"))
    return out


def _feasible_counts(c: np.ndarray, p: np.ndarray, problem: SelectionProblem) -> bool:
    """Feasibility from raw P/C vectors, used in solver inner loops."""
    par = problem.params
    if c.max(initial=0) > par.maxcover:
        return False
    covered = int((c >= 1).sum())
    if covered < problem.coverage_floor():
        return False
    errors = int(((c >= 1) & (p <= 0)).sum())
    if errors > (problem.init_error + par.alpha) * covered + _TOL:
        return False
    if int((c >= 2).sum()) > par.maxoverlap * covered + _TOL:
        return False
    return True


def _violation_mass(c: np.ndarray, p: np.ndarray, problem: SelectionProblem) -> float:
    par = problem.params
    mass = float(np.maximum(c - par.maxcover, 0).sum())
    covered = int((c >= 1).sum())
    errors = int(((c >= 1) & (p <= 0)).sum())
    mass += max(0.0, errors - (problem.init_error + par.alpha) * covered)
    mass += max(0.0, problem.n * (1.0 - par.beta) - covered)
    mass += max(0.0, int((c >= 2).sum()) - par.maxoverlap * covered)
    return mass


def _greedy_construct(problem: SelectionProblem, rng: np.random.Generator | None,
                      rcl: float = 0.0, sel0: np.ndarray | None = None) -> np.ndarray:
    """Grow a selection until feasible or stuck.

    While under the coverage floor, picks maximize net correctly-voted fresh
    coverage per unit cost (falling back to raw fresh coverage when nothing
    scores positive); once the floor is met, additions target error
    reduction.  With an rng and rcl > 0, each pick is uniform among
    candidates scoring within (1 - rcl) of the best, which is what
    differentiates restarts.
    """
    costs = problem.rule_costs()
    cover = (problem.cov_ok | problem.cov_nok)
    pdelta = problem.cov_ok.astype(np.int64) - problem.cov_nok.astype(np.int64)
    sel = np.zeros(problem.m, dtype=bool) if sel0 is None else sel0.copy()
    c = cover.astype(np.int64) @ sel
    p = pdelta @ sel
    floor = problem.coverage_floor()

    for _ in range(problem.m):
        if _feasible_counts(c, p, problem):
            break
        fits = ~sel & ((c[:, None] + cover) <= problem.params.maxcover).all(axis=0)
        cand = np.flatnonzero(fits)
        if cand.size == 0:
            break
        if int((c >= 1).sum()) < floor:
            uncov = (c == 0)[:, None]
            fresh_ok = (problem.cov_ok[:, cand] & uncov).sum(axis=0)
            fresh_nok = (problem.cov_nok[:, cand] & uncov).sum(axis=0)
            net = fresh_ok - fresh_nok
            if net.max() > 0:
                keep = net > 0
                scores = net[keep] / costs[cand[keep]]
            else:
                keep = (fresh_ok + fresh_nok) > 0
                if not keep.any():
                    break
                scores = (fresh_ok + fresh_nok)[keep] / costs[cand[keep]]
            cand = cand[keep]
            pool = cand[scores >= scores.max() * (1.0 - rcl)]
        else:
            # coverage floor met; additions only pay off by outvoting errors
            errors_now = int(((c >= 1) & (p <= 0)).sum())
            gains = np.empty(len(cand), dtype=np.int64)
            for k, j in enumerate(cand):
                c2 = c + cover[:, j]
                p2 = p + pdelta[:, j]
                gains[k] = errors_now - int(((c2 >= 1) & (p2 <= 0)).sum())
            if gains.max() <= 0:
                break
            pool = cand[gains >= gains.max() * (1.0 - rcl)]
        pick = int(pool[0] if rng is None or len(pool) == 1 else rng.choice(pool))
        sel[pick] = True
        c += cover[:, pick]
        p += pdelta[:, pick]
    return sel


def _local_search(problem: SelectionProblem, sel: np.ndarray) -> np.ndarray:
    """Drop-1 / swap-1-1 / add-1 descent, feasible throughout."""
    costs = problem.rule_costs()
    cover = (problem.cov_ok | problem.cov_nok).astype(np.int64)
    pdelta = problem.cov_ok.astype(np.int64) - problem.cov_nok.astype(np.int64)
    sel = sel.copy()
    c = cover @ sel
    p = pdelta @ sel

    improved = True
    while improved:
        improved = False
        inside = sorted(np.flatnonzero(sel), key=lambda i: -costs[i])
        outside = sorted(np.flatnonzero(~sel), key=lambda j: costs[j])
        for i in inside:
            if _feasible_counts(c - cover[:, i], p - pdelta[:, i], problem):
                sel[i] = False
                c -= cover[:, i]
                p -= pdelta[:, i]
                improved = True
                break
        if improved:
            continue
        for i in inside:
            swapped = False
            for j in outside:
                if costs[j] >= costs[i] - _TOL:
                    break  # outside is cost-sorted; nothing further improves
                c2 = c - cover[:, i] + cover[:, j]
                p2 = p - pdelta[:, i] + pdelta[:, j]
                if _feasible_counts(c2, p2, problem):
                    sel[i] = False
                    sel[j] = True
                    c, p = c2, p2
                    improved = swapped = True
                    break
            if swapped:
                break
        if improved:
            continue
        # add-1 cannot lower a sum of positive costs; kept for completeness
        for j in outside:
            if costs[j] < -_TOL and _feasible_counts(c + cover[:, j], p + pdelta[:, j], problem):
                sel[j] = True
                c += cover[:, j]
                p += pdelta[:, j]
                improved = True
                break
    return sel


def _construct(problem: SelectionProblem, rng: np.random.Generator | None,
               rcl: float = 0.0) -> np.ndarray:
    """Alternate greedy growth and violation-shedding repair a few times."""
    sel = None
    for _ in range(4):
        sel = _greedy_construct(problem, rng, rcl=rcl, sel0=sel)
        if not check_feasible(sel, problem):
            break
        repaired = _repair(problem, sel)
        if np.array_equal(repaired, sel):
            break
        sel = repaired
    return sel


def _repair(problem: SelectionProblem, sel: np.ndarray) -> np.ndarray:
    """Push a selection toward feasibility by violation-mass descent.

    Each step applies the drop, add, or (when no single move helps) swap
    that most reduces the total violation mass, preferring the cheaper
    objective on mass ties.  Every accepted move strictly reduces the mass,
    so the loop terminates; cost clean-up is local search's job.
    """
    par = problem.params
    a = (problem.cov_ok | problem.cov_nok).astype(np.int64)
    d = problem.cov_ok.astype(np.int64) - problem.cov_nok.astype(np.int64)
    costs = problem.rule_costs()
    sel = sel.copy()
    c = a @ sel
    p = d @ sel

    def masses(cmat: np.ndarray, pmat: np.ndarray) -> np.ndarray:
        """Violation mass per candidate state (one column per move)."""
        covered = (cmat >= 1).sum(axis=0)
        errors = ((cmat >= 1) & (pmat <= 0)).sum(axis=0)
        out = np.maximum(cmat - par.maxcover, 0).sum(axis=0).astype(float)
        out += np.maximum(0.0, errors - (problem.init_error + par.alpha) * covered)
        out += np.maximum(0.0, problem.n * (1.0 - par.beta) - covered)
        out += np.maximum(0.0, (cmat >= 2).sum(axis=0) - par.maxoverlap * covered)
        return out

    mass = _violation_mass(c, p, problem)
    for _ in range(2 * problem.n + 8):
        if mass <= 0:
            break
        inside = np.flatnonzero(sel)
        outside = np.flatnonzero(~sel)
        best = None  # (new_mass, cost_delta, kind, i, j)
        if inside.size:
            md = masses(c[:, None] - a[:, inside], p[:, None] - d[:, inside])
            k = int(np.lexsort((costs[inside], md))[0])
            if md[k] < mass - _TOL:
                best = (md[k], -costs[inside[k]], "drop", inside[k], -1)
        ma = None
        if outside.size:
            ma = masses(c[:, None] + a[:, outside], p[:, None] + d[:, outside])
            k = int(np.lexsort((costs[outside], ma))[0])
            if ma[k] < mass - _TOL and (best is None or (ma[k], costs[outside[k]]) < best[:2]):
                best = (ma[k], costs[outside[k]], "add", -1, outside[k])
        if best is None and inside.size and outside.size:
            # single moves stall; scan all drop+add swaps
            for i in inside:
                ci = c - a[:, i]
                pi = p - d[:, i]
                ms = masses(ci[:, None] + a[:, outside], pi[:, None] + d[:, outside])
                k = int(np.lexsort((costs[outside], ms))[0])
                if ms[k] < mass - _TOL and (best is None or ms[k] < best[0]):
                    best = (ms[k], costs[outside[k]] - costs[i], "swap", i, outside[k])
        ops = None
        if best is not None:
            mass = best[0]
            ops = [(best[3], -1)] if best[2] in ("drop", "swap") else []
            if best[2] in ("add", "swap"):
                ops.append((best[4], +1))
        else:
            # full stall: two-step lookahead — optional drop, then two adds,
            # letting the first add go uphill (e.g. outvoting needs a pair)
            found = None
            for i in (None, *inside):
                ci = c if i is None else c - a[:, i]
                pi = p if i is None else p - d[:, i]
                m1 = masses(ci[:, None] + a[:, outside], pi[:, None] + d[:, outside])
                for k1 in np.argsort(m1, kind="stable")[:16]:
                    j1 = outside[k1]
                    cj = ci + a[:, j1]
                    pj = pi + d[:, j1]
                    m2 = masses(cj[:, None] + a[:, outside], pj[:, None] + d[:, outside])
                    m2[k1] = np.inf
                    k2 = int(np.argmin(m2))
                    if m2[k2] < mass - _TOL and (found is None or m2[k2] < found[0]):
                        found = (m2[k2], i, j1, outside[k2])
            if found is not None:
                mass = found[0]
                ops = ([] if found[1] is None else [(found[1], -1)])
                ops += [(found[2], +1), (found[3], +1)]
        if ops is None:
            break
        for idx, sign in ops:
            sel[idx] = sign > 0
            c += sign * a[:, idx]
            p += sign * d[:, idx]
    return sel


def solve_heuristic(problem: SelectionProblem, seed: int = 0, restarts: int = 5) -> SelectionSolution:
    """Randomized greedy construction plus local search, best of ``restarts``.

    Restart 0 is the pure deterministic greedy; later restarts randomize
    tie-breaking through derived, scheduling-independent seeds.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    start = time.perf_counter()
    costs = problem.rule_costs()
    best_sel = None
    best_obj = math.inf
    best_restart = -1
    fallback = None  # least-violating infeasible attempt, for diagnostics

    for r in range(restarts):
        rng = None if r == 0 else derive_rng(seed, "restart", r)
        sel = _construct(problem, rng, rcl=0.0 if r == 0 else 0.15)
        if check_feasible(sel, problem):
            cover = (problem.cov_ok | problem.cov_nok).astype(np.int64)
            pdelta = problem.cov_ok.astype(np.int64) - problem.cov_nok.astype(np.int64)
            mass = _violation_mass(cover @ sel, pdelta @ sel, problem)
            if fallback is None or mass < fallback[1]:
                fallback = (sel, mass)
            continue
        sel = _local_search(problem, sel)
        obj = float(costs @ sel)
        if obj < best_obj - _TOL:
            best_sel, best_obj, best_restart = sel, obj, r

    elapsed = time.perf_counter() - start
    if best_sel is None:
        sel = fallback[0] if fallback is not None else np.zeros(problem.m, dtype=bool)
        violations = check_feasible(sel, problem)
        return SelectionSolution(
            is_selected=np.zeros(problem.m, dtype=bool),
            objective=math.inf,
            status="infeasible",
            stats={
                "restarts": restarts,
                "time": elapsed,
                "best_attempt_selected": int(sel.sum()),
                "best_attempt_violations": [v.message for v in violations],
            },
        )
    return SelectionSolution(
        is_selected=best_sel,
        objective=best_obj,
        status="feasible",
        stats={"restarts": restarts, "winning_restart": best_restart, "time": elapsed},
        indicators=derive_indicators(best_sel, problem),
    )


def solve_exact(problem: SelectionProblem, node_limit: int = 2_000_000,
                time_limit: float | None = 60.0) -> SelectionSolution:
    """Depth-first branch and bound over selection bits, smallest cost first.

    The lower bound adds to the current cost the cheapest way the coverage
    floor could still be met: ceil(deficit / best remaining cover) rules at
    the minimum remaining cost.  Indicator variables are never branched on;
    they are forced by the selection.
    """
    start = time.perf_counter()
    m, n = problem.m, problem.n
    costs = problem.rule_costs()
    order = np.argsort(costs, kind="stable")
    cost_ord = costs[order]
    cover_ord = (problem.cov_ok | problem.cov_nok)[:, order].astype(np.int64)
    pdelta_ord = (problem.cov_ok.astype(np.int64) - problem.cov_nok.astype(np.int64))[:, order]
    cover_sizes = cover_ord.sum(axis=0)
    suffix_max_cover = np.zeros(m + 1, dtype=np.int64)
    for k in range(m - 1, -1, -1):
        suffix_max_cover[k] = max(suffix_max_cover[k + 1], cover_sizes[k])
    need = problem.coverage_floor()

    warm = _construct(problem, rng=None)
    if not check_feasible(warm, problem):  # no violations: usable incumbent
        warm = _local_search(problem, warm)
        best_obj = float(costs @ warm)
        best_sel = warm[order].copy()  # incumbents live in cost order
    else:
        best_obj = math.inf
        best_sel = None

    chosen = np.zeros(m, dtype=bool)
    c = np.zeros(n, dtype=np.int64)
    p = np.zeros(n, dtype=np.int64)
    state = {"nodes": 0, "stopped": False}
    maxcover = problem.params.maxcover

    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * m + 1000))

    def dfs(k: int, cost: float, covered: int) -> None:
        nonlocal best_obj, best_sel
        if state["stopped"]:
            return
        state["nodes"] += 1
        if state["nodes"] >= node_limit:
            state["stopped"] = True
            return
        if time_limit is not None and state["nodes"] % 1024 == 0:
            if time.perf_counter() - start > time_limit:
                state["stopped"] = True
                return

        bound = cost
        deficit = need - covered
        if deficit > 0:
            if k >= m or suffix_max_cover[k] == 0:
                return
            bound += math.ceil(deficit / suffix_max_cover[k]) * cost_ord[k]
        if bound >= best_obj - _TOL:
            return

        if k == m:
            if _feasible_counts(c, p, problem) and cost < best_obj - _TOL:
                best_obj = cost
                best_sel = chosen.copy()
            return

        col = cover_ord[:, k]
        c_new = c + col
        if c_new.max() <= maxcover:
            chosen[k] = True
            newly = covered + int(((c == 0) & (col > 0)).sum())
            c[:] = c_new
            p[:] += pdelta_ord[:, k]
            dfs(k + 1, cost + cost_ord[k], newly)
            c[:] -= col
            p[:] -= pdelta_ord[:, k]
            chosen[k] = False
        dfs(k + 1, cost, covered)

    dfs(0, 0.0, 0)
    elapsed = time.perf_counter() - start
    stats = {"nodes": state["nodes"], "time": elapsed, "limit_hit": state["stopped"]}

    if best_sel is None:
        status = "limit" if state["stopped"] else "infeasible"
        return SelectionSolution(
            is_selected=np.zeros(m, dtype=bool),
            objective=math.inf,
            status=status,
            stats=stats,
        )
    # map back from cost order to original rule order
    sel = np.zeros(m, dtype=bool)
    sel[order[best_sel]] = True
    status = "feasible" if state["stopped"] else "optimal"
    return SelectionSolution(
        is_selected=sel,
        objective=float(costs @ sel),
        status=status,
        stats=stats,
        indicators=derive_indicators(sel, problem),
    )


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _write_expr(fh, name: str, terms: list[tuple[float, str]], op: str, rhs: float) -> bool:
    """Write one constraint line; skip it when every coefficient is zero."""
    terms = [(coef, var) for coef, var in terms if coef != 0.0]
    if not terms:
        return False
    parts = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {var}")
    body = " ".join(parts)
    fh.write(f" {name}: {body} {op} {_fmt(rhs)}\n")
    return True


def export_lp(problem: SelectionProblem, path) -> Path:
    """Write the full model in LP text format with binary declarations."""
    par = problem.params
    m, n = problem.m, problem.n
    costs = problem.rule_costs()
    a = (problem.cov_ok | problem.cov_nok).astype(np.int64)
    pmat = problem.cov_ok.astype(np.int64) - problem.cov_nok.astype(np.int64)
    path = Path(path)

    with path.open("w") as fh:
        fh.write(f"\\ rule selection model: {m} rules, {n} instances\n")
        fh.write(f"\\ weights w0={_fmt(par.w0)} w1={_fmt(par.w1)} w2={_fmt(par.w2)} w3={_fmt(par.w3)}\n")
        fh.write(f"\\ maxcover={par.maxcover} maxoverlap={_fmt(par.maxoverlap)} "
                 f"alpha={_fmt(par.alpha)} beta={_fmt(par.beta)} init_error={_fmt(problem.init_error)}\n")
        fh.write(f"\\ preselection floors: confidence>={_fmt(problem.t_conf)} coverage>={_fmt(problem.t_cov)}\n")
        fh.write("Minimize\n obj:")
        for j in range(m):
            sep = "\n  " if j % 8 == 0 and j > 0 else " "
            lead = "+ " if j > 0 else ""
            fh.write(f"{sep}{lead}{_fmt(costs[j])} sel_{j}")
        fh.write("\nSubject To\n")

        fh.write("\\ family 1: per-instance cover cap\n")
        for i in range(n):
            terms = [(float(a[i, j]), f"sel_{j}") for j in range(m)]
            _write_expr(fh, f"cap_{i}", terms, "<=", float(par.maxcover))

        fh.write("\\ family 2: error indicator link (err_i = 0 iff vote score >= 1)\n")
        for i in range(n):
            base = [(float(pmat[i, j]), f"sel_{j}") for j in range(m)]
            _write_expr(fh, f"errhi_{i}", base + [(float(par.maxcover), f"err_{i}")],
                        "<=", float(par.maxcover))
            _write_expr(fh, f"errlo_{i}", base + [(float(1 + par.maxcover), f"err_{i}")],
                        ">=", 1.0)

        fh.write("\\ family 3: accuracy budget over covered instances\n")
        acc_terms = [(1.0, f"err_{i}") for i in range(n)]
        acc_terms += [(1.0 - problem.init_error - par.alpha, f"cov_{i}") for i in range(n)]
        _write_expr(fh, "acc", acc_terms, "<=", float(n))

        fh.write("\\ family 4: coverage indicator link and floor\n")
        for i in range(n):
            base = [(float(a[i, j]), f"sel_{j}") for j in range(m)]
            _write_expr(fh, f"covhi_{i}", base + [(-float(par.maxcover), f"cov_{i}")], "<=", 0.0)
            _write_expr(fh, f"covlo_{i}", base + [(-1.0, f"cov_{i}")], ">=", 0.0)
        _write_expr(fh, "covmin", [(1.0, f"cov_{i}") for i in range(n)],
                    ">=", n * (1.0 - par.beta))

        fh.write("\\ family 5: overlap indicator link and budget\n")
        for i in range(n):
            base = [(float(a[i, j]), f"sel_{j}") for j in range(m)]
            _write_expr(fh, f"ovlhi_{i}", base + [(float(1 - par.maxcover), f"ovl_{i}")], "<=", 1.0)
            _write_expr(fh, f"ovllo_{i}", base + [(-2.0, f"ovl_{i}")], ">=", 0.0)
        _write_expr(fh, "ovlbud",
                    [(1.0, f"ovl_{i}") for i in range(n)]
                    + [(-par.maxoverlap, f"cov_{i}") for i in range(n)],
                    "<=", 0.0)

        fh.write("Binary\n")
        names = [f"sel_{j}" for j in range(m)]
        names += [f"cov_{i}" for i in range(n)]
        names += [f"err_{i}" for i in range(n)]
        names += [f"ovl_{i}" for i in range(n)]
        for k in range(0, len(names), 12):
            fh.write(" " + " ".join(names[k:k + 12]) + "\n")
        fh.write("End\n")
    return path
