"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from rfrules.dataset import Dataset, generate_xor
from rfrules.optimize import SelectionParams, SelectionProblem

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


# ---------------------------------------------------------------- datasets

def make_dataset(attributes, class_levels, rows, labels, class_name="Y") -> Dataset:
    """Encode string rows/labels against explicit level vocabularies."""
    enc = [{lev: i for i, lev in enumerate(levels)} for _, levels in attributes]
    cenc = {lev: i for i, lev in enumerate(class_levels)}
    coded = np.array(
        [[enc[j][cell] for j, cell in enumerate(rec)] for rec in rows],
        dtype=np.int64,
    ).reshape(len(rows), len(attributes))
    return Dataset(
        attributes=tuple((name, tuple(levels)) for name, levels in attributes),
        class_name=class_name,
        class_levels=tuple(class_levels),
        rows=coded,
        labels=np.array([cenc[v] for v in labels], dtype=np.int64),
    )


def random_dataset(rng: np.random.Generator, n=40, p=3, max_levels=4, n_classes=2) -> Dataset:
    """Small random categorical dataset where every level appears at least once."""
    attributes = []
    cols = []
    for j in range(p):
        k = int(rng.integers(2, max_levels + 1))
        col = rng.integers(0, k, size=n)
        col[rng.permutation(n)[:k]] = np.arange(k)  # force every level in
        attributes.append((f"V{j + 1}", tuple(f"V{j + 1}L{v + 1}" for v in range(k))))
        cols.append(col)
    labels = rng.integers(0, n_classes, size=n)
    labels[rng.permutation(n)[:n_classes]] = np.arange(n_classes)
    return Dataset(
        attributes=tuple(attributes),
        class_name="Y",
        class_levels=tuple(f"c{v}" for v in range(n_classes)),
        rows=np.stack(cols, axis=1),
        labels=labels,
    )


@pytest.fixture(scope="session")
def xor840() -> Dataset:
    return generate_xor(seed=0, n=840)


# ------------------------------------------------- random selection problems

def random_problem(rng: np.random.Generator, m_max=12, n_max=60) -> SelectionProblem:
    """Random selection problem; parameters loose enough to often be feasible."""
    m = int(rng.integers(3, m_max + 1))
    n = int(rng.integers(8, n_max + 1))
    cover = rng.random((n, m)) < rng.uniform(0.2, 0.7)
    for j in range(m):
        if not cover[:, j].any():
            cover[int(rng.integers(n)), j] = True
    ok = cover & (rng.random((n, m)) < rng.uniform(0.55, 1.0))
    nok = cover & ~ok
    params = SelectionParams(
        w0=float(rng.uniform(0.2, 1.5)),
        w1=float(rng.uniform(0.2, 1.5)),
        w2=float(rng.uniform(0.0, 0.5)),
        w3=float(rng.uniform(0.0, 0.2)),
        maxcover=int(rng.integers(2, 5)),
        maxoverlap=float(rng.uniform(0.3, 0.8)),
        alpha=float(rng.uniform(0.05, 0.25)),
        beta=float(rng.uniform(0.1, 0.4)),
    )
    return SelectionProblem(
        confidence=rng.uniform(0.5, 1.0, m),
        coverage=cover.mean(axis=0),
        att_ratio=rng.uniform(0.1, 1.0, m),
        levels_ratio=rng.uniform(0.05, 1.0, m),
        cov_ok=ok,
        cov_nok=nok,
        init_error=float(rng.uniform(0.0, 0.15)),
        params=params,
    )


def brute_force_solve(problem: SelectionProblem):
    """Enumerate all 2^m selections with independently recomputed costs and
    constraints; returns (best objective, best selection, feasible count)."""
    m, n = problem.m, problem.n
    par = problem.params
    sels = ((np.arange(2 ** m)[:, None] >> np.arange(m)) & 1).astype(bool)
    ok = problem.cov_ok.astype(np.int64)
    nok = problem.cov_nok.astype(np.int64)
    c = sels @ (ok + nok).T
    p = sels @ (ok - nok).T
    covered_mask = c >= 1
    n_covered = covered_mask.sum(axis=1)
    n_errors = (covered_mask & (p <= 0)).sum(axis=1)
    n_overlap = (c >= 2).sum(axis=1)

    feas = (c <= par.maxcover).all(axis=1)
    feas &= n_errors <= (problem.init_error + par.alpha) * n_covered + 1e-9
    feas &= n_covered >= math.ceil(n * (1.0 - par.beta) - 1e-9)
    feas &= n_overlap <= par.maxoverlap * n_covered + 1e-9

    rule_cost = (1.0
                 + par.w0 * (1.0 - problem.confidence)
                 + par.w1 * (1.0 - problem.coverage)
                 + par.w2 * problem.att_ratio
                 + par.w3 * problem.levels_ratio)
    total = sels @ rule_cost
    if not feas.any():
        return None, None, 0
    best = int(np.argmin(np.where(feas, total, np.inf)))
    return float(total[best]), sels[best], int(feas.sum())


def feasible_problem(seed: int, m_max=12, n_max=60) -> SelectionProblem:
    """Seeded random problem redrawn until brute force finds a solution."""
    for attempt in range(200):
        rng = np.random.default_rng((seed + 1) * 10_000 + attempt)
        problem = random_problem(rng, m_max=m_max, n_max=n_max)
        best, _, _ = brute_force_solve(problem)
        if best is not None:
            return problem
    raise AssertionError(f"no feasible random problem found for seed {seed}")


# ----------------------------------------------------- acceptance reporting

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_acceptance(criterion: int, ok: bool, detail: str) -> None:
    _ACCEPTANCE[criterion] = (bool(ok), detail)


@pytest.fixture(scope="session")
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(
            f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})"
        )
