#!/usr/bin/env python3
"""Generate the small synthetic categorical datasets used by the benchmark,
the ablation study, and the test suite.

Each dataset plants a few crisp rules over two or three attributes, fills the
remaining attributes with uniform noise, and flips a small fraction of labels
so that forests stay imperfect.  The flip rate is kept near 1%: a forest grown
to purity partially memorizes flipped rows while threshold-filtered rules
cannot, so much beyond that the optimizer's error budget (forest training
error + alpha) becomes unattainable for any rule selection.  Attribute order
and level vocabularies are fixed, so a given seed always produces
byte-identical CSVs.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from rfrules.dataset import Dataset, save_csv
from rfrules.seeding import derive_rng


def _assemble(index: int, seed: int, n: int, attributes, classes, assign, noise: float) -> Dataset:
    rng = derive_rng(seed, "dataset", index)
    rows = np.stack(
        [rng.integers(0, len(levels), size=n) for _, levels in attributes], axis=1)
    labels = assign(rows).astype(np.int64)
    flip = rng.random(n) < noise
    shift = rng.integers(1, len(classes), size=n)
    labels = np.where(flip, (labels + shift) % len(classes), labels)
    return Dataset(attributes=tuple(attributes), class_name="class",
                   class_levels=tuple(classes), rows=rows, labels=labels)


def make_cards(seed: int = 0, n: int = 320) -> Dataset:
    """win iff (suit in {S1,S2} and rank in {R1,R2}) or (color=C1 and deck=D1)."""
    attributes = (
        ("suit", ("S1", "S2", "S3", "S4")),
        ("rank", ("R1", "R2", "R3", "R4")),
        ("color", ("C1", "C2")),
        ("deck", ("D1", "D2", "D3")),
    )

    def assign(rows):
        first = (rows[:, 0] <= 1) & (rows[:, 1] <= 1)
        second = (rows[:, 2] == 0) & (rows[:, 3] == 0)
        return (first | second).astype(np.int64)

    return _assemble(0, seed, n, attributes, ("lose", "win"), assign, noise=0.01)


def make_fungi(seed: int = 0, n: int = 360) -> Dataset:
    """odor=foul -> poison; gill=white and ring=yes -> edible; else unknown."""
    attributes = (
        ("cap", ("flat", "dome", "bell")),
        ("stem", ("short", "tall")),
        ("gill", ("white", "pink", "brown")),
        ("odor", ("none", "sweet", "foul")),
        ("ring", ("yes", "no")),
        ("spore", ("A", "B")),
    )

    def assign(rows):
        out = np.full(len(rows), 2, dtype=np.int64)
        out[(rows[:, 2] == 0) & (rows[:, 4] == 0)] = 1
        out[rows[:, 3] == 2] = 0
        return out

    return _assemble(1, seed, n, attributes, ("poison", "edible", "unknown"),
                     assign, noise=0.01)


def make_loans(seed: int = 0, n: int = 340) -> Dataset:
    """approve iff (credit good+ and income not low) or (owner=yes and term=short)."""
    attributes = (
        ("income", ("low", "mid", "high")),
        ("credit", ("poor", "fair", "good", "excellent")),
        ("term", ("short", "long")),
        ("owner", ("yes", "no")),
        ("region", ("N", "S", "E", "W")),
    )

    def assign(rows):
        first = (rows[:, 1] >= 2) & (rows[:, 0] != 0)
        second = (rows[:, 3] == 0) & (rows[:, 2] == 0)
        return (first | second).astype(np.int64)

    return _assemble(2, seed, n, attributes, ("deny", "approve"), assign, noise=0.012)


def make_shifts(seed: int = 0, n: int = 300) -> Dataset:
    """night -> risky; staff=low and load=heavy -> tight; else ok."""
    attributes = (
        ("day", ("mon", "tue", "wed", "thu", "fri")),
        ("time", ("early", "late", "night")),
        ("staff", ("low", "high")),
        ("season", ("winter", "summer")),
        ("load", ("light", "heavy")),
    )

    def assign(rows):
        out = np.zeros(len(rows), dtype=np.int64)
        out[(rows[:, 2] == 0) & (rows[:, 4] == 1)] = 1
        out[rows[:, 1] == 2] = 2
        return out

    return _assemble(3, seed, n, attributes, ("ok", "tight", "risky"), assign, noise=0.01)


def make_signals(seed: int = 0, n: int = 280) -> Dataset:
    """clear iff power=P3 or (band in {B1,B2} and mod=FM)."""
    attributes = (
        ("band", ("B1", "B2", "B3", "B4")),
        ("power", ("P1", "P2", "P3")),
        ("mod", ("AM", "FM")),
        ("antenna", ("A1", "A2")),
    )

    def assign(rows):
        clear = (rows[:, 1] == 2) | ((rows[:, 0] <= 1) & (rows[:, 2] == 1))
        return clear.astype(np.int64)

    return _assemble(4, seed, n, attributes, ("noisy", "clear"), assign, noise=0.012)


def make_weather(seed: int = 0, n: int = 380) -> Dataset:
    """wind=strong and front=yes -> storm; sky=overcast and humid=high -> rain."""
    attributes = (
        ("sky", ("clear", "cloudy", "overcast")),
        ("wind", ("calm", "breezy", "strong")),
        ("humid", ("low", "high")),
        ("temp", ("cold", "mild", "hot")),
        ("pressure", ("low", "high")),
        ("front", ("yes", "no")),
    )

    def assign(rows):
        out = np.zeros(len(rows), dtype=np.int64)
        out[(rows[:, 0] == 2) & (rows[:, 2] == 1)] = 1
        out[(rows[:, 1] == 2) & (rows[:, 5] == 0)] = 2
        return out

    return _assemble(5, seed, n, attributes, ("dry", "rain", "storm"), assign, noise=0.01)


BUILDERS = {
    "cards": make_cards,
    "fungi": make_fungi,
    "loans": make_loans,
    "shifts": make_shifts,
    "signals": make_signals,
    "weather": make_weather,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="data")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, build in BUILDERS.items():
        ds = build(seed=args.seed)
        save_csv(ds, outdir / f"{name}.csv")
        print(f"{name}: {ds.n} rows, {ds.p} attributes, {ds.n_classes} classes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
