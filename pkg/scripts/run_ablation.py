#!/usr/bin/env python3
"""Weight ablation over the synthetic dataset corpus.

Compares the default objective weights against variants that zero out the
confidence reward (w0=0) and the rule-length penalty (w2=0), reporting the
mean confidence and mean length of the selected rules per dataset and
overall.  Directionally, dropping w0 should not raise confidence and
dropping w2 should not shorten rules.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from make_datasets import BUILDERS
from rfrules.pipeline import PipelineConfig, run_pipeline

VARIANTS = {"default": {}, "abl_conf": {"w0": 0.0}, "abl_len": {"w2": 0.0}}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="out/ablation")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rounds", type=int, default=3)
    args = parser.parse_args(argv)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    rows = []
    agg = {v: {"conf": [], "len": []} for v in VARIANTS}
    for name, build in BUILDERS.items():
        ds = build(seed=args.seed)
        for variant, overrides in VARIANTS.items():
            confs, lens = [], []
            for r in range(args.rounds):
                cfg = PipelineConfig(seed=args.seed, **overrides)
                res = run_pipeline(cfg, data=ds, round_index=r, write=False)
                sel = [res.pre.kept_metrics[i] for i in res.solution.selected_indices]
                confs.append(float(np.mean([m.confidence for m in sel])))
                lens.append(float(np.mean([m.att_nbr for m in sel])))
            rows.append({"dataset": name, "variant": variant,
                         "mean_confidence": float(np.mean(confs)),
                         "mean_length": float(np.mean(lens))})
            agg[variant]["conf"].append(np.mean(confs))
            agg[variant]["len"].append(np.mean(lens))
        got = {row["variant"]: row for row in rows if row["dataset"] == name}
        print(f"{name:>10s}  " + "  ".join(
            f"{v}: conf={got[v]['mean_confidence']:.3f} len={got[v]['mean_length']:.2f}"
            for v in VARIANTS))

    with (outdir / "ablation.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["dataset", "variant",
                                                "mean_confidence", "mean_length"])
        writer.writeheader()
        writer.writerows(rows)

    print()
    for variant in VARIANTS:
        print(f"{variant:>10s}: mean confidence {np.mean(agg[variant]['conf']):.4f}, "
              f"mean length {np.mean(agg[variant]['len']):.4f}")
    print(f"table in {outdir / 'ablation.csv'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
