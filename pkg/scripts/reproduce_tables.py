"""Generate the four factor tables and compare them with the shipped references.

    python scripts/reproduce_tables.py --out results/tables --jobs 4
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from tradeability.american_pide import GridSpec
from tradeability.premium import compare_tables, generate_table, reference_grid, reference_table

TABLES = ("det-b0", "det-bneg", "exp-b0", "exp-bneg")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/tables")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--n-space", type=int, default=800)
    ap.add_argument("--only", nargs="*", choices=TABLES, default=TABLES)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for which in args.only:
        grid, kind = reference_grid(which)
        t0 = time.perf_counter()
        tab = generate_table(grid, kind, GridSpec(n_space=args.n_space), jobs=args.jobs)
        secs = time.perf_counter() - t0
        (out / f"{which}.csv").write_text(tab.to_csv())
        (out / f"{which}.json").write_text(tab.to_json())
        cmp = compare_tables(tab, reference_table(which))
        d = np.array([c["delta"] for c in cmp["cells"]])
        worst = max(cmp["cells"], key=lambda c: abs(c["delta"]))
        summary[which] = {"seconds": round(secs, 2), "max_abs_delta": cmp["max_abs_delta"],
                          "mean_delta": float(np.nanmean(d)), "within_0.005": int(np.sum(np.abs(d) <= 0.005)),
                          "cells": len(d), "worst": worst, "errors": len(tab.errors)}
        (out / f"{which}-deviations.json").write_text(json.dumps(cmp, indent=2))
        print(f"{which}: {secs:6.1f} s  max|d|={cmp['max_abs_delta']:.4f}  "
              f"within 0.005: {summary[which]['within_0.005']}/{len(d)}  "
              f"worst {worst['sigma_x']}/{worst['horizon']}/{worst['e0']}/{worst['jump']}/{worst['rho']:+.1f} "
              f"ours={worst['ours']:.4f} ref={worst['reference']:.3f}")
    (out / "summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
