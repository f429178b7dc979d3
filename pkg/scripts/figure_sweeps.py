"""Factor sweeps over horizon, jump size and correlation, for both intensities.

    python scripts/figure_sweeps.py --out results/figures
"""

import argparse
import csv
import math
import warnings
from pathlib import Path

import numpy as np

from tradeability.premium import BaseScenario, figure_series, zero_premium_rho

SWEEPS = {
    "horizon": np.linspace(0.1, 5.0, 25),
    "jump_size": np.log(np.linspace(0.5, 0.99, 25)),
    "correlation": np.linspace(-0.9, 0.9, 19),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/figures")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for intensity in ("base", "high"):
        base = BaseScenario.from_data(high_intensity=intensity == "high")
        rho_star = zero_premium_rho(base.b, base.sigma, base.sigma_x, base.r, base.phi_x1)
        for param, values in SWEEPS.items():
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                rec = figure_series(param, values, base)
            path = out / f"{param}-{intensity}.csv"
            with path.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rec[0]), lineterminator="\n")
                w.writeheader()
                for r in rec:
                    w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in r.items()})
            det = [r["det"] for r in rec]
            sto = [r["stoch"] for r in rec]
            print(f"{intensity:>4} {param:<11} det [{np.nanmin(det):.3f}, {np.nanmax(det):.3f}] "
                  f"stoch [{np.nanmin(sto):.3f}, {np.nanmax(sto):.3f}] skipped {len(caught)}")
        print(f"     zero-premium correlation threshold rho* = {rho_star:.4f}"
              + (" (outside [-1, 1])" if not -1 <= rho_star <= 1 else ""))


if __name__ == "__main__":
    main()
