"""Deterministic factor at T against the exponential-horizon factor with mean T.

A sanity envelope only; the two horizons are different contracts.

    python scripts/horizon_envelope.py
"""

import itertools
import math

from tradeability.levy_core import AssetAggregates, ProjectModel
from tradeability.premium import illiquidity_factor_det, illiquidity_factor_stoch

JUMPS = {"none": (0.0, 0.0), "log(0.85)": (math.log(0.85), 0.5), "log(0.7)": (math.log(0.7), 0.5)}


def main():
    worst = 0.0
    print("  b    rho   sx   jump        T    det     exp     |d|")
    for b, rho, sx, (lab, (phi, lam)), T in itertools.product(
            (0.0, -0.04), (-0.5, 0.0), (0.2, 0.4), JUMPS.items(), (0.1, 10.0)):
        m, a = ProjectModel(b, 0.2, phi, lam), AssetAggregates(0.005, sx, rho, 0.0225)
        fd = illiquidity_factor_det(T, 1.0, m, a)
        fs = illiquidity_factor_stoch(1.0 / T, 1.0, m, a)
        worst = max(worst, abs(fd - fs))
        flag = "" if abs(fd - fs) <= 0.05 else "  > 0.05"
        print(f"{b:5.2f} {rho:5.1f} {sx:4.1f} {lab:<10} {T:5.1f} {fd:.4f} {fs:.4f} {abs(fd - fs):.4f}{flag}")
    print(f"largest gap {worst:.4f}")


if __name__ == "__main__":
    main()
