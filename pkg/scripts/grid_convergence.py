"""Factor changes under repeated grid refinement for a few table cells.

    python scripts/grid_convergence.py
"""

import math

from tradeability.american_pide import GridSpec, solve_american
from tradeability.european import euro_price
from tradeability.levy_core import AssetAggregates, ProjectModel, esscher_shift

CELLS = [  # b, rho, sigma_x, phi, lambda, T, E0
    (0.0, -0.5, 0.2, 0.0, 0.0, 0.5, 0.9),
    (-0.04, -0.5, 0.2, 0.0, 0.0, 5.0, 1.2),
    (-0.04, -0.5, 0.4, math.log(0.7), 0.5, 0.5, 0.9),
    (-0.04, -0.5, 0.4, math.log(0.7), 0.5, 5.0, 1.2),
]


def main():
    for b, rho, sx, phi, lam, T, e0 in CELLS:
        em = esscher_shift(ProjectModel(b, 0.2, phi, lam), AssetAggregates(0.005, sx, rho, 0.0225))
        ce = euro_price(T, e0, em).price
        prev = None
        print(f"b={b} rho={rho} sx={sx} phi={phi:.3f} T={T} E0={e0}")
        for k in (1, 2, 4, 8):
            g = GridSpec().refined(k) if k > 1 else GridSpec()
            f = ce / (ce + solve_american(T, em, g).premium(e0))
            diff = "" if prev is None else f"  change {f - prev:+.2e}"
            print(f"  n_space={g.n_space:5d} steps/yr={g.steps_per_year:5.0f}  factor {f:.6f}{diff}")
            prev = f


if __name__ == "__main__":
    main()
