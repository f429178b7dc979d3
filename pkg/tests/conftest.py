import math

import pytest
from hypothesis import HealthCheck, settings

from tradeability.levy_core import AssetAggregates, ProjectModel, esscher_shift

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

R, PHI_X1, SIGMA = 0.0225, 0.005, 0.2
JUMPS = {"none": (0.0, 0.0), "log(0.85)": (math.log(0.85), 0.5), "log(0.7)": (math.log(0.7), 0.5)}


def make_em(b=-0.04, rho=-0.5, sigma_x=0.2, jump="none", r=R, phi_x1=PHI_X1, sigma=SIGMA):
    phi, lam = JUMPS[jump]
    return esscher_shift(ProjectModel(b, sigma, phi, lam), AssetAggregates(phi_x1, sigma_x, rho, r))


@pytest.fixture(params=list(JUMPS))
def jump(request):
    return request.param


_TABLES = {}


def det_table(which):
    """Deterministic reference-grid table, computed once per session with its wall time."""
    import time

    from tradeability.premium import generate_table, reference_grid

    if which not in _TABLES:
        t0 = time.perf_counter()
        grid, kind = reference_grid(which)
        tab = generate_table(grid, kind)
        _TABLES[which] = (tab, time.perf_counter() - t0)
    return _TABLES[which]


ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str):
    line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
