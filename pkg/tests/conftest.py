"""Shared fixtures: the radial profile and its constants are expensive,
the three acceptance sweeps doubly so, so everything heavy is computed
once per session and reused across test modules.
"""
import warnings

import numpy as np
import pytest

from gpgrav import (
    MinimizeOptions,
    ModelParams,
    SingularSum,
    SingularTerm,
    Trap,
    Zero,
    build_kernel,
    make_grid,
    minimize,
    q0_constants,
    solve_Q,
)
from gpgrav.cli import _run_sweep_for_verify

SWEEP_N = 512

# acceptance tests append (criterion id, name, status, detail) here; the
# terminal-summary hook prints one line per criterion after the run
ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LOG:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for cid, name, status, detail in sorted(ACCEPTANCE_LOG):
        line = f"criterion {cid:2d} [{status}] {name}"
        if detail:
            line += f"  ({detail})"
        tw.write_line(line)


@pytest.fixture(scope="session")
def profile():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return solve_Q()


@pytest.fixture(scope="session")
def coarse_profile():
    """Cheap profile for tests that only need 4-5 correct digits."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return solve_Q(dr=2.5e-3, r_max=20.0, tol=1e-10)


@pytest.fixture(scope="session")
def consts(profile):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return q0_constants(profile)


@pytest.fixture(scope="session")
def grid256():
    return make_grid(8.0, 256)


@pytest.fixture(scope="session")
def kernel256(grid256):
    return build_kernel(grid256)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LOG


@pytest.fixture(scope="session")
def weak_sweep(profile, consts):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return _run_sweep_for_verify(SWEEP_N, profile, consts, 1.0, Zero(),
                                     (0.80, 0.85, 0.90, 0.93, 0.96))


@pytest.fixture(scope="session")
def strong_sweep(profile, consts):
    pot = SingularSum(points=(SingularTerm(z=(0.0, 0.0), p=1.5),))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return _run_sweep_for_verify(SWEEP_N, profile, consts, 1.0, pot,
                                     (0.80, 0.84, 0.87, 0.90))


@pytest.fixture(scope="session")
def border_sweep(profile, consts):
    pot = SingularSum(points=(SingularTerm(z=(0.0, 0.0), p=1.0),))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return _run_sweep_for_verify(SWEEP_N, profile, consts, 1.0, pot,
                                     (0.80, 0.85, 0.90, 0.93, 0.96))


@pytest.fixture(scope="session")
def trap_result(consts, grid256, kernel256):
    params = ModelParams(a=5.0, g=1.0, potential=Trap(q=2.0))
    return minimize(params, grid256, kernel256,
                    MinimizeOptions(consts=consts, max_iter=4000)), params


@pytest.fixture()
def rng():
    return np.random.default_rng(20260822)
