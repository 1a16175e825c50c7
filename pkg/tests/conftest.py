import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import tvising.estimator
import tvising.optimizer
from fixtures import ACCEPTANCE, SOLVE_LOG

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("fast", max_examples=10, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    inner = tvising.optimizer.solve

    def recorded_solve(data, w, u, cfg, theta0=None):
        res = inner(data, w, u, cfg, theta0=theta0)
        SOLVE_LOG.record(data, w, u, cfg, res)
        return res

    tvising.optimizer.solve = recorded_solve
    tvising.estimator.solve = recorded_solve


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name, ok, detail in ACCEPTANCE:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    terminalreporter.write_line(
        f"solver certificates: {SOLVE_LOG.converged} converged solves re-checked, "
        f"worst KKT residual {SOLVE_LOG.worst:.3g}, {len(SOLVE_LOG.violations)} violations, "
        f"{SOLVE_LOG.unconverged} unconverged (expected only in max_iter tests)"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
