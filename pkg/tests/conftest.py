from types import SimpleNamespace

import numpy as np
import pytest

from splitkit.operators import BoxResolvent, RowSplitOperator

_acceptance = []


def boxed_problem(dim=6, mu=0.5, c0=2.0, seed=0):
    """Problem with a box constraint active at a known solution.

    ``A = N_[0,1]^dim``, ``B = (mu I + S)`` row split, ``C(z) = c0 (z - a)`` with
    ``a`` chosen so that a prescribed ``x*`` (some coordinates at the bounds)
    solves the inclusion.
    """
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((dim, dim))
    M = mu * np.eye(dim) + 0.5 * (R - R.T)
    x_star = rng.uniform(0.2, 0.8, dim)
    normal = np.zeros(dim)
    x_star[0], normal[0] = 1.0, 1.5  # upper bound active
    x_star[1], normal[1] = 0.0, -0.7  # lower bound active
    a = x_star + (M @ x_star + normal) / c0
    return SimpleNamespace(
        resolvent=BoxResolvent(0.0, 1.0),
        B=RowSplitOperator(M),
        C=lambda z: c0 * (z - a),
        beta=1.0 / c0,
        lipschitz_B=float(np.linalg.norm(M, 2)),
        x0=rng.standard_normal(dim),
        x_star=x_star,
        dim=dim,
    )


@pytest.fixture
def boxed():
    return boxed_problem()


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.duration))
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  ({duration:.2f} s)")
