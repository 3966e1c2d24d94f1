import numpy as np
import pytest
from hypothesis import settings

from sced_compress.grid import compute_ptdf, load_case
from sced_compress.scenario import region_map

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# acceptance criterion -> list of (test nodeid, outcome); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def case3():
    return load_case("case3")


@pytest.fixture(scope="session")
def case6():
    return load_case("case6")


@pytest.fixture(scope="session")
def case118():
    return load_case("case118")


@pytest.fixture(scope="session")
def fixtures(case6, case118):
    """(case, ptdf, affine map) for the two dispatch fixtures."""
    return {c.name: (c, compute_ptdf(c), region_map(c)) for c in (case6, case118)}


def pytest_runtest_logreport(report):
    crit = None
    for kw in report.keywords:
        if kw.startswith("criterion_"):
            crit = int(kw.split("_")[1])
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        ACCEPTANCE.setdefault(crit, []).append(report.outcome)


def pytest_configure(config):
    for k in range(1, 11):
        config.addinivalue_line("markers", f"criterion_{k}: acceptance criterion {k}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        outs = ACCEPTANCE[k]
        ok = all(o == "passed" for o in outs)
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} ({len(outs)} checks)")


def brute_dc_flows(case, inj):
    """DC power flow oracle: solve B theta = P with the slack angle fixed at 0."""
    n = case.n_bus
    B = np.zeros((n, n))
    for f, t, x in zip(case.line_from, case.line_to, case.line_x):
        B[f, f] += 1 / x
        B[t, t] += 1 / x
        B[f, t] -= 1 / x
        B[t, f] -= 1 / x
    keep = [k for k in range(n) if k != case.slack]
    theta = np.zeros(n)
    theta[keep] = np.linalg.solve(B[np.ix_(keep, keep)], inj[keep])
    return (theta[case.line_from] - theta[case.line_to]) / case.line_x
