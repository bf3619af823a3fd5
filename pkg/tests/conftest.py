"""Acceptance bookkeeping: one PASS/FAIL line per numbered criterion."""

from collections import defaultdict

import pytest

CRITERIA = {
    1: "isochronous plasma dimensions d=1, d=4",
    2: "non-isochronous dimensions d=2, 3, 5 (spread, verdict, crossing by t=500)",
    3: "calibration roots gamma=-2 and gamma=0.25, control gamma=0",
    4: "Sabatini verdicts agree with numerics; tau/z^6 closed form",
    5: "relativistic tau(1) and increasing period",
    6: "Hopf blow-up times",
    7: "Radon reconstruction equals direct Riccati solve",
    8: "monodromy dichotomy d=1 vs d=2",
    9: "involution-built potentials are isochronous",
    10: "relativistic one-dimensional reduction",
    11: "doping candidate takes negative values",
}

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or rep.failed:
        _outcomes[marker.args[0]].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        ok = all(passed for _, passed in results)
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {CRITERIA.get(n, '')}"
        failed = [name for name, passed in results if not passed]
        if failed:
            line += f"  [failed: {', '.join(failed)}]"
        tr.write_line(line)
