import pytest

CRITERIA = {
    1: "classical Hardy operator: S = 1 and norm lower bound near 2",
    2: "sup target exponent: S equals the norm",
    3: "exponential weights: doubling fails, S_0 and S_1 infinite, sum bounded",
    4: "power weights: verdicts match norm growth under domain doubling",
    5: "extremal polynomials: roots, orthogonality, oracle, local minimality",
    6: "sharp distance: two methods agree and the lower bound holds",
    7: "flat functions: vanishing moments and derivatives",
    8: "Taylor/integral identity for random differential operators",
    9: "differential operator reductions",
}

_outcomes: dict = {}
_criterion_of: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criterion_of[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    n = _criterion_of.get(report.nodeid)
    if n is None:
        return
    ok = _outcomes.setdefault(n, True)
    if report.failed:
        _outcomes[n] = False
    elif report.when == "call" and report.skipped:
        _outcomes[n] = ok


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        verdict = "PASS" if _outcomes[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {CRITERIA.get(n, '')}")
